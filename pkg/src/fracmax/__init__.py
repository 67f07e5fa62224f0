"""Numerical verification of weighted norm inequalities for fractional maximal operators."""
from .bellman import BellmanParams, ExponentSystem, bellman_check, bellman_params, eval_B
from .dyadic import DyadicGrid, GridError, GridFunction, build_pyramid, from_values, load_grid_function
from .harness import (buckley_sharpness_scan, lacey_exponent_chain, theorem_constant,
                      verify_dyadic_theorem, verify_full_theorem)
from .martingale import FiniteFiltration, MartingaleWeight, martingale_ap_char, verify_weighted_doob
from .maximal import dyadic_fractional_maximal, grid_aligned_maximal_bruteforce, psi_sequence
from .muckenhoupt import (ap_characteristic, ap_value, gen_cascade_weight, gen_power_weight,
                          mw_fractional_characteristic)
from .reports import VerificationReport, write_report
from .selfimprove import SelfImprovementResult, improved_exponent, self_improve, solve_s

__all__ = [
    "BellmanParams", "ExponentSystem", "bellman_check", "bellman_params", "eval_B",
    "DyadicGrid", "GridError", "GridFunction", "build_pyramid", "from_values", "load_grid_function",
    "buckley_sharpness_scan", "lacey_exponent_chain", "theorem_constant",
    "verify_dyadic_theorem", "verify_full_theorem",
    "FiniteFiltration", "MartingaleWeight", "martingale_ap_char", "verify_weighted_doob",
    "dyadic_fractional_maximal", "grid_aligned_maximal_bruteforce", "psi_sequence",
    "ap_characteristic", "ap_value", "gen_cascade_weight", "gen_power_weight",
    "mw_fractional_characteristic",
    "VerificationReport", "write_report",
    "SelfImprovementResult", "improved_exponent", "self_improve", "solve_s",
]
