"""Solver for Markovian BSDEs with quadratic-growth or Lipschitz drivers.

The heavy lifting happens in the compiled extension; this package re-exports
the main operations.
"""

from ._qgbsde import (
    black_scholes_call,
    black_scholes_put,
    case_ids,
    converge,
    fit_rate,
    mc_check,
    oracle,
    solve,
    universal_bound,
)

__all__ = [
    "black_scholes_call",
    "black_scholes_put",
    "case_ids",
    "converge",
    "fit_rate",
    "mc_check",
    "oracle",
    "solve",
    "universal_bound",
]
