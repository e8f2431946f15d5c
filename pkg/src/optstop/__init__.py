"""Regression Monte Carlo for finite-horizon optimal stopping with look-ahead targets."""

from .bounds import BoundInputs, bound_report
from .lookahead import FittedContinuation, fit_continuation, make_schedule, price
from .oracle import crr_price, exact_dp
from .paths import GBM, Custom, FiniteChain, PathBatch, exact_marginals, simulate
from .payoff import Call, MaxCall, Put, TablePayoff, truncate
from .regress import ApproxSpace, Indicator, Laguerre, Monomials, fit_l2

__all__ = [
    "ApproxSpace", "BoundInputs", "Call", "Custom", "FiniteChain", "FittedContinuation", "GBM",
    "Indicator", "Laguerre", "MaxCall", "Monomials", "PathBatch", "Put", "TablePayoff",
    "bound_report", "crr_price", "exact_dp", "exact_marginals", "fit_continuation", "fit_l2",
    "make_schedule", "price", "simulate", "truncate",
]
