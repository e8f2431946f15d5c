"""Exact reference solutions used to validate the Monte Carlo estimators.

Finite chains are solved by backward induction over transition matrices;
one-dimensional GBM options by a Cox-Ross-Rubinstein tree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .paths import FiniteChain
from .payoff import Payoff

MAX_STATES = 100_000
MAX_PATHS = 10_000_000


class CapacityError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExactSolution:
    """Continuation values ``q``, values ``v`` and stop flags, each (T+1, k)."""

    q: np.ndarray
    v: np.ndarray
    stop: np.ndarray
    payoff: np.ndarray
    value0: float


def payoff_table(chain: FiniteChain, payoff: Payoff) -> np.ndarray:
    """f_t evaluated at every chain state, shape (T+1, k)."""
    return np.stack([payoff.evaluate(t, chain.states) for t in range(chain.T + 1)])


def exact_dp(chain: FiniteChain, payoff: Payoff) -> ExactSolution:
    if chain.k > MAX_STATES:
        raise CapacityError(f"{chain.k} states exceeds the limit of {MAX_STATES}")
    F = payoff_table(chain, payoff)
    T = chain.T
    q = np.empty_like(F)
    q[T] = F[T]
    for t in range(T - 1, -1, -1):
        q[t] = chain.transitions[t] @ np.maximum(F[t + 1], q[t + 1])
    v = np.maximum(F, q)
    stop = q <= F
    return ExactSolution(q, v, stop, F, float(chain.initial @ v[0]))


def conditional_cashflow_moments(chain: FiniteChain, F: np.ndarray, Hv: np.ndarray,
                                 t: int, w: int, powers: Iterable[int] = (1,)) -> list[np.ndarray]:
    """E[cashflow_{t+1:w}(f, h)^p | X_t = x] for each state x and each power p.

    ``F`` and ``Hv`` are (T+1, k) tables of f and h; row T of ``Hv`` is
    overwritten by f_T. Uses the one-step recursion
    ``cf_{s:w} = stop_s f_s + (1 - stop_s) cf_{s+1:w-1}``, which also holds for
    powers because the stop flag is an indicator.
    """
    T = chain.T
    if not 0 <= t < T or not 0 <= w <= T - t - 1:
        raise ValueError(f"need 0 <= t < T and 0 <= w <= T-t-1, got t={t}, w={w}")
    Hv = np.array(Hv, dtype=float)
    Hv[T] = F[T]
    out = []
    for p in powers:
        end = t + 1 + w
        stop = F[end] >= Hv[end]
        m = np.where(stop, F[end], Hv[end]) ** p
        for s in range(end - 1, t, -1):
            stop = F[s] >= Hv[s]
            m = np.where(stop, F[s] ** p, chain.transitions[s] @ m)
        out.append(chain.transitions[t] @ m)
    return out


def enumerate_paths(chain: FiniteChain, start: int = 0, stop: Optional[int] = None,
                    initial: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    """Every state sequence over times start..stop with its probability.

    Returns ``(idx, prob)`` where ``idx`` is (N, stop-start+1). The law at
    ``start`` defaults to the exact marginal.
    """
    from .paths import exact_marginals

    stop = chain.T if stop is None else stop
    length = stop - start + 1
    if chain.k ** length > MAX_PATHS:
        raise CapacityError(f"{chain.k}^{length} paths exceeds the limit of {MAX_PATHS}")
    law = exact_marginals(chain)[start] if initial is None else np.asarray(initial)
    idx = np.array(list(itertools.product(range(chain.k), repeat=length)), dtype=np.int64)
    prob = law[idx[:, 0]].copy()
    for j in range(1, length):
        prob *= chain.transitions[start + j - 1][idx[:, j - 1], idx[:, j]]
    return idx, prob


def bermudan_levels(n_dates: int, steps: int) -> list[int]:
    """Tree levels nearest to n_dates equally spaced exercise dates, time 0 included."""
    return sorted({int(round(i * steps / n_dates)) for i in range(n_dates + 1)})


def crr_price(s0: float, strike: float, rate: float, up: float, steps: int,
              style: str = "american", exercise: Optional[Iterable[int]] = None,
              option: str = "put") -> float:
    """Backward induction on a recombining binomial tree.

    Args:
        rate: continuously compounded interest per tree step.
        up: up factor; the down factor is ``1 / up``.
        style: ``"american"`` (every level), ``"european"`` (maturity only) or
            ``"bermudan"`` (the levels in ``exercise``, plus maturity).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    down = 1.0 / up
    growth = np.exp(rate)
    if not down < growth < up:
        raise ValueError(f"arbitrage: need down < exp(rate) < up, got {down}, {growth}, {up}")
    if option not in ("put", "call"):
        raise ValueError(f"unknown option type {option!r}")
    if style == "american":
        levels = set(range(steps + 1))
    elif style == "european":
        levels = {steps}
    elif style == "bermudan":
        if exercise is None:
            raise ValueError("bermudan style needs exercise levels")
        levels = set(exercise) | {steps}
    else:
        raise ValueError(f"unknown exercise style {style!r}")

    p = (growth - down) / (up - down)
    disc = np.exp(-rate)
    sign = 1.0 if option == "call" else -1.0

    def intrinsic(j):
        spots = s0 * up ** (2.0 * np.arange(j + 1) - j)
        return np.maximum(sign * (spots - strike), 0.0)

    values = intrinsic(steps)
    for j in range(steps - 1, -1, -1):
        values = disc * (p * values[1:] + (1 - p) * values[:-1])
        if j in levels:
            values = np.maximum(values, intrinsic(j))
    return float(values[0])


def crr_market_price(s0: float, strike: float, r: float, sigma: float, maturity: float,
                     steps: int, n_dates: Optional[int] = None, option: str = "put") -> float:
    """CRR price from annualized market inputs, with up = exp(sigma sqrt(dt)).

    ``n_dates=None`` prices the American option; otherwise exercise is
    allowed on ``n_dates`` equally spaced dates snapped to tree levels.
    """
    dt = maturity / steps
    up = float(np.exp(sigma * np.sqrt(dt)))
    if n_dates is None:
        return crr_price(s0, strike, r * dt, up, steps, "american", option=option)
    return crr_price(s0, strike, r * dt, up, steps, "bermudan",
                     bermudan_levels(n_dates, steps), option)
