"""Markov stopping rules and the cash flows they induce.

A function vector ``h = (h_0, ..., h_T)`` with ``h_T = f_T`` defines the rule
"stop at the first s >= t with f_s(x_s) >= h_s(x_s)". Ties stop. The cash
flow over a window of ``w`` periods follows this rule from t to t+w and, if
still alive after t+w, is paid ``h_{t+w}(x_{t+w})``.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .paths import FiniteChain
from .payoff import Payoff


class FunctionVector:
    """Per-time functions h_0..h_{T-1}; slot T is tied to the payoff.

    Each entry maps an (n, m) state array to n values.
    """

    def __init__(self, funcs: Sequence[Callable[[np.ndarray], np.ndarray]]):
        self.funcs = list(funcs)

    @property
    def T(self) -> int:
        return len(self.funcs)

    def __call__(self, t: int, X: np.ndarray) -> np.ndarray:
        if not 0 <= t < self.T:
            raise ValueError(f"slot {t} is not a free slot (0..{self.T - 1}); slot T is payoff-tied")
        return np.asarray(self.funcs[t](X), dtype=float).reshape(X.shape[0])

    @classmethod
    def constant(cls, value: float, T: int) -> "FunctionVector":
        return cls([lambda X, v=value: np.full(X.shape[0], v, dtype=float)] * T)

    @classmethod
    def from_table(cls, chain: FiniteChain, table: np.ndarray) -> "FunctionVector":
        """Table of shape (T, k) or (T+1, k); a last row is ignored (payoff-tied)."""
        table = np.asarray(table, dtype=float)
        funcs = [lambda X, row=table[t]: row[chain.index_of(X)] for t in range(chain.T)]
        return cls(funcs)


def h_values(payoff: Payoff, h, t: int, X: np.ndarray) -> np.ndarray:
    """h_t(X), with the terminal slot evaluated as f_T."""
    if t == h.T:
        return payoff.evaluate(t, X)
    return h(t, X)


def _as_row(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)


def stop_indicator(payoff: Payoff, h, t: int, x) -> bool:
    """theta(f_t - h_t) at a single state: True iff f_t(x) >= h_t(x)."""
    if not 0 <= t <= h.T:
        raise ValueError(f"time index {t} out of range 0..{h.T}")
    X = _as_row(x)
    return bool(payoff.evaluate(t, X)[0] >= h_values(payoff, h, t, X)[0])


def stopping_time(payoff: Payoff, h, t: int, path) -> int:
    """First s in t..T with f_s(x_s) >= h_s(x_s); ``path`` is (T+1, m) or (T+1,)."""
    T = h.T
    if not 0 <= t <= T:
        raise ValueError(f"time index {t} out of range 0..{T}")
    path = np.asarray(path, dtype=float).reshape(T + 1, -1)
    for s in range(t, T):
        if stop_indicator(payoff, h, s, path[s]):
            return s
    return T


def cashflow(payoff: Payoff, h, path, t: int, w: int) -> float:
    """Realized cash flow of the rule over t..t+w, settled at h_{t+w} if not stopped."""
    T = h.T
    if not 0 <= t <= T:
        raise ValueError(f"time index {t} out of range 0..{T}")
    if not 0 <= w <= T - t:
        raise ValueError(f"window w={w} out of range 0..{T - t}")
    path = np.asarray(path, dtype=float).reshape(T + 1, -1)
    for s in range(t, t + w + 1):
        X = path[s : s + 1]
        f = payoff.evaluate(s, X)[0]
        if f >= h_values(payoff, h, s, X)[0]:
            return float(f)
    return float(h_values(payoff, h, t + w, path[t + w : t + w + 1])[0])


def cashflow_from_tables(F: np.ndarray, Hv: np.ndarray, t: int, w: int) -> np.ndarray:
    """Vectorized cash flow from precomputed f_s and h_s columns.

    ``F`` and ``Hv`` have shape (..., T+1) holding f_s(x_s) and h_s(x_s) per
    path; the last axis is time.
    """
    Fw = F[..., t : t + w + 1]
    Hw = Hv[..., t : t + w + 1]
    stop = Fw >= Hw
    any_stop = stop.any(axis=-1)
    first = stop.argmax(axis=-1)
    stopped_value = np.take_along_axis(Fw, first[..., None], axis=-1)[..., 0]
    return np.where(any_stop, stopped_value, Hv[..., t + w])


def stopping_times_from_tables(F: np.ndarray, Hv: np.ndarray, t: int) -> np.ndarray:
    stop = F[..., t:] >= Hv[..., t:]
    stop[..., -1] = True
    return t + stop.argmax(axis=-1)


def evaluate_tables(payoff: Payoff, h, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """f_s(x_s) and h_s(x_s) for every path and time; ``states`` is (n, T+1, m)."""
    n, T1, _ = states.shape
    F = np.empty((n, T1))
    Hv = np.empty((n, T1))
    for s in range(T1):
        F[:, s] = payoff.evaluate(s, states[:, s, :])
        Hv[:, s] = h_values(payoff, h, s, states[:, s, :])
    return F, Hv
