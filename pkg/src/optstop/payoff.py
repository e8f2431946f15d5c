"""Time-indexed nonnegative rewards f_t and the truncation operator.

Discounting is folded into the reward: ``f_t(x) = discount**t * g(x)``.
For a market rate ``r`` and step length ``dt`` use ``discount = exp(-r * dt)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .paths import FiniteChain


def truncate(g, beta: float):
    """Clamp ``g`` to [-beta, beta]; works elementwise on arrays."""
    if not beta > 0:
        raise ValueError(f"truncation level must be positive, got {beta}")
    out = np.clip(g, -beta, beta)
    return float(out) if np.ndim(out) == 0 else out


def _as_states(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x[:, None]
    return x


@dataclass(frozen=True)
class Payoff:
    """Base class. Subclasses implement ``_raw(t, X)`` on (n, m) arrays."""

    beta: Optional[float] = field(default=None, kw_only=True)
    T: Optional[int] = field(default=None, kw_only=True)

    def __post_init__(self):
        if self.beta is not None and not self.beta > 0:
            raise ValueError(f"truncation level must be positive, got {self.beta}")

    def evaluate(self, t: int, x) -> np.ndarray:
        """f_t at states ``x`` (shape (n, m), (n,) for m=1, or a scalar)."""
        if t < 0 or (self.T is not None and t > self.T):
            raise ValueError(f"time index {t} out of range 0..{self.T}")
        scalar = np.ndim(x) == 0
        vals = np.asarray(self._raw(t, _as_states(x)), dtype=float)
        if self.beta is not None:
            vals = np.minimum(vals, self.beta)
        return float(vals[0]) if scalar else vals

    __call__ = evaluate

    def with_beta(self, beta: Optional[float]) -> "Payoff":
        from dataclasses import replace
        return replace(self, beta=beta)

    def with_horizon(self, T: int) -> "Payoff":
        from dataclasses import replace
        return replace(self, T=T)

    def sup_norm(self, t: int) -> float:
        """Upper bound on f_t if one is known, else inf."""
        return float(self.beta) if self.beta is not None else np.inf

    def _raw(self, t: int, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _first_coordinate(X: np.ndarray, kind: str) -> np.ndarray:
    if X.shape[1] != 1:
        raise ValueError(f"{kind} payoff needs a one-dimensional state, got m={X.shape[1]}")
    return X[:, 0]


@dataclass(frozen=True)
class Put(Payoff):
    strike: float
    discount: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.discount <= 1:
            raise ValueError("discount factor must lie in (0, 1]")

    def _raw(self, t, X):
        return self.discount**t * np.maximum(self.strike - _first_coordinate(X, "put"), 0.0)

    def sup_norm(self, t):
        return min(super().sup_norm(t), self.discount**t * max(self.strike, 0.0))


@dataclass(frozen=True)
class Call(Payoff):
    strike: float
    discount: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.discount <= 1:
            raise ValueError("discount factor must lie in (0, 1]")

    def _raw(self, t, X):
        return self.discount**t * np.maximum(_first_coordinate(X, "call") - self.strike, 0.0)


@dataclass(frozen=True)
class MaxCall(Payoff):
    strike: float
    discount: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.discount <= 1:
            raise ValueError("discount factor must lie in (0, 1]")

    def _raw(self, t, X):
        return self.discount**t * np.maximum(X.max(axis=1) - self.strike, 0.0)


@dataclass(frozen=True)
class TablePayoff(Payoff):
    """Per-time, per-state values on a finite chain; ``values`` is (T+1, k)."""

    chain: FiniteChain
    values: np.ndarray

    def __post_init__(self):
        super().__post_init__()
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.chain.T + 1, self.chain.k):
            raise ValueError(f"table must be {(self.chain.T + 1, self.chain.k)}, got {vals.shape}")
        if np.any(vals < 0):
            raise ValueError("payoff table must be nonnegative")
        if self.T is None:
            object.__setattr__(self, "T", self.chain.T)

    def _raw(self, t, X):
        return self.values[t, self.chain.index_of(X)]

    def sup_norm(self, t):
        return min(super().sup_norm(t), float(self.values[t].max()))

    @classmethod
    def from_csv(cls, chain: FiniteChain, path: Union[str, Path], **kw) -> "TablePayoff":
        """Rows ``t, state index, value``; missing cells are an error."""
        vals = np.full((chain.T + 1, chain.k), np.nan)
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        for t, i, v in rows:
            vals[int(t), int(i)] = float(v)
        if np.isnan(vals).any():
            raise LookupError(f"{path}: payoff table does not cover every (t, state)")
        return cls(chain, vals, **kw)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class CustomPayoff(Payoff):
    """``fn(t, X) -> values``; nonnegativity is checked on every call."""

    fn: Callable[[int, np.ndarray], np.ndarray]

    def _raw(self, t, X):
        vals = np.asarray(self.fn(t, X), dtype=float).reshape(X.shape[0])
        if np.any(vals < 0):
            raise ValueError("custom payoff returned negative values")
        return vals
