"""Bounded approximation spaces and empirical L2 minimization over them.

Two constraint modes are supported:

* ``clip``: ordinary least squares (minimum-norm when rank deficient), with
  predictions clipped to [-H, H]. This is how regression Monte Carlo is used
  in practice; the clipped class is not convex, so reports flag it as
  non-conforming.
* ``ball``: least squares restricted to coefficients with Euclidean norm at
  most ``radius``. The represented class is closed and convex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import laguerre
from scipy.optimize import brentq

RCOND = 1e-12


@dataclass(frozen=True)
class Monomials:
    """Tensor monomials with every coordinate degree <= ``degree``.

    Features are computed on ``(x - center) / scale``, which leaves the
    spanned space unchanged but keeps the design matrix well conditioned.
    """

    degree: int
    dim: int = 1
    center: float = 0.0
    scale: float = 1.0
    name = "monomials"

    def __post_init__(self):
        if self.degree < 0 or self.dim < 1:
            raise ValueError("degree must be >= 0 and dim >= 1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def dimension(self) -> int:
        return (self.degree + 1) ** self.dim

    def features(self, X: np.ndarray) -> np.ndarray:
        Z = (X - self.center) / self.scale
        powers = Z[:, :, None] ** np.arange(self.degree + 1)  # (n, m, degree+1)
        return _tensor(powers)

    def params(self) -> dict:
        return {"degree": self.degree, "dim": self.dim, "center": self.center, "scale": self.scale}


@dataclass(frozen=True)
class Laguerre:
    """Tensor products of Laguerre polynomials L_0..L_degree of ``x / scale``."""

    degree: int
    dim: int = 1
    scale: float = 1.0
    name = "laguerre"

    def __post_init__(self):
        if self.degree < 0 or self.dim < 1:
            raise ValueError("degree must be >= 0 and dim >= 1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def dimension(self) -> int:
        return (self.degree + 1) ** self.dim

    def features(self, X: np.ndarray) -> np.ndarray:
        return _tensor(laguerre.lagvander(X / self.scale, self.degree))

    def params(self) -> dict:
        return {"degree": self.degree, "dim": self.dim, "scale": self.scale}


def _tensor(per_coord: np.ndarray) -> np.ndarray:
    n, m, p = per_coord.shape
    cols = []
    for exps in itertools.product(range(p), repeat=m):
        col = np.ones(n)
        for j, e in enumerate(exps):
            col = col * per_coord[:, j, e]
        cols.append(col)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class Indicator:
    """One indicator column per finite-chain state (rows of ``states``)."""

    states: np.ndarray
    name = "indicator"

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        object.__setattr__(self, "states", s[:, None] if s.ndim == 1 else s)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def dimension(self) -> int:
        return self.states.shape[0]

    def features(self, X: np.ndarray) -> np.ndarray:
        hit = np.all(X[:, None, :] == self.states[None, :, :], axis=2)
        if not hit.any(axis=1).all():
            raise LookupError("state outside the indicator basis support")
        return hit.astype(float)

    def params(self) -> dict:
        return {"states": self.states.tolist()}


@dataclass(frozen=True)
class CustomBasis:
    fn: Callable[[np.ndarray], np.ndarray]
    declared_dimension: Optional[int] = None
    dim: Optional[int] = None
    name = "custom"

    @property
    def dimension(self) -> int:
        if self.declared_dimension is None:
            raise NotImplementedError("custom basis has no declared dimension")
        return self.declared_dimension

    def features(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(X), dtype=float)

    def params(self) -> dict:
        raise NotImplementedError("custom bases cannot be serialized")


def _declared_dimension(basis) -> Optional[int]:
    try:
        return basis.dimension
    except NotImplementedError:
        return None


BASES = {"monomials": Monomials, "laguerre": Laguerre, "indicator": Indicator}


@dataclass(frozen=True)
class ApproxSpace:
    """A uniformly bounded class of functions spanned by ``basis``.

    ``H`` is the uniform bound; ``mode`` is ``"clip"`` or ``"ball"`` (the
    latter needs ``radius``).
    """

    basis: object
    H: float
    mode: str = "clip"
    radius: Optional[float] = None

    def __post_init__(self):
        if not self.H > 0:
            raise ValueError("H must be positive")
        if self.mode not in ("clip", "ball"):
            raise ValueError(f"unknown constraint mode {self.mode!r}")
        if self.mode == "ball" and not (self.radius is not None and self.radius > 0):
            raise ValueError("ball mode needs a positive radius")
        d = _declared_dimension(self.basis)
        if d is not None and d < 1:
            raise ValueError("basis dimension must be >= 1")

    @property
    def convex(self) -> bool:
        return self.mode == "ball"


def design_matrix(space: ApproxSpace, states) -> np.ndarray:
    """Rows of basis features, one per state."""
    X = np.asarray(states, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("no states given")
    want = getattr(space.basis, "dim", None)
    if want is not None and X.shape[1] != want:
        raise ValueError(f"state dimension {X.shape[1]} does not match basis dimension {want}")
    return space.basis.features(X)


@dataclass(frozen=True)
class FittedFunction:
    space: ApproxSpace
    coef: np.ndarray
    t: int = 0

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=float)
        object.__setattr__(self, "coef", coef)
        d = _declared_dimension(self.space.basis)
        if d is not None and coef.shape != (d,):
            raise ValueError("coefficient length must equal the basis dimension")

    def predict(self, X) -> np.ndarray:
        raw = design_matrix(self.space, X) @ self.coef
        if self.space.mode == "clip":
            return np.clip(raw, -self.space.H, self.space.H)
        return raw

    __call__ = predict


def ball_lstsq(A: np.ndarray, y: np.ndarray, radius: float,
               weights: Optional[np.ndarray] = None) -> np.ndarray:
    """argmin ||A c - y||_W subject to ||c|| <= radius.

    Solved exactly through the eigendecomposition of the Gram matrix and the
    secular equation for the Lagrange multiplier. Directions with eigenvalue
    below ``RCOND * max`` are dropped, giving the minimum-norm minimizer.
    """
    w = np.ones(A.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    G = A.T @ (w[:, None] * A)
    g = A.T @ (w * y)
    s, V = np.linalg.eigh(G)
    keep = s > RCOND * max(s.max(), 0.0)
    z = np.where(keep, V.T @ g, 0.0)
    s = np.where(keep, s, 1.0)
    c0 = z / s
    if np.linalg.norm(c0) <= radius:
        return V @ c0

    def excess(lam):
        return 1.0 / radius - 1.0 / np.linalg.norm(z / (s + lam) * keep)

    hi = np.linalg.norm(z) / radius
    lam = brentq(excess, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return V @ (z / (s + lam) * keep)


def fit_l2(space: ApproxSpace, states, targets, t: int = 0) -> FittedFunction:
    """Empirical L2 minimizer of (1/n) sum |h(x_i) - y_i|^2 over the space."""
    y = np.asarray(targets, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("targets must be a nonempty vector")
    A = design_matrix(space, states)
    if A.shape[0] != y.size:
        raise ValueError(f"{A.shape[0]} states but {y.size} targets")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets contain non-finite values")
    if space.mode == "clip":
        coef, *_ = np.linalg.lstsq(A, y, rcond=RCOND)
    else:
        coef = ball_lstsq(A, y, space.radius)
    return FittedFunction(space, coef, t)


def predict(f: FittedFunction, x) -> np.ndarray:
    return f.predict(x)


def vc_dimension(space: ApproxSpace) -> int:
    """VC dimension of the linear span, used as the bound d (clipping does not raise it)."""
    return int(space.basis.dimension)


def empirical_objective(f, states, targets) -> float:
    return float(np.mean((f(np.asarray(states, dtype=float)) - targets) ** 2))
