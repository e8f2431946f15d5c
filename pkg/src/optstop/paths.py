"""Reproducible sample paths of discrete-time Markov processes.

Paths are generated in fixed-size blocks. Block ``b`` draws its randomness
from a Philox stream keyed on ``(seed, b)``, so path ``i`` depends only on
``(seed, i)``: a batch of ``n`` paths is always a prefix of a larger batch
with the same seed, and blocks can be generated independently.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

BLOCK_SIZE = 1024
MAGIC = b"STOPPATH"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIQQQQ")
_ROW_TOL = 1e-12


class ModelError(ValueError):
    """A model specification violates one of its invariants."""


@dataclass(frozen=True)
class GBM:
    """Geometric Brownian motion on R^m, simulated by exact log steps.

    ``drift`` is the arithmetic drift per step (e.g. ``r * dt`` under the
    pricing measure) and ``vol`` the m x m volatility matrix per sqrt(step).
    """

    s0: np.ndarray
    drift: np.ndarray
    vol: np.ndarray
    T: int
    degenerate: bool = False

    def __post_init__(self):
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=float))
        m = s0.shape[0]
        drift = np.broadcast_to(np.asarray(self.drift, dtype=float), (m,)).copy()
        vol = np.asarray(self.vol, dtype=float)
        if vol.ndim == 0:
            vol = np.eye(m) * vol
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "vol", vol)
        if self.T < 1:
            raise ModelError("T must be >= 1")
        if vol.shape != (m, m):
            raise ModelError(f"volatility matrix must be {m}x{m}, got {vol.shape}")
        if np.any(s0 <= 0):
            raise ModelError("s0 must be strictly positive componentwise")
        if not self.degenerate and np.linalg.matrix_rank(vol) < m:
            raise ModelError(
                "volatility matrix is rank deficient; pass degenerate=True to allow it"
            )

    @property
    def dim(self) -> int:
        return self.s0.shape[0]

    def describe(self) -> dict:
        return {
            "kind": "gbm",
            "s0": self.s0.tolist(),
            "drift": self.drift.tolist(),
            "vol": self.vol.tolist(),
            "T": self.T,
        }

    def _block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, self.T, self.dim))
        step = self.drift - 0.5 * np.sum(self.vol**2, axis=1)
        incr = step + z @ self.vol.T
        logs = np.concatenate(
            [np.zeros((size, 1, self.dim)), np.cumsum(incr, axis=1)], axis=1
        )
        return self.s0 * np.exp(logs)


@dataclass(frozen=True)
class FiniteChain:
    """Time-inhomogeneous Markov chain on finitely many states in R^m.

    ``transitions[t]`` maps the law at time t to the law at time t+1, so
    there are exactly T of them.
    """

    states: np.ndarray
    transitions: tuple
    initial: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        mats = tuple(np.asarray(p, dtype=float) for p in self.transitions)
        init = np.asarray(self.initial, dtype=float)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "transitions", mats)
        object.__setattr__(self, "initial", init)
        k = states.shape[0]
        if len(mats) < 1:
            raise ModelError("T must be >= 1 (need at least one transition matrix)")
        if init.shape != (k,):
            raise ModelError(f"initial distribution must have length {k}")
        if np.any(init < 0) or abs(init.sum() - 1.0) > _ROW_TOL:
            raise ModelError("initial distribution must be a probability vector")
        for t, p in enumerate(mats):
            if p.shape != (k, k):
                raise ModelError(f"transition matrix {t} must be {k}x{k}")
            if np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1.0)) > _ROW_TOL:
                raise ModelError(f"transition matrix {t} is not row-stochastic")
        if len({tuple(s) for s in states.tolist()}) != k:
            raise ModelError("chain states must be distinct")

    @property
    def T(self) -> int:
        return len(self.transitions)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def k(self) -> int:
        return self.states.shape[0]

    def describe(self) -> dict:
        return {
            "kind": "chain",
            "states": self.states.tolist(),
            "transitions": [p.tolist() for p in self.transitions],
            "initial": self.initial.tolist(),
        }

    def index_of(self, x: np.ndarray) -> np.ndarray:
        """Map state vectors (..., m) to chain state indices; LookupError if unknown."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.dim == 1:
            x = x[:, None]
        flat = x.reshape(-1, self.dim)
        hit = np.all(flat[:, None, :] == self.states[None, :, :], axis=2)
        found = hit.any(axis=1)
        if not found.all():
            bad = flat[~found][0]
            raise LookupError(f"state {bad.tolist()} is not a chain state")
        return hit.argmax(axis=1).reshape(x.shape[:-1])

    def _block_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random((size, self.T + 1))
        idx = np.empty((size, self.T + 1), dtype=np.int64)
        idx[:, 0] = _inverse_cdf(np.cumsum(self.initial)[None, :], u[:, 0])
        for t, p in enumerate(self.transitions):
            cum = np.cumsum(p, axis=1)[idx[:, t]]
            idx[:, t + 1] = _inverse_cdf(cum, u[:, t + 1])
        return idx

    def _block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.states[self._block_indices(rng, size)]


def _inverse_cdf(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    k = cum.shape[1]
    return np.minimum((u[:, None] >= cum).sum(axis=1), k - 1)


TransitionSampler = Callable[[int, np.ndarray, np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class Custom:
    """User supplied dynamics: ``sampler(t, x_t, rng) -> x_{t+1}`` on (B, m) arrays.

    Correctness of the sampler is the caller's responsibility.
    """

    sampler: TransitionSampler
    T: int
    x0: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        if self.T < 1:
            raise ModelError("T must be >= 1")
        if not callable(self.sampler):
            raise ModelError("sampler must be callable")

    @property
    def dim(self) -> int:
        return self.x0.shape[0]

    def describe(self) -> dict:
        qual = getattr(self.sampler, "__qualname__", repr(self.sampler))
        return {"kind": "custom", "name": self.name, "sampler": qual,
                "T": self.T, "x0": self.x0.tolist()}

    def _block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty((size, self.T + 1, self.dim))
        out[:, 0] = self.x0
        for t in range(self.T):
            out[:, t + 1] = np.asarray(self.sampler(t, out[:, t], rng)).reshape(size, self.dim)
        return out


ModelSpec = Union[GBM, FiniteChain, Custom]


def fingerprint(model: ModelSpec) -> str:
    """Stable hex digest of a model description."""
    blob = json.dumps(model.describe(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class PathBatch:
    """n sampled trajectories over times 0..T; ``states`` has shape (n, T+1, m)."""

    states: np.ndarray
    seed: int
    model_fingerprint: str
    state_index: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.states.ndim != 3:
            raise ValueError("states must have shape (n, T+1, m)")
        self.states.setflags(write=False)
        if self.state_index is not None:
            self.state_index.setflags(write=False)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def T(self) -> int:
        return self.states.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def at(self, t: int) -> np.ndarray:
        """States at time t, shape (n, m)."""
        return self.states[:, t, :]

    @property
    def stream_id(self) -> tuple[str, int]:
        """Identifies the random stream; batches sharing it share paths."""
        return (self.model_fingerprint, self.seed)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    key = np.array([seed & (2**64 - 1), block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate(model: ModelSpec, n: int, seed: int) -> PathBatch:
    """Draw ``n`` independent paths; path i is a function of (seed, i) only."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    seed = int(seed) & (2**64 - 1)
    blocks = []
    for b in range((n + BLOCK_SIZE - 1) // BLOCK_SIZE):
        rng = _block_rng(seed, b)
        if isinstance(model, FiniteChain):
            blocks.append(model._block_indices(rng, BLOCK_SIZE))
        else:
            blocks.append(model._block(rng, BLOCK_SIZE))
    data = np.concatenate(blocks, axis=0)[:n]
    if isinstance(model, FiniteChain):
        return PathBatch(model.states[data], seed, fingerprint(model), state_index=data)
    return PathBatch(np.ascontiguousarray(data), seed, fingerprint(model))


def exact_marginals(model: ModelSpec) -> list[np.ndarray]:
    """Law of X_t for t = 0..T as probability vectors over chain states."""
    if not isinstance(model, FiniteChain):
        raise TypeError("exact marginals are only available for FiniteChain models")
    out = [model.initial.copy()]
    for p in model.transitions:
        out.append(out[-1] @ p)
    return out


def write_batch(batch: PathBatch, path: Union[str, Path]) -> None:
    """Serialize as header (magic, version, n, T, m, seed) plus row-major float64."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, batch.n, batch.T, batch.dim, batch.seed))
        fh.write(np.ascontiguousarray(batch.states, dtype="<f8").tobytes())


def read_batch(path: Union[str, Path], model_fingerprint: str = "") -> PathBatch:
    raw = Path(path).read_bytes()
    magic, version, n, T, m, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a path batch file")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != n * (T + 1) * m:
        raise ValueError(f"{path}: truncated payload")
    return PathBatch(body.reshape(n, T + 1, m).copy(), seed, model_fingerprint)

