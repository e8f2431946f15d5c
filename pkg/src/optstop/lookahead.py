"""Backward-recursive regression with a per-step look-ahead window.

At step t the target for path i is the cash flow of the already fitted rule
over times t+1..t+1+w(t), settled at the fitted continuation value if the
rule has not stopped by then. ``w(t) = T-t-1`` reproduces Longstaff-Schwartz
targets (realized payoff at the fitted stopping time), ``w(t) = 0``
reproduces Tsitsiklis-Van Roy targets ``max(f_{t+1}, q_{t+1})``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import regress
from .oracle import MAX_STATES, CapacityError, conditional_cashflow_moments, payoff_table
from .paths import FiniteChain, PathBatch, exact_marginals
from .payoff import Payoff
from .policy import cashflow_from_tables, h_values, stopping_times_from_tables
from .regress import ApproxSpace, FittedFunction

FORMAT_HEADER = "# optstop fitted continuation v1"


class MisuseError(RuntimeError):
    """The evaluation batch is the fitting batch (or shares its random stream)."""


@dataclass(frozen=True)
class LookaheadSchedule:
    w: tuple

    def __post_init__(self):
        w = tuple(int(x) for x in self.w)
        object.__setattr__(self, "w", w)
        T = len(w)
        for t, x in enumerate(w):
            if not 0 <= x <= T - t - 1:
                raise ValueError(f"w({t}) = {x} outside 0..{T - t - 1}")

    @property
    def T(self) -> int:
        return len(self.w)

    def __getitem__(self, t: int) -> int:
        return self.w[t]

    def label(self) -> str:
        return ",".join(map(str, self.w))


def make_schedule(kind: str, T: int, value: Union[int, Sequence[int], None] = None) -> LookaheadSchedule:
    """``kind`` is ``ls``, ``tvr``, ``constant`` (clamped per t) or ``custom``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    kind = kind.lower()
    if kind == "ls":
        return LookaheadSchedule(tuple(T - t - 1 for t in range(T)))
    if kind == "tvr":
        return LookaheadSchedule((0,) * T)
    if kind == "constant":
        if value is None or int(value) < 0:
            raise ValueError("constant schedule needs a nonnegative w")
        return LookaheadSchedule(tuple(min(int(value), T - t - 1) for t in range(T)))
    if kind == "custom":
        if value is None or len(value) != T:
            raise ValueError(f"custom schedule needs {T} entries")
        return LookaheadSchedule(tuple(value))
    raise ValueError(f"unknown schedule kind {kind!r}")


def parse_schedule(text: str, T: int) -> LookaheadSchedule:
    """``ls``, ``tvr``, ``constant:2`` or ``custom:3,1,0``."""
    kind, _, arg = text.strip().partition(":")
    if kind.lower() == "constant":
        return make_schedule("constant", T, int(arg))
    if kind.lower() == "custom":
        return make_schedule("custom", T, [int(a) for a in arg.split(",")])
    return make_schedule(kind, T)


@dataclass
class FittedContinuation:
    """Fitted slots for t = 0..T-1; slot T is the payoff itself."""

    slots: list
    provenance: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return len(self.slots)

    def __call__(self, t: int, X: np.ndarray) -> np.ndarray:
        slot = self.slots[t]
        if slot is None:
            raise RuntimeError(f"slot {t} has not been fitted yet")
        return slot.predict(X)

    @property
    def stream_id(self):
        p = self.provenance
        return (p.get("fingerprint"), p.get("seed"))


def _spaces_for(spaces, T: int) -> list:
    if isinstance(spaces, ApproxSpace):
        return [spaces] * T
    spaces = list(spaces)
    if len(spaces) != T:
        raise ValueError(f"need {T} approximation spaces, got {len(spaces)}")
    return spaces


def regression_targets(fitted, batch: PathBatch, payoff: Payoff, t: int, w: int) -> np.ndarray:
    """Cash flow over t+1..t+1+w for every path, using fitted slots t+1..t+1+w."""
    T = batch.T
    if not 0 <= t < T or not 0 <= w <= T - t - 1:
        raise ValueError(f"need 0 <= t < T and 0 <= w <= T-t-1, got t={t}, w={w}")
    F = np.zeros((batch.n, T + 1))
    Hv = np.zeros((batch.n, T + 1))
    for s in range(t + 1, t + w + 2):
        X = batch.at(s)
        F[:, s] = payoff.evaluate(s, X)
        Hv[:, s] = h_values(payoff, fitted, s, X)
    return cashflow_from_tables(F, Hv, t + 1, w)


def fit_continuation(batch: PathBatch, payoff: Payoff, spaces, schedule: LookaheadSchedule) -> FittedContinuation:
    """Fit q_{T-1}, ..., q_0 backward. Payoff truncation (``payoff.beta``) applies to targets."""
    T = batch.T
    if schedule.T != T:
        raise ValueError(f"schedule covers {schedule.T} steps, batch has T={T}")
    spaces = _spaces_for(spaces, T)
    F = np.empty((batch.n, T + 1))
    for s in range(T + 1):
        F[:, s] = payoff.evaluate(s, batch.at(s))
    Hv = np.empty_like(F)
    Hv[:, T] = F[:, T]
    slots: list = [None] * T
    for t in range(T - 1, -1, -1):
        y = cashflow_from_tables(F, Hv, t + 1, schedule[t])
        slots[t] = regress.fit_l2(spaces[t], batch.at(t), y, t)
        Hv[:, t] = slots[t].predict(batch.at(t))
    provenance = {
        "seed": batch.seed,
        "n": batch.n,
        "fingerprint": batch.model_fingerprint,
        "schedule": schedule.label(),
        "beta": payoff.beta,
    }
    return FittedContinuation(slots, provenance)


@dataclass(frozen=True)
class PriceEstimate:
    estimate: float
    stderr: float
    n: int


def price(fitted: FittedContinuation, eval_batch: PathBatch, payoff: Payoff) -> PriceEstimate:
    """Mean payoff of the fitted stopping rule from t=0 on independent paths."""
    if getattr(fitted, "stream_id", None) == eval_batch.stream_id:
        raise MisuseError("evaluation batch shares the fitting batch's random stream; use a different seed")
    T = eval_batch.T
    if fitted.T != T:
        raise ValueError(f"fitted horizon {fitted.T} does not match batch horizon {T}")
    F = np.empty((eval_batch.n, T + 1))
    Hv = np.empty_like(F)
    for s in range(T + 1):
        X = eval_batch.at(s)
        F[:, s] = payoff.evaluate(s, X)
        Hv[:, s] = h_values(payoff, fitted, s, X)
    tau = stopping_times_from_tables(F, Hv, 0)
    cash = F[np.arange(eval_batch.n), tau]
    n = eval_batch.n
    stderr = float(cash.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return PriceEstimate(float(cash.mean()), stderr, n)


def function_table(chain: FiniteChain, payoff: Payoff, h) -> np.ndarray:
    """(T+1, k) table of h on chain states, row T tied to f_T."""
    if isinstance(h, np.ndarray):
        Hv = np.array(h, dtype=float)
        if Hv.shape[0] == chain.T:
            Hv = np.vstack([Hv, np.zeros(chain.k)])
    else:
        Hv = np.stack([h_values(payoff, h, t, chain.states) if t < chain.T else np.zeros(chain.k)
                       for t in range(chain.T + 1)])
    Hv[chain.T] = payoff.evaluate(chain.T, chain.states)
    return Hv


def exact_projection(space: ApproxSpace, chain: FiniteChain, values: np.ndarray,
                     weights: np.ndarray) -> np.ndarray:
    """Projection of a function on chain states onto ``space`` in L2(weights)."""
    Phi = regress.design_matrix(space, chain.states)
    if space.mode == "ball":
        return Phi @ regress.ball_lstsq(Phi, values, space.radius, weights)
    sw = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(Phi * sw[:, None], values * sw, rcond=regress.RCOND)
    return np.clip(Phi @ coef, -space.H, space.H)


def centered_loss_moments(chain: FiniteChain, payoff: Payoff, h, space: ApproxSpace,
                          t: int, w: int) -> tuple[float, float]:
    """Exact (E[l_t(h)], E[l_t(h)^2]) for the centered loss on a finite chain.

    l_t(h) = |h_t - cf|^2 - |pr cf - cf|^2 with cf the cash flow over
    t+1..t+1+w and pr the L2(mu_t) projection of E[cf | X_t] onto ``space``.
    """
    if chain.k > MAX_STATES:
        raise CapacityError(f"{chain.k} states exceeds the limit of {MAX_STATES}")
    F = payoff_table(chain, payoff)
    Hv = function_table(chain, payoff, h)
    mu = exact_marginals(chain)[t]
    rho, m2 = conditional_cashflow_moments(chain, F, Hv, t, w, (1, 2))
    pr = exact_projection(space, chain, rho, mu)
    ht = Hv[t]
    diff = ht - pr
    a = ht + pr
    mean = float(mu @ (diff * (a - 2 * rho)))
    second = float(mu @ (diff**2 * (a**2 - 4 * a * rho + 4 * m2)))
    return mean, second


def centered_loss_exact(chain: FiniteChain, payoff: Payoff, h, space: ApproxSpace, t: int, w: int) -> float:
    return centered_loss_moments(chain, payoff, h, space, t, w)[0]


def l2_error(chain: FiniteChain, fitted, q: np.ndarray, t: int) -> float:
    """||fitted_t - q_t|| in L2 of the exact marginal at t."""
    mu = exact_marginals(chain)[t]
    diff = fitted(t, chain.states) - q[t]
    return float(np.sqrt(mu @ diff**2))


def _fmt(x: float) -> str:
    return repr(float(x)) if not np.isfinite(x) else f"{x:.17g}"


def dumps(fitted: FittedContinuation) -> str:
    """Versioned text form: provenance lines, then one block per slot."""
    lines = [FORMAT_HEADER, f"T {fitted.T}"]
    for key in ("seed", "n", "fingerprint", "schedule", "beta"):
        lines.append(f"{key} {json.dumps(fitted.provenance.get(key))}")
    for t, slot in enumerate(fitted.slots):
        sp = slot.space
        lines += [
            f"slot {t}",
            f"basis {sp.basis.name} {json.dumps(sp.basis.params(), sort_keys=True)}",
            f"H {_fmt(sp.H)}",
            f"mode {sp.mode}",
            f"radius {json.dumps(sp.radius)}",
            "coef " + " ".join(_fmt(c) for c in slot.coef),
            "end",
        ]
    return "\n".join(lines) + "\n"


def loads(text: str) -> FittedContinuation:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ValueError("not an optstop fitted continuation (bad header)")
    T = int(lines[1].split()[1])
    provenance = {}
    i = 2
    while not lines[i].startswith("slot "):
        key, _, val = lines[i].partition(" ")
        provenance[key] = json.loads(val)
        i += 1
    slots = []
    for t in range(T):
        block = {}
        i += 1
        while lines[i] != "end":
            key, _, val = lines[i].partition(" ")
            block[key] = val
            i += 1
        i += 1
        name, _, params = block["basis"].partition(" ")
        basis = regress.BASES[name](**json.loads(params))
        space = ApproxSpace(basis, float(block["H"]), block["mode"], json.loads(block["radius"]))
        coef = np.array([float(c) for c in block["coef"].split()])
        slots.append(FittedFunction(space, coef, t))
    return FittedContinuation(slots, provenance)


def save(fitted: FittedContinuation, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(fitted))


def load(path: Union[str, Path]) -> FittedContinuation:
    return loads(Path(path).read_text())
