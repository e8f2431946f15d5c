"""Flat ``section.key = value`` configuration files and the objects they describe.

Lines starting with ``#`` are comments. Vectors are comma separated and
matrices use ``;`` between rows, e.g. ``model.transition = 0.5,0.5; 0.2,0.8``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import bounds, paths, payoff as payoffs, regress
from .lookahead import LookaheadSchedule, parse_schedule


class ConfigError(ValueError):
    pass


def parse_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load(path) -> "Config":
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return Config(parse_text(text), base=path.parent)


def _vector(s: str) -> np.ndarray:
    return np.array([float(x) for x in s.replace(" ", "").split(",") if x != ""])


def _matrix(s: str) -> np.ndarray:
    return np.array([_vector(row) for row in s.split(";") if row.strip()])


@dataclass
class Config:
    raw: dict
    base: Path = Path(".")

    def get(self, key: str, default: Optional[str] = None) -> str:
        if key in self.raw:
            return self.raw[key]
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def num(self, key: str, default: Optional[float] = None) -> float:
        val = self.get(key, None if default is None else str(default))
        try:
            return float(val)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {val!r}") from None

    def ints(self, key: str, default: Optional[str] = None) -> list[int]:
        val = self.get(key, default)
        try:
            return [int(x) for x in val.replace(" ", "").split(",") if x]
        except ValueError:
            raise ConfigError(f"{key}: expected comma separated integers, got {val!r}") from None

    # -- model ---------------------------------------------------------------

    def model(self) -> paths.ModelSpec:
        kind = self.get("model.kind").lower()
        try:
            if kind == "gbm":
                return self._gbm()
            if kind == "chain":
                return self._chain()
        except paths.ModelError as exc:
            raise ConfigError(f"invalid model: {exc}") from exc
        raise ConfigError(f"model.kind must be gbm or chain, got {kind!r}")

    def _gbm(self) -> paths.GBM:
        T = int(self.num("model.steps"))
        s0 = _vector(self.get("model.s0"))
        m = len(s0)
        if "model.vol" in self.raw:
            drift = _vector(self.get("model.drift", "0"))
            vol = _matrix(self.get("model.vol"))
        else:
            dt = self.num("model.maturity", 1.0) / T
            drift = np.full(m, self.num("model.r", 0.0) * dt)
            sigma = _vector(self.get("model.sigma"))
            vol = np.diag(np.broadcast_to(sigma, (m,)) * math.sqrt(dt))
        return paths.GBM(s0, drift, vol, T, degenerate=self.get("model.degenerate", "false") == "true")

    def _chain(self) -> paths.FiniteChain:
        states = _matrix(self.get("model.states"))
        T = int(self.num("model.steps"))
        mats = []
        for t in range(T):
            key = f"model.transition.{t}"
            mats.append(_matrix(self.get(key) if key in self.raw else self.get("model.transition")))
        initial = _vector(self.get("model.initial"))
        return paths.FiniteChain(states, tuple(mats), initial)

    # -- payoff --------------------------------------------------------------

    def payoff(self, model: paths.ModelSpec) -> payoffs.Payoff:
        kind = self.get("payoff.kind").lower()
        disc = self.get("payoff.discount", "auto")
        if disc == "auto":
            if "model.r" in self.raw:
                dt = self.num("model.maturity", 1.0) / self.num("model.steps")
                discount = math.exp(-self.num("model.r") * dt)
            else:
                discount = 1.0
        else:
            discount = float(disc)
        T = model.T
        if kind in ("put", "call", "maxcall"):
            cls = {"put": payoffs.Put, "call": payoffs.Call, "maxcall": payoffs.MaxCall}[kind]
            return cls(self.num("payoff.strike"), discount, T=T)
        if kind == "table":
            if not isinstance(model, paths.FiniteChain):
                raise ConfigError("table payoffs need a chain model")
            return payoffs.TablePayoff.from_csv(model, self.base / self.get("payoff.table"))
        raise ConfigError(f"unknown payoff.kind {kind!r}")

    def beta(self, n: int) -> Optional[float]:
        """Truncation level for fit size n: ``none``, a number, or ``auto:c`` for c log(n)."""
        val = self.get("payoff.beta", "none").lower()
        if val == "none":
            return None
        if val.startswith("auto"):
            _, _, c = val.partition(":")
            return (float(c) if c else 1.0) * math.log(max(n, 3))
        return float(val)

    # -- approximation -------------------------------------------------------

    def degree(self, n: int, m: int) -> int:
        val = self.get("approx.degree", "3")
        if val.startswith("sobolev"):
            _, _, k = val.partition(":")
            return bounds.sobolev_degree(n, m, int(k or 1)) - 1
        return int(val)

    def space(self, model: paths.ModelSpec, n: int) -> regress.ApproxSpace:
        kind = self.get("approx.basis", "monomials").lower()
        m = model.dim
        if kind == "monomials":
            basis = regress.Monomials(self.degree(n, m), m, self.num("approx.center", 0.0),
                                      self.num("approx.scale", 1.0))
        elif kind == "laguerre":
            basis = regress.Laguerre(self.degree(n, m), m, self.num("approx.scale", 1.0))
        elif kind == "indicator":
            if not isinstance(model, paths.FiniteChain):
                raise ConfigError("indicator basis needs a chain model")
            basis = regress.Indicator(model.states)
        else:
            raise ConfigError(f"unknown approx.basis {kind!r}")
        mode = self.get("approx.mode", "clip")
        radius = self.num("approx.radius") if mode == "ball" else None
        try:
            return regress.ApproxSpace(basis, self.num("approx.H"), mode, radius)
        except ValueError as exc:
            raise ConfigError(f"invalid approximation space: {exc}") from exc

    def schedules(self, T: int) -> list[LookaheadSchedule]:
        out = []
        for item in self.get("study.schedules", self.get("run.schedule", "ls")).split(";"):
            try:
                out.append(parse_schedule(item, T))
            except ValueError as exc:
                raise ConfigError(f"bad schedule {item!r}: {exc}") from exc
        return out

    def bound_inputs(self) -> bounds.BoundInputs:
        try:
            return bounds.BoundInputs(
                d=int(self.num("bounds.d")), w=int(self.num("bounds.w", 0)),
                beta=self.num("bounds.beta"), n=int(self.num("bounds.n", 1)),
                eps=self.num("bounds.eps", 1.0), delta=self.num("bounds.delta", 0.05),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
