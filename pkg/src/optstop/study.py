"""Convergence and schedule-sweep studies written as one CSV row per run."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import oracle
from .config import Config, ConfigError
from .lookahead import LookaheadSchedule, fit_continuation, l2_error, price
from .paths import GBM, FiniteChain, simulate
from .payoff import Call, Put

EVAL_SEED_OFFSET = 0x9E3779B97F4A7C15

COLUMNS = [
    "study_id", "model", "schedule", "basis", "degree", "H", "beta", "n_fit", "n_eval",
    "seed", "price", "stderr", "oracle_value", "oracle_gap", "l2_error_t0", "runtime_ms", "error",
]


def eval_seed(seed: int) -> int:
    return (seed + EVAL_SEED_OFFSET) % 2**64


@dataclass(frozen=True)
class StudyPlan:
    config: Config
    study_id: str
    n_list: list
    n_eval: int
    seeds: list
    schedules: list

    @classmethod
    def from_config(cls, config: Config, seed: Optional[int] = None) -> "StudyPlan":
        model = config.model()
        n_list = config.ints("study.n", "")
        if not n_list:
            raise ConfigError("study.n must list at least one fit size")
        if n_list != sorted(n_list) or len(set(n_list)) != len(n_list) or n_list[0] < 1:
            raise ConfigError("study.n must be strictly ascending positive integers")
        seeds = [seed] if seed is not None else config.ints("study.seeds", "1")
        if len(set(seeds)) != len(seeds):
            raise ConfigError("study.seeds must be distinct")
        config.payoff(model)
        config.space(model, n_list[0])
        return cls(config, config.get("study.id", "study"), n_list,
                   int(config.num("study.eval_n", n_list[-1])), seeds, config.schedules(model.T))


def oracle_value(config: Config, model, payoff) -> float:
    if isinstance(model, FiniteChain):
        return oracle.exact_dp(model, payoff).value0
    if isinstance(model, GBM) and model.dim == 1 and isinstance(payoff, (Put, Call)):
        steps = int(config.num("oracle.steps", 5000))
        # tree steps per exercise date must be an integer so the dates sit on tree levels
        per = max(1, steps // model.T)
        dt = 1.0 / per
        rate = model.drift[0] * dt
        up = float(np.exp(model.vol[0, 0] * np.sqrt(dt)))
        levels = [i * per for i in range(model.T + 1)]
        option = "put" if isinstance(payoff, Put) else "call"
        return oracle.crr_price(model.s0[0], payoff.strike, rate, up, per * model.T,
                                "bermudan", levels, option)
    return float("nan")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if np.isnan(x) else repr(x)
    return str(x)


def run_row(plan: StudyPlan, schedule: LookaheadSchedule, n: int, seed: int,
            model, oracle_val: float, q_exact) -> dict:
    cfg = plan.config
    start = time.perf_counter()
    row = {"study_id": plan.study_id, "model": cfg.get("model.kind"), "schedule": schedule.label(),
           "basis": cfg.get("approx.basis", "monomials"), "n_fit": n, "n_eval": plan.n_eval,
           "seed": seed}
    try:
        space = cfg.space(model, n)
        row["degree"] = getattr(space.basis, "degree", "")
        row["H"] = space.H
        beta = cfg.beta(n)
        row["beta"] = beta
        base = cfg.payoff(model)
        fit_batch = simulate(model, n, seed)
        fitted = fit_continuation(fit_batch, base.with_beta(beta), space, schedule)
        est = price(fitted, simulate(model, plan.n_eval, eval_seed(seed)), base)
        row.update(price=est.estimate, stderr=est.stderr, oracle_value=oracle_val,
                   oracle_gap=oracle_val - est.estimate)
        if q_exact is not None:
            row["l2_error_t0"] = l2_error(model, fitted, q_exact, 0)
    except Exception as exc:  # recorded per row, reflected in the exit code
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["runtime_ms"] = round((time.perf_counter() - start) * 1000.0, 3)
    return row


def run(plan: StudyPlan, threads: int = 1) -> list[dict]:
    cfg = plan.config
    model = cfg.model()
    base = cfg.payoff(model)
    oracle_val = oracle_value(cfg, model, base)
    q_exact = oracle.exact_dp(model, base).q if isinstance(model, FiniteChain) else None
    jobs = [(si, s, n, seed) for si, s in enumerate(plan.schedules)
            for n in plan.n_list for seed in plan.seeds]

    def work(job):
        si, sched, n, seed = job
        return (si, n, seed), run_row(plan, sched, n, seed, model, oracle_val, q_exact)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(work, jobs))
    results.sort(key=lambda kv: (kv[0][0], kv[0][1], plan.seeds.index(kv[0][2])))
    return [r for _, r in results]


def to_csv(rows: list[dict], timestamp: bool = True) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        vals = dict(row)
        if not timestamp:
            vals["runtime_ms"] = None
        writer.writerow([_fmt(vals.get(c)) for c in COLUMNS])
    return buf.getvalue()


def write(rows: list[dict], out_dir, timestamp: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "results.csv"
    path.write_text(to_csv(rows, timestamp))
    return path
