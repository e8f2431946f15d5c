"""Command line entry point: ``optstop <subcommand> --config FILE``.

Exit codes: 0 success, 1 validation error, 2 runtime failure.

Discounting is part of the payoff: ``payoff.discount`` defaults to
``exp(-model.r * maturity / steps)``. GBM drift (``model.r``) must already be
the risk-neutral rate.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import bounds, lookahead, oracle, paths, study
from .config import ConfigError, load

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args, cfg) -> int:
    return args.seed if args.seed is not None else int(cfg.num("run.seed", 1))


def cmd_simulate(args) -> int:
    cfg = load(args.config)
    model = cfg.model()
    batch = paths.simulate(model, int(cfg.num("run.n")), _seed(args, cfg))
    target = _out(args) / "paths.bin"
    paths.write_batch(batch, target)
    print(f"wrote {batch.n} paths (T={batch.T}, m={batch.dim}) to {target}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load(args.config)
    model = cfg.model()
    n = int(cfg.num("run.n"))
    schedule = cfg.schedules(model.T)[0]
    payoff = cfg.payoff(model).with_beta(cfg.beta(n))
    batch = paths.simulate(model, n, _seed(args, cfg))
    fitted = lookahead.fit_continuation(batch, payoff, cfg.space(model, n), schedule)
    target = _out(args) / "fitted.txt"
    lookahead.save(fitted, target)
    print(f"fitted {fitted.T} slots on {n} paths (schedule {schedule.label()}) -> {target}")
    return EXIT_OK


def cmd_price(args) -> int:
    cfg = load(args.config)
    model = cfg.model()
    fitted = lookahead.load(args.fitted or Path(args.out) / "fitted.txt")
    seed = args.seed if args.seed is not None else study.eval_seed(int(fitted.provenance["seed"]))
    batch = paths.simulate(model, int(cfg.num("run.eval_n", cfg.num("run.n"))), seed)
    est = lookahead.price(fitted, batch, cfg.payoff(model))
    print(f"price {est.estimate:.10g}  stderr {est.stderr:.3g}  n {est.n}  seed {seed}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load(args.config)
    model = cfg.model()
    payoff = cfg.payoff(model)
    if isinstance(model, paths.FiniteChain):
        sol = oracle.exact_dp(model, payoff)
        target = _out(args) / "oracle.csv"
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "state", "q", "v", "stop"])
            for t in range(model.T + 1):
                for i in range(model.k):
                    writer.writerow([t, i, repr(float(sol.q[t, i])), repr(float(sol.v[t, i])),
                                     int(sol.stop[t, i])])
        print(f"value {sol.value0:.12g}  (table -> {target})")
    else:
        value = study.oracle_value(cfg, model, payoff)
        if np.isnan(value):
            print("no exact oracle for this model/payoff", file=sys.stderr)
            return EXIT_INVALID
        print(f"crr bermudan value {value:.12g}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = load(args.config)
    report = bounds.bound_report(cfg.bound_inputs(), cfg.num("bounds.approx_error", 0.0))
    rows = report.rows()
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    text = "name,value\n" + "".join(f"{k},{v}\n" for k, v in rows)
    print()
    print(text, end="")
    if args.out:
        (_out(args) / "bounds.csv").write_text(text)
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = load(args.config)
    plan = study.StudyPlan.from_config(cfg, args.seed)
    rows = study.run(plan, args.threads)
    target = study.write(rows, args.out, timestamp=not args.no_timestamp)
    failed = [r for r in rows if r.get("error")]
    print(f"{len(rows)} rows -> {target}" + (f" ({len(failed)} failed)" if failed else ""))
    return EXIT_RUNTIME if failed else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate, "fit": cmd_fit, "price": cmd_price,
    "oracle": cmd_oracle, "bounds": cmd_bounds, "study": cmd_study,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optstop", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the seed (u64)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for study rows")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit wall-clock fields so repeated runs are byte identical")
        if name == "price":
            p.add_argument("--fitted", default=None, help="fitted continuation file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, lookahead.MisuseError, ValueError, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
