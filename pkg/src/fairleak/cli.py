"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import privacy
from .data import gen_synthetic, ingest_csv, parse_mapping, write_scores_csv
from .errors import FairleakError
from .experiment import ExperimentConfig, emit_results, run_experiment, run_trial
from .fairness import Metric, QueryBatch


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _eps(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def _load_source(args) -> tuple:
    return ingest_csv(args.data, mode=args.mode, a_map=parse_mapping(args.a_map),
                      y_map=parse_mapping(args.y_map), seed=args.seed)


def _add_data_args(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--data", required=required, help="dataset CSV (id,y,a,score or id,y,a,f1..fd)")
    p.add_argument("--mode", choices=("scores", "features"), default="scores")
    p.add_argument("--a-map", help="encode attribute labels, e.g. White=1,Black=0")
    p.add_argument("--y-map", help="encode label values, e.g. yes=1,no=0")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairleak", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reveal", help="run one attack against a dataset")
    _add_data_args(p, required=True)
    p.add_argument("--attack", choices=("full_rank", "compressed_sensing", "abs_partition"),
                   default="compressed_sensing")
    p.add_argument("--solver", choices=("bp", "omp"), default="bp")
    p.add_argument("--metric", default="SP")
    p.add_argument("--m", type=int)
    p.add_argument("--c", type=float, default=1.74)
    p.add_argument("--sensing", choices=("uniform_noise", "random_binary"), default="uniform_noise")
    p.add_argument("--mechanism", default="none")
    p.add_argument("--epsilon", type=_eps, default=math.inf)
    p.add_argument("--delta", type=float)
    p.add_argument("--probe-sizes", action="store_true")
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("conceal", help="privatize a query batch file")
    p.add_argument("--in", dest="inp", required=True,
                   help='JSON {"metric": "SP", "values": [...]} or one value per line')
    p.add_argument("--out", required=True)
    p.add_argument("--mechanism", required=True,
                   choices=("laplace_global", "cauchy_smooth", "laplace_smooth"))
    p.add_argument("--metric", default=None, help="overrides the file's metric")
    p.add_argument("--epsilon", type=_eps, required=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n0", type=int)
    p.add_argument("--n1", type=int)
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("experiment", help="run a sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--seed", type=int, help="overrides the config's seed")
    _add_data_args(p, required=False)

    p = sub.add_parser("sensitivity", help="print a global or smooth sensitivity")
    p.add_argument("--metric", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--n0", type=int)
    p.add_argument("--beta", type=float, help="smooth sensitivity when given")
    return parser


# ── commands ──


def _cmd_synth(args) -> None:
    ds, base = gen_synthetic(args.n, args.n0, args.seed)
    write_scores_csv(args.out, ds, base)
    print(f"wrote {ds.n} rows (N0={ds.n0}, N1={ds.n1}) to {args.out}")


def _cmd_reveal(args) -> None:
    ds, base = _load_source(args)
    cfg = ExperimentConfig(n=ds.n, n0=ds.n0, m=args.m, c=args.c, epsilons=(args.epsilon,),
                           mechanism=args.mechanism, metric=args.metric, attack=args.attack,
                           solver=args.solver, trials=1, seed=args.seed, delta=args.delta,
                           sensing=args.sensing, probe_sizes=args.probe_sizes,
                           record_runtime=False)
    row = run_trial(cfg, args.epsilon, 0, source=(ds, base))
    print(json.dumps({"n": row.n, "n0": row.n0, "m": row.m, "leakage_pct": row.leakage_pct,
                      "avg_sp_err": row.avg_sp_err, "failed": row.failed}))


def _read_batch(path: Path, metric: str | None) -> QueryBatch:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        raw = json.loads(text)
        return QueryBatch(values=raw["values"], metric=metric or raw.get("metric", "SP"))
    values = [float(line) for line in text.split() if line.strip()]
    return QueryBatch(values=values, metric=metric or "SP")


def _cmd_conceal(args) -> None:
    batch = _read_batch(Path(args.inp), args.metric)
    n0 = args.n0
    n1 = args.n1 if args.n1 is not None else (args.n - n0 if n0 is not None else None)
    if args.mechanism == "laplace_global":
        out = privacy.laplace_global_mechanism(batch, args.n, args.epsilon, args.seed)
    elif n0 is None:
        raise UsageError(f"--n0 is required for {args.mechanism}")
    elif batch.metric.is_absolute:
        out = privacy.conceal_abs_sp(batch, args.n, n0, args.epsilon, args.seed)
    elif args.mechanism == "cauchy_smooth":
        out = privacy.conceal_sp_cauchy(batch, args.n, n0, n1, args.epsilon, args.seed)
    else:
        if args.delta is None:
            raise UsageError("--delta is required for laplace_smooth")
        out = privacy.conceal_sp_laplace_smooth(batch, args.n, n0, n1, args.epsilon,
                                                args.delta, args.seed)
    eps = out.epsilon
    payload = {"metric": out.metric.value, "mechanism": out.mechanism.value,
               "epsilon": "inf" if eps is not None and math.isinf(eps) else eps,
               "delta": out.delta, "values": [float(v) for v in out.values],
               "meta": out.meta}
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _cmd_experiment(args) -> None:
    with open(args.config, encoding="utf-8") as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    source = None
    if args.data:
        source = _load_source(args)
        raw["n"], raw["n0"] = source[0].n, source[0].n0
    cfg = ExperimentConfig.from_dict(raw)
    rows = run_experiment(cfg, source)
    fmt = args.format or ("json" if args.out.endswith(".json") else "csv")
    emit_results(rows, fmt, args.out)
    failed = sum(r.failed for r in rows)
    print(f"wrote {len(rows)} rows to {args.out} ({failed} failed trials)")


def _cmd_sensitivity(args) -> None:
    metric = Metric.parse(args.metric)
    if args.beta is None:
        if args.n is None:
            raise UsageError("--n is required for global sensitivity")
        value = privacy.global_sensitivity(metric, args.m, args.n).value
    else:
        if args.n0 is None:
            raise UsageError("--n0 is required for smooth sensitivity")
        if metric.is_absolute:
            value = privacy.smooth_sensitivity_abs_sp(args.m, args.n0, args.beta).value
        else:
            if args.n is None:
                raise UsageError("--n is required for smooth SP sensitivity")
            value = privacy.smooth_sensitivity_sp(args.m, args.n, args.n0,
                                                  args.n - args.n0, args.beta).value
    print(f"{value:.6f}")


COMMANDS = {
    "synth": _cmd_synth,
    "reveal": _cmd_reveal,
    "conceal": _cmd_conceal,
    "experiment": _cmd_experiment,
    "sensitivity": _cmd_sensitivity,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "fairleak: error: a command is required")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (FairleakError, ValueError, KeyError, OSError) as exc:
        print(f"fairleak: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
