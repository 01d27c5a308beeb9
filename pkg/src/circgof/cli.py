"""Command line front end: ``gof {test,critvals,power,asym,weights}``.

Every output starts with an echo of the fully resolved configuration (seed
and package version included), so a result file is enough to rerun it.
Errors are reported as ``error[<module>.<code>]: message`` with exit code 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import traceback

import numpy as np

from . import __version__
from ._errors import GofError
from .asymptotics import AsymptoticKind, asymptotic_null
from .circularize import PoolingMode, circular_statistic
from .montecarlo import (PowerConfig, critical_value, critical_value_se, critical_value_table,
                         p_value, power_study, simulate, simulate_null)
from .order_stats import parse_null, probability_integral_transform, read_sample
from .seeding import RunSeed
from .statistics import POWER_STATISTICS, StatisticKind
from .weights import weights_table

QQ_POINTS = 1000


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _emit(config: dict, columns: list[str], rows: list[list], fmt: str, extra: dict | None = None) -> str:
    header = {"version": __version__, **config}
    if fmt == "json":
        doc = {"config": header, "rows": [dict(zip(columns, r)) for r in rows]}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    buf = io.StringIO()
    for key in sorted(header):
        buf.write(f"# {key}: {json.dumps(header[key], sort_keys=True, default=_json_default)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise GofError("io_error", f"cannot write {path}: {exc.strerror}") from exc


def _list(text, conv=str):
    return [conv(t) for t in str(text).split(",") if t.strip()]


def _seed(args) -> int:
    return RunSeed(args.seed).master_seed if args.seed is not None else RunSeed.from_env().master_seed


def _base_config(args, keys) -> dict:
    cfg = {"subcommand": args.command, "seed": _seed(args)}
    for k in keys:
        cfg[k] = getattr(args, k)
    return cfg


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def run_test(args) -> str:
    kind = StatisticKind.parse(args.stat)
    mode = PoolingMode.parse(args.pool)
    null = parse_null(args.null)
    u = probability_integral_transform(read_sample(args.input, args.column), null)
    seed = _seed(args)
    value = circular_statistic(kind, mode, u)
    sample = simulate_null(kind, mode, u.n, args.reps, seed, workers=args.workers)
    cv = critical_value(sample, args.alpha)
    p = p_value(value, sample)
    result = {
        "statistic": kind.value, "pooling": mode.value, "n": u.n, "value": value,
        "p_value": p, "p_value_se": math.sqrt(p * (1 - p) / args.reps),
        "critical_value": cv, "critical_value_se": critical_value_se(sample, args.alpha),
        "decision": "reject" if value > cv else "fail_to_reject",
    }
    cfg = _base_config(args, ["input", "column", "null", "stat", "pool", "alpha", "reps", "workers"])
    cfg.update(stat=kind.value, pool=mode.value, null=null.label)
    cols = list(result)
    return _emit(cfg, cols, [[result[c] for c in cols]], args.format)


def run_critvals(args) -> str:
    kinds = [StatisticKind.parse(s) for s in _list(args.stat)]
    modes = [PoolingMode.parse(p) for p in _list(args.pool)]
    ns = _list(args.n, int)
    table = critical_value_table(kinds, modes, ns, args.alpha, args.reps, _seed(args), args.workers)
    cols = ["statistic", "pooling", "n", "alpha", "value", "se", "reps"]
    rows = [[r[c] for c in cols] for r in table.rows()]
    cfg = _base_config(args, ["alpha", "reps", "workers"])
    cfg.update(stat=[k.value for k in kinds], pool=[m.value for m in modes], n=ns)
    return _emit(cfg, cols, rows, args.format)


def run_power(args) -> str:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise GofError("io_error", f"cannot read {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise GofError("bad_config", f"{args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise GofError("bad_config", "config must be a JSON object")
    overrides = {"statistics": _list(args.stat) if args.stat else None,
                 "poolings": _list(args.pool) if args.pool else None,
                 "n_values": _list(args.n, int) if args.n else None,
                 "alpha": args.alpha, "null_reps": args.reps, "alt_reps": args.reps,
                 "workers": args.workers if args.workers != 1 else None}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed is not None or "seed" not in data:
        data["seed"] = _seed(args)
    config = PowerConfig.from_mapping(data)
    table = power_study(config)
    cfg = {"subcommand": "power", **config.to_dict(), "config_file": args.config}
    if args.format == "json":
        return _emit(cfg, ["n", "statistic", "pooling", "power", "se", "critical_value"],
                     [[c.n, c.statistic, c.pooling, c.power, c.se, c.critical_value] for c in table.cells],
                     "json")
    cols = ["n"] + [table.column_name(s, p) for s, p in table.columns()]
    rows = [[r[0]] + [round(v, 4) for v in r[1:]] for r in table.wide_rows()]
    return _emit(cfg, cols, rows, "csv")


def _asym_kind(stat, pool) -> AsymptoticKind:
    kind, mode = StatisticKind.parse(stat), PoolingMode.parse(pool)
    table = {(StatisticKind.R2, PoolingMode.NONE): AsymptoticKind.R2,
             (StatisticKind.W2, PoolingMode.AVG): AsymptoticKind.W2_AVG,
             (StatisticKind.R2, PoolingMode.AVG): AsymptoticKind.R2_AVG}
    if (kind, mode) not in table:
        raise GofError("bad_selector", f"no large-sample law for {kind.value}/{mode.value}; "
                       "use r2/cs0, w2/cs1 or r2/cs1")
    return table[kind, mode]


def run_asym(args) -> str:
    akind = _asym_kind(args.stat, args.pool)
    n = args.n
    law = asymptotic_null(akind, n, epsilon=args.epsilon, truncation=args.truncation,
                          kernel=args.kernel)
    seed = _seed(args)
    cfg = _base_config(args, ["n", "reps", "epsilon", "truncation", "kernel", "workers"])
    cfg.update(stat=args.stat, pool=args.pool, law=law.label)
    if args.spectrum:
        rows = [[k + 1, w] for k, w in enumerate(law.weights)]
        return _emit(cfg, ["k", "weight"], rows, args.format)
    kind = StatisticKind.R2 if akind is not AsymptoticKind.W2_AVG else StatisticKind.W2
    mode = PoolingMode.NONE if akind is AsymptoticKind.R2 else PoolingMode.AVG
    finite = simulate([kind], [mode], n, args.reps, seed, tag="asym-finite",
                      workers=args.workers)[kind, mode]
    probs = np.arange(1, QQ_POINTS + 1) / (QQ_POINTS + 1)
    qa, _ = law.quantile(probs, reps=args.reps, seed=seed)
    qf = np.quantile(finite, probs)
    rows = [[p, a, f, np.cbrt(a), np.cbrt(f)] for p, a, f in zip(probs, qa, qf)]
    return _emit(cfg, ["p", "q_asymptotic", "q_finite", "cbrt_asymptotic", "cbrt_finite"], rows,
                 args.format)


def run_weights(args) -> str:
    tab = weights_table(args.n)
    cols = list(tab)
    rows = [[int(tab["i"][k])] + [float(tab[c][k]) for c in cols[1:]] for k in range(args.n)]
    cfg = _base_config(args, ["n"])
    return _emit(cfg, cols, rows, args.format)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults, except for options whose unset value is ``None``."""

    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def _common(p, reps_default=10_000):
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: $GOF_SEED, else %d)" % RunSeed.DEFAULT)
    p.add_argument("--output", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="output format")
    p.add_argument("--workers", type=int, default=1,
                   help="worker threads for simulation; never changes results")
    p.add_argument("--reps", type=int, default=reps_default,
                   help="Monte Carlo replicates")


def build_parser() -> argparse.ArgumentParser:
    all_stats = ",".join(k.value for k in POWER_STATISTICS)
    ap = argparse.ArgumentParser(prog="gof", description="Circularly symmetric goodness-of-fit tests.")
    ap.add_argument("--version", action="version", version=f"gof {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test a data file against a null distribution",
                       formatter_class=_HelpFormatter)
    p.add_argument("--input", required=True, help="data file, one value per line or CSV")
    p.add_argument("--column", default=None, help="CSV column name or 0-based index")
    p.add_argument("--null", default="uniform",
                   help="uniform | normal:MU,SIGMA | exponential:RATE | quantile-file:PATH")
    p.add_argument("--stat", default="w2", help="w2, r2, ad, ad_classic, zhang_la, cvm, ks")
    p.add_argument("--pool", default="cs0", help="cs0 (none), cs1 (avg) or cs2 (max)")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    _common(p)

    p = sub.add_parser("critvals", help="tabulate Monte Carlo critical values",
                       formatter_class=_HelpFormatter)
    p.add_argument("--stat", default=all_stats, help="comma-separated statistics")
    p.add_argument("--pool", default="cs0,cs1,cs2", help="comma-separated poolings")
    p.add_argument("--n", default="10,50,100", help="comma-separated sample sizes")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    _common(p)

    p = sub.add_parser("power", help="run a power study under the local perturbation family",
                       formatter_class=_HelpFormatter)
    p.add_argument("--config", default=None, help="JSON file with PowerConfig fields")
    p.add_argument("--stat", default=None, help="override: comma-separated statistics")
    p.add_argument("--pool", default=None, help="override: comma-separated poolings")
    p.add_argument("--n", default=None, help="override: comma-separated sample sizes")
    p.add_argument("--alpha", type=float, default=None, help="override: significance level")
    _common(p, reps_default=None)
    p.set_defaults(reps=None)

    p = sub.add_parser("asym", help="large-sample law: QQ data against simulation, or its spectrum",
                       formatter_class=_HelpFormatter)
    p.add_argument("--stat", default="r2", help="r2 or w2")
    p.add_argument("--pool", default="cs0", help="cs0 (r2 only) or cs1")
    p.add_argument("--n", type=int, default=100, help="sample size")
    p.add_argument("--epsilon", type=float, default=None, help="r2 cut-off; default 1/(2(n+1))")
    p.add_argument("--truncation", type=int, default=None, help="number of terms; default n")
    p.add_argument("--kernel", choices=["exact", "limit"], default="exact",
                   help="kernel for pooled statistics")
    p.add_argument("--spectrum", action="store_true", help="emit the chi-square weights instead of QQ rows")
    _common(p, reps_default=100_000)

    p = sub.add_parser("weights", help="optimal weights and focal directions",
                       formatter_class=_HelpFormatter)
    p.add_argument("--n", type=int, default=10, help="sample size")
    _common(p)
    return ap


RUNNERS = {"test": run_test, "critvals": run_critvals, "power": run_power,
           "asym": run_asym, "weights": run_weights}


def _qualified(exc: BaseException) -> str:
    tb = exc.__traceback__
    module = "cli"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("circgof."):
            module = name.split(".", 1)[1]
        tb = tb.tb_next
    return f"{module}.{exc.code}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = RUNNERS[args.command](args)
        _write(text, args.output)
    except GofError as exc:
        msg = str(exc).split(": ", 1)[-1]
        print(f"error[{_qualified(exc)}]: {msg}", file=sys.stderr)
        return 2
    except OSError as exc:  # pragma: no cover - defensive
        print(f"error[cli.io_error]: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
