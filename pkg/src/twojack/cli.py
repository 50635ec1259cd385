"""Command-line interface: ``analyze``, ``coverage`` and ``datasets``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 estimator error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from twojack import __version__
from twojack.datasets import SUMMARIES, builtin_names, load_builtin, read_csv, write_csv
from twojack.errors import DataError, EstimatorError, TwoJackError
from twojack.estimators import (
    ChangPlus,
    ElfessiBalanced,
    ElfessiUnbalanced,
    FixedWeight,
    GraybillDeal,
    KnownVariance,
    Kubokawa,
    TildeRule,
    estimate_common_mean,
)
from twojack.inference import VarianceMethod, ZStyle, confidence_interval, estimate_sd, z_value
from twojack.resampling import Centering, Norming
from twojack.simulation import coverage_table
from twojack.streams import GENERATOR

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ESTIMATOR = 0, 2, 3, 4
SEED_ENV = "TWOJACK_SEED"
DEFAULT_METHODS = ("clt", "jackknife")


def num(value) -> str:
    """Numeric formatting shared by TSV and JSON output (10 significant digits)."""
    return format(float(value), ".10g")


def _jnum(value):
    return float(num(value))


# --------------------------------------------------------------------------
# argument parsing helpers


def parse_estimator(text: str):
    name, _, arg = text.partition(":")
    try:
        if name == "gd":
            return GraybillDeal()
        if name in ("nair", "elfessi2"):
            return ElfessiUnbalanced()
        if name == "elfessi3":
            return ElfessiBalanced()
        if name == "fixed":
            return FixedWeight(float(arg))
        if name == "known":
            s1, s2 = (float(v) for v in arg.split(","))
            return KnownVariance(s1, s2)
        if name == "kubokawa":
            a, b, c = (float(v) for v in arg.split(","))
            return Kubokawa(a, b, c)
        if name == "chang":
            base, _, rule = arg.partition(":")
            if base.startswith("chang"):
                raise ValueError("nested chang")
            return ChangPlus(parse_estimator(base), TildeRule(rule or "floor"))
    except (ValueError, TwoJackError) as exc:
        raise argparse.ArgumentTypeError(f"invalid estimator {text!r}: {exc}") from None
    raise argparse.ArgumentTypeError(f"unknown estimator {text!r}")


def _method(text: str) -> str:
    try:
        VarianceMethod.parse(text)
    except TwoJackError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _int_list(text: str) -> list[int]:
    """``25,50,75`` or an inclusive range ``100:1000:100``."""
    try:
        if ":" in text:
            start, stop, step = (int(v) for v in text.split(":"))
            values = list(range(start, stop + 1, step))
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _models(text: str) -> list[int]:
    values = _int_list(text)
    bad = [v for v in values if v not in range(1, 6)]
    if bad:
        raise argparse.ArgumentTypeError(f"models must be in 1..5, got {bad}")
    return values


def _level(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return value


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twojack", description="Jackknife variance estimation for two-sample common-mean estimators."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="estimate a common mean with standard errors and intervals")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV with header 'sample,value' ('-' for stdin)")
    src.add_argument("--builtin", help="name of a built-in dataset")
    p.add_argument("--data2", help="with --data: read two plain files, one value per line")
    p.add_argument("--estimator", type=parse_estimator, default="gd")
    p.add_argument("--method", action="append", type=_method, dest="methods")
    p.add_argument("--level", type=_level, default=0.95)
    p.add_argument("--z-style", choices=[z.value for z in ZStyle], default="exact")
    p.add_argument("--norming", choices=[n.value for n in Norming], default="unbiased")
    p.add_argument(
        "--centering",
        choices=[c.value for c in Centering],
        default="pooled",
        help="pseudo-value centering for the unequal-size jackknife (default: pooled)",
    )
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--enumeration-limit", type=int, default=100_000)
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.set_defaults(func=run_analyze)

    p = sub.add_parser("coverage", help="Monte Carlo coverage of jackknife and bootstrap intervals")
    p.add_argument("--model", type=_models, default=[1], help="models, e.g. 1,2,3")
    p.add_argument("--n", type=_int_list, default=[25, 50, 75])
    p.add_argument("--reps", type=int, default=20000)
    p.add_argument("--bootstrap-b", type=_int_list, default=list(range(100, 1001, 100)))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=2.0)
    p.add_argument("--estimator", type=parse_estimator, default="gd")
    p.add_argument("--level", type=_level, default=0.95)
    p.add_argument("--z-style", choices=[z.value for z in ZStyle], default="exact")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.set_defaults(func=run_coverage)

    p = sub.add_parser("datasets", help="list or print built-in datasets")
    dsub = p.add_subparsers(dest="action", required=True)
    q = dsub.add_parser("list")
    q.set_defaults(func=run_datasets)
    q = dsub.add_parser("show")
    q.add_argument("name")
    q.add_argument("--format", choices=["csv", "json"], default="csv")
    q.set_defaults(func=run_datasets)
    return parser


# --------------------------------------------------------------------------
# analyze


def _load(args):
    if args.builtin:
        ds = load_builtin(args.builtin)
        return ds.name, ds.data
    if args.data2:
        return f"{args.data},{args.data2}", read_csv((args.data, args.data2), schema="two-files")
    return args.data, read_csv(args.data)


def analyze(args) -> dict:
    name, data = _load(args)
    spec = args.estimator
    seed = _default_seed() if args.seed is None else args.seed
    est = estimate_common_mean(data, spec)
    norming, centering = Norming(args.norming), Centering(args.centering)
    rows = []
    for text in args.methods or DEFAULT_METHODS:
        method = VarianceMethod.parse(text, norming, centering)
        sd = estimate_sd(method, data, spec, seed=seed, enumeration_limit=args.enumeration_limit)
        ci = confidence_interval(est.value, sd, args.level, args.z_style, method.label)
        rows.append(
            {"method": method.label, "sd": sd, "ci_lower": ci.lower, "ci_upper": ci.upper, "width": ci.width}
        )
    return {
        "tool": "twojack",
        "version": __version__,
        "dataset": {"name": name, "n1": data.n1, "n2": data.n2},
        "estimator": spec.name,
        "estimate": est.value,
        "gamma": est.gamma.value,
        "branch": est.gamma.branch.value,
        "level": args.level,
        "z": z_value(args.level, args.z_style),
        "z_style": args.z_style,
        "norming": norming.value,
        "centering": centering.value,
        "seed": seed,
        "rows": rows,
    }


def run_analyze(args, out) -> int:
    report = analyze(args)
    if args.format == "json":
        doc = dict(report)
        for key in ("estimate", "gamma", "z"):
            doc[key] = _jnum(doc[key])
        doc["rows"] = [{k: (v if k == "method" else _jnum(v)) for k, v in r.items()} for r in report["rows"]]
        json.dump(doc, out, indent=2)
        out.write("\n")
        return EXIT_OK
    cols = ["method", "estimate", "sd", "ci_lower", "ci_upper", "width"]
    out.write("\t".join(cols) + "\n")
    for r in report["rows"]:
        values = [r["method"], num(report["estimate"])] + [num(r[c]) for c in cols[2:]]
        out.write("\t".join(values) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# coverage


def run_coverage(args, out) -> int:
    if args.reps < 1 or args.workers < 1:
        raise _Usage("--reps and --workers must be positive")
    seed = _default_seed() if args.seed is None else args.seed
    rows = coverage_table(
        args.model,
        args.n,
        args.reps,
        args.bootstrap_b,
        seed=seed,
        sigma1=args.sigma1,
        sigma2=args.sigma2,
        estimator=args.estimator,
        workers=args.workers,
        level=args.level,
        z_style=args.z_style,
    )
    boot_cols = [f"bootstrap:{b}" for b in args.bootstrap_b]
    if args.format == "json":
        doc = {
            "tool": "twojack",
            "version": __version__,
            "generator": GENERATOR,
            "seed": seed,
            "estimator": args.estimator.name,
            "sigma1": args.sigma1,
            "sigma2": args.sigma2,
            "rows": [
                {
                    "model": r["model"],
                    "N": r["N"],
                    "reps": r["reps"],
                    "failures": r["failures"],
                    "jack": _jnum(r["jackknife"]),
                    "bootstrap": {str(b): _jnum(r[c]) for b, c in zip(args.bootstrap_b, boot_cols)},
                }
                for r in rows
            ],
        }
        json.dump(doc, out, indent=2)
        out.write("\n")
        return EXIT_OK
    out.write("\t".join(["model", "N", "reps", "jack"] + [str(b) for b in args.bootstrap_b]) + "\n")
    for r in rows:
        cells = [str(r["model"]), str(r["N"]), str(r["reps"]), num(r["jackknife"])]
        cells += [num(r[c]) for c in boot_cols]
        out.write("\t".join(cells) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# datasets


def run_datasets(args, out) -> int:
    if args.action == "list":
        out.write("name\tn1\tn2\tsource\tdescription\n")
        for name in builtin_names():
            ds = load_builtin(name)
            out.write(f"{name}\t{ds.data.n1}\t{ds.data.n2}\t{ds.source}\t{ds.description}\n")
        for rec in SUMMARIES.values():
            out.write(f"{rec.name}\t{rec.n1}\t{rec.n2}\t{rec.source}\t{rec.description} [{rec.note}]\n")
        return EXIT_OK

    if args.name in SUMMARIES:
        rec = SUMMARIES[args.name]
        doc = {
            "name": rec.name,
            "summary_only": True,
            "raw_data": "unavailable",
            "note": rec.note,
            "source": rec.source,
            "description": rec.description,
            "n1": rec.n1,
            "n2": rec.n2,
            "mean1": rec.mean1,
            "mean2": rec.mean2,
            "sd1": rec.sd1,
            "sd2": rec.sd2,
        }
        if args.format == "json":
            json.dump(doc, out, indent=2)
            out.write("\n")
        else:
            out.write("# raw data unavailable (summary-only record)\n")
            out.write("field,value\n")
            for key, value in doc.items():
                out.write(f"{key},{value}\n")
        return EXIT_OK

    ds = load_builtin(args.name)
    if args.format == "json":
        doc = {
            "name": ds.name,
            "source": ds.source,
            "description": ds.description,
            "sample1": ds.data.x1.tolist(),
            "sample2": ds.data.x2.tolist(),
        }
        json.dump(doc, out, indent=2)
        out.write("\n")
    else:
        write_csv(ds.data, out)
    return EXIT_OK


class _Usage(Exception):
    pass


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except _Usage as exc:
        print(f"twojack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"twojack: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimatorError as exc:
        print(f"twojack: estimator error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
