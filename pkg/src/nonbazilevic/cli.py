"""Command line entry point.

Exit codes: 0 when no unexpected refutation was found, 1 when violations
were found, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
import sys
from pathlib import Path

from .corpus import ConfigError, RunConfig, corpus_json, generate_corpus, load_config
from .dominant import DominantSpec, dominant_report
from .harness import THEOREMS, TRACE_KINDS, emit_traces, run_all, write_report
from .operator import ClassParams, RhoBound, jsonable, membership_def1, membership_def2
from .regions import MobiusTarget
from .series import make_function

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _config(args) -> RunConfig:
    cfg = load_config(args.config, seed=args.seed)
    changes = {}
    if args.out is not None:
        changes["out"] = args.out
    tol = cfg.tolerances
    for name in ("subordination", "refutation", "identity", "quadrature"):
        v = getattr(args, f"tol_{name}")
        if v is not None:
            if not v > 0:
                raise ConfigError(f"--tol-{name} must be positive")
            tol = dataclasses.replace(tol, **{name: v})
    if getattr(args, "workers", None):
        changes["workers"] = args.workers
    if getattr(args, "only", None):
        changes["only"] = tuple(args.only)
    return RunConfig.from_dict(cfg.to_dict() | changes | {"tolerances": dataclasses.asdict(tol)})


def _write(text: str, out: str | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)
    print(path / name)


def cmd_corpus(args) -> int:
    cfg = _config(args)
    entries = generate_corpus(cfg)
    if args.format == "csv":
        rows = [("id", "construction", "p", "n", "order", "tail_bound", "excluded", "provenance")]
        rows += [(e.id, e.construction, e.function.p, e.function.n, e.function.truncation_order,
                  repr(e.function.tail_bound), e.excluded, e.provenance) for e in entries]
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        _write(buf.getvalue(), args.out, "corpus.csv")
    else:
        _write(corpus_json(entries, cfg), args.out, "corpus.json")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _config(args)
    if args.theorem != "all" and args.theorem not in THEOREMS:
        raise ConfigError(f"unknown theorem {args.theorem!r}; expected all or one of "
                          f"{', '.join(THEOREMS)}")
    report = run_all(cfg)
    if args.theorem != "all":
        report.records = [r for r in report.records if r["theorem"] == args.theorem]
    bad = report.unexpected_refutations
    if args.theorem == "all" and not report.summary["planted_audit"]["passed"]:
        logging.error("planted-fault audit failed: %s", report.summary["planted_audit"])
        bad = bad or [None]
    path = write_report(report, cfg.out)
    counts = report.summary["counts"]
    print(f"{path}: " + ", ".join(f"{k} {v}" for k, v in counts.items())
          + f"; unexpected refutations {len(report.unexpected_refutations)}")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_dominant(args) -> int:
    cfg = _config(args)
    spec = DominantSpec(args.gamma, args.A, args.B)
    rep = dominant_report(spec, cfg.grid)
    d = jsonable(rep.to_dict())
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("key", "value"))
        for k, v in sorted(d.items()):
            w.writerow((k, json.dumps(v)))
        _write(buf.getvalue(), args.out, "dominant.csv")
    else:
        _write(json.dumps(d, indent=1, sort_keys=True) + "\n", args.out, "dominant.json")
    return EXIT_OK


def cmd_trace(args) -> int:
    cfg = _config(args)
    csv_path, meta = emit_traces(cfg, args.what, cfg.out, gamma=args.gamma)
    print(csv_path)
    print(meta)
    return EXIT_OK


def cmd_membership(args) -> int:
    cfg = _config(args)
    if args.entry:
        entries = {e.id: e for e in generate_corpus(cfg)}
        if args.entry not in entries:
            raise ConfigError(f"no corpus entry {args.entry!r}")
        e = entries[args.entry]
        if e.excluded:
            raise ConfigError(f"entry {args.entry} is excluded: {e.exclusion_reason}")
        f = e.function
    else:
        f = make_function(args.p, args.n, [_complex(c) for c in args.coeffs], exact=True)
    if args.rho is not None:
        params = ClassParams(f.p, f.n, args.mu, args.alpha, args.beta, RhoBound(args.rho))
        v = membership_def2(f, params, cfg.grid, tol=cfg.tolerances.subordination)
    else:
        params = ClassParams(f.p, f.n, args.mu, args.alpha, args.beta,
                             MobiusTarget(args.A, args.B))
        v = membership_def1(f, params, cfg.grid, tol=cfg.tolerances.subordination)
    print(json.dumps(jsonable(v.to_dict()), indent=1, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="corpus seed (overrides config and SUBORD_SEED)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    for name in ("subordination", "refutation", "identity", "quadrature"):
        common.add_argument(f"--tol-{name}", type=float, metavar="TOL")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="nonbazilevic",
                                 description="Numerical checks for non-Bazilevic function classes.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus", parents=[common], help="write the test-function corpus")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("check", parents=[common], help="run theorem checks")
    p.add_argument("theorem", help="theorem id (" + ", ".join(THEOREMS) + ") or all")
    p.add_argument("--workers", type=int)
    p.add_argument("--only", nargs="+", metavar="ID", help="restrict to corpus entries")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("dominant", parents=[common], help="dominant values and Re extrema")
    p.add_argument("--gamma", type=_complex, default=1.0)
    p.add_argument("-A", type=float, default=1.0)
    p.add_argument("-B", type=float, default=-1.0)
    p.set_defaults(func=cmd_dominant)

    p = sub.add_parser("trace", parents=[common], help="emit CSV traces for plotting")
    p.add_argument("what", choices=TRACE_KINDS)
    p.add_argument("--gamma", type=_complex, default=1.0)
    p.add_argument("--only", nargs="+", metavar="ID")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("membership", parents=[common], help="class membership of one function")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--entry", help="corpus entry id")
    src.add_argument("--coeffs", nargs="*", help="coefficients of z^(p+n), z^(p+n+1), ...")
    p.add_argument("-p", type=int, default=1)
    p.add_argument("-n", type=int, default=1)
    p.add_argument("--mu", type=_complex, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("-A", type=float, default=1.0)
    p.add_argument("-B", type=float, default=-1.0)
    p.add_argument("--rho", type=float, help="use the Re J > rho definition instead")
    p.set_defaults(func=cmd_membership)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # invalid parameters given on the command line
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
