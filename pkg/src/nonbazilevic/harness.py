"""Batch execution of every checker over the corpus, JSON reports and CSV traces."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusEntry, InverseDesign, RunConfig, generate_corpus, inverse_design
from .dominant import DominantSpec, dominant_values, extrema_of_re
from .operator import (
    IDENTITY_RADIUS,
    ClassParams,
    RhoBound,
    check_theorem_2_1,
    check_theorem_2_2,
    check_theorem_2_3,
    check_theorem_3_1,
    check_theorem_4_1,
    check_theorem_5_1,
    identity_check,
    jsonable,
    membership_def1,
    membership_def2,
    sample_function,
    schwarz_ratio,
)
from .regions import MobiusTarget
from .series import DiskGrid

log = logging.getLogger(__name__)

SCHEMA = 1
THEOREMS = ("identity", "schwarz", "2.1", "2.2", "2.3", "3.1", "4.1", "5.1")
STATUSES = ("certified", "refuted", "inconclusive", "skipped")
SCHWARZ_TOL = 1e-6
IDENTITY_ANGLES = 1024  # spectral derivative needs finer circles than the default grid

# (mu1, mu2) and (outer, inner) target pairs for the inclusion theorem
INCLUSION_MUS = ((0.5, 1.0), (1.0, 1.0), (0.0, 2.0), (1.0, 2.0))
INCLUSION_TARGETS = (
    ((1.0, -1.0), (0.5, 0.0)),
    ((1.0, -1.0), (0.8, -0.5)),
    ((0.8, -0.5), (0.5, 0.0)),
    ((1.0, -1.0), (1.0, -1.0)),
    ((1.0, 0.0), (0.5, 0.0)),
)


@dataclass(frozen=True)
class ScaledMobius:
    """``z -> M(s z)`` for ``M = (1 + A z)/(1 + B z)``, with derivatives."""

    A: float
    B: float
    scale: float

    def __call__(self, z):
        w = self.scale * np.asarray(z, dtype=complex)
        return (1 + self.A * w) / (1 + self.B * w)

    def derivative(self, z):
        w = self.scale * np.asarray(z, dtype=complex)
        return self.scale * (self.A - self.B) / (1 + self.B * w) ** 2

    def second_derivative(self, z):
        w = self.scale * np.asarray(z, dtype=complex)
        return -2 * self.B * self.scale ** 2 * (self.A - self.B) / (1 + self.B * w) ** 3

    def to_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "scale": self.scale}


@dataclass
class RunReport:
    config: dict
    corpus: list
    records: list
    summary: dict
    generated_at: str = ""

    @property
    def unexpected_refutations(self) -> list:
        return [r for r in self.records if r["status"] == "refuted" and not r["planted"]
                and r["theorem"] in THEOREMS]

    @property
    def ok(self) -> bool:
        return not self.unexpected_refutations and self.summary["planted_audit"]["passed"]

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "generated_at": self.generated_at, "config": self.config,
                "summary": self.summary, "corpus": self.corpus, "records": self.records}

    def to_json(self) -> str:
        return json.dumps(jsonable(self.to_dict()), indent=1, sort_keys=True) + "\n"


def _record(entry: str, theorem: str, params: dict | None, status: str, planted: bool = False,
            **extra) -> dict:
    rec = {"entry": entry, "theorem": theorem, "params": params or {}, "status": status,
           "planted": planted}
    rec.update(extra)
    return jsonable(rec)


def _report_record(entry: str, params: dict, report, planted: bool = False) -> dict:
    d = report.to_dict()
    return _record(entry, d.pop("theorem"), params, d.pop("status"), planted, **d)


def _base_params(entry: CorpusEntry, config: RunConfig) -> list[ClassParams]:
    f = entry.function
    out = []
    for mu in config.mu_values():
        for a, b in config.exponents:
            try:
                out.append(ClassParams(f.p, f.n, mu, float(a), float(b)))
            except ValueError as exc:
                log.info("skipping lattice point for %s: %s", entry.id, exc)
    return out


class _ExtremaCache:
    def __init__(self, grid: DiskGrid):
        self.grid = grid
        self.store = {}

    def __call__(self, spec: DominantSpec):
        key = (round(spec.gamma.real, 12), round(spec.gamma.imag, 12), spec.A, spec.B)
        if key not in self.store:
            self.store[key] = extrema_of_re(spec, self.grid)
        return self.store[key]


def check_entry(entry: CorpusEntry, config: RunConfig) -> list[dict]:
    """All per-function checks for one corpus entry."""
    grid = config.grid
    tol = config.tolerances.subordination
    f = entry.function
    s = sample_function(f, grid.points)
    id_grid = grid.restrict(IDENTITY_RADIUS)
    id_grid = DiskGrid(id_grid.radii, max(id_grid.angles_per_circle, IDENTITY_ANGLES))
    id_samples = sample_function(f, id_grid.points)
    extrema = _ExtremaCache(grid)
    targets = []
    for A, B in config.targets:
        try:
            targets.append(MobiusTarget(float(A), float(B)))
        except ValueError as exc:
            log.info("skipping target (%s, %s): %s", A, B, exc)
    records = []
    for base in _base_params(entry, config):
        res = identity_check(f, base, id_grid, id_samples)
        records.append(_record(entry.id, "identity", base.to_dict(),
                               "certified" if res < config.tolerances.identity else "refuted",
                               residual=res))
        for t in targets:
            params = base.with_(target=t)
            pd = params.to_dict()
            mem = membership_def1(f, params, grid, s, tol)
            records.append(_record(entry.id, "def1", pd, mem.verdict.status.value,
                                   margin=mem.verdict.margin))
            if not mem.certified:
                continue
            ratio = schwarz_ratio(f, params, grid, s)
            records.append(_record(entry.id, "schwarz", pd,
                                   "certified" if ratio <= 1 + SCHWARZ_TOL else "refuted",
                                   max_ratio=ratio))
            g = params.gamma
            if g is None or not g.real > 0:
                continue
            if params.mu.imag == 0 and params.mu.real > 0:
                rep = check_theorem_2_1(f, params, grid, s, assume_member=True, tol=tol)
                records.append(_report_record(entry.id, pd, rep))
            spec = DominantSpec(g, t.A, t.B)
            rep = check_theorem_2_3(f, params, grid, s, assume_member=True, tol=tol,
                                    extrema=extrema(spec))
            records.append(_report_record(entry.id, pd, rep))
        mins = None
        for rho in config.rhos:
            try:
                params = base.with_(target=RhoBound(float(rho)))
            except ValueError as exc:
                records.append(_record(entry.id, "def2", base.to_dict() | {"rho": rho}, "skipped",
                                       reason=str(exc)))
                continue
            if mins is None:
                mins = membership_def2(f, params.with_(target=RhoBound(0.0)), grid, s, tol)
            passes = mins.min_re > rho + tol + f.tail_bound
            records.append(_record(entry.id, "def2", params.to_dict(),
                                   "certified" if passes else "refuted",
                                   min_re=mins.min_re, argmin_z=mins.argmin_z))
    if entry.design is not None:
        records.extend(_sandwich_records(entry, config, s))
    return records


def _sandwich_records(entry: CorpusEntry, config: RunConfig, s) -> list[dict]:
    d = entry.design
    f = entry.function
    grid = config.grid
    tol = config.tolerances.subordination
    params = ClassParams(f.p, f.n, d.mu, d.alpha, d.beta)
    pd = params.to_dict() | {"design": d.to_dict()}
    m = MobiusTarget(d.A, d.B)
    q_low = ScaledMobius(d.A, d.B, 0.5 * d.scale)
    q1 = ScaledMobius(d.A, d.B, 0.4 * d.scale)
    q2 = ScaledMobius(d.A, d.B, 1.6 * d.scale) if 1.6 * d.scale < 1 else m
    out = [_report_record(entry.id, pd | {"q": "M"}, check_theorem_3_1(f, params, m, grid, s, tol)),
           _report_record(entry.id, pd | {"q": q_low.to_dict()},
                          check_theorem_4_1(f, params, q_low, grid, s, tol))]
    q2d = q2.to_dict() if isinstance(q2, ScaledMobius) else "M"
    out.append(_report_record(entry.id, pd | {"q1": q1.to_dict(), "q2": q2d},
                              check_theorem_5_1(f, params, q1, q2, grid, s, tol)))
    return out


def inclusion_records(entries: list[CorpusEntry], config: RunConfig) -> list[dict]:
    """The inclusion theorem over the whole corpus for the standard parameter pairs."""
    grid = config.grid
    tol = config.tolerances.subordination
    funcs = [(e.id, e.function) for e in entries]
    samples = {e.id: sample_function(e.function, grid.points) for e in entries}
    exps = [(float(a), float(b)) for a, b in config.exponents if a > 0]
    records = []
    pairs = [(mu, tp) for mu in INCLUSION_MUS for tp in INCLUSION_TARGETS]
    for k, ((mu1, mu2), (o, i)) in enumerate(pairs[: config.inclusion_pairs]):
        t1, t2 = MobiusTarget(*o), MobiusTarget(*i)
        for a, b in exps:
            rep = check_theorem_2_2(funcs, a, b, mu1, mu2, t1, t2, grid, samples=samples, tol=tol)
            pd = {"pair": k, "mu1": mu1, "mu2": mu2, "outer": list(o), "inner": list(i),
                  "alpha": a, "beta": b}
            records.append(_report_record("corpus", pd, rep))
    return records


CONTROL_DESIGN = InverseDesign(-1.0, 0.0, 0.9, 1.0, 0.0, 1.0)  # Phi = 1 - 0.9 z


def planted_records(entries: list[CorpusEntry], config: RunConfig) -> list[dict]:
    """Negative controls; each must come back refuted."""
    grid = config.grid
    tol = config.tolerances.subordination
    out = []
    ident = next(e for e in entries if e.id.startswith("identity"))
    p = ident.function.p
    params = ClassParams(p, 1, float(p), 1.0, 0.0, MobiusTarget(1.0, 0.0))
    rep = check_theorem_2_1(ident.function, params, grid, swap_dominant=True, tol=tol)
    out.append(_report_record("planted-swapped-dominant", params.to_dict(), rep, planted=True))

    funcs = [(e.id, e.function) for e in entries]
    rep = check_theorem_2_2(funcs, 1.0, 0.0, 1.0, 1.0, MobiusTarget(0.1, 0.0),
                            MobiusTarget(1.0, -1.0), grid, validate=False, tol=tol)
    pd = {"mu1": 1.0, "mu2": 1.0, "outer": [0.1, 0.0], "inner": [1.0, -1.0], "alpha": 1.0,
          "beta": 0.0}
    out.append(_report_record("planted-corrupted-pair", pd, rep, planted=True))

    f = inverse_design(1, CONTROL_DESIGN)
    params = ClassParams(1, 1, 1.0, 1.0, 0.0, MobiusTarget(1.0, -1.0))
    rep = check_theorem_2_3(f, params, grid, bounds_target=MobiusTarget(0.1, 0.0),
                            assume_member=True, tol=tol)
    out.append(_report_record("planted-narrow-bounds", params.to_dict(), rep, planted=True))
    return out


def _safe_check(entry: CorpusEntry, config: RunConfig) -> list[dict]:
    try:
        return check_entry(entry, config)
    except (ValueError, ArithmeticError, FloatingPointError) as exc:
        log.warning("entry %s failed: %s", entry.id, exc)
        return [_record(entry.id, "error", None, "inconclusive", reason=f"{type(exc).__name__}: {exc}")]


def _summary(records: list[dict], entries: list[CorpusEntry], checked: int, planted: int) -> dict:
    theorems = {s: 0 for s in STATUSES}
    by_theorem = {}
    membership = {}
    for r in records:
        if r["theorem"] in THEOREMS and not r["planted"]:
            theorems[r["status"]] += 1
            by_theorem.setdefault(r["theorem"], {s: 0 for s in STATUSES})[r["status"]] += 1
        elif r["theorem"] in ("def1", "def2"):
            membership.setdefault(r["theorem"], {}).setdefault(r["status"], 0)
            membership[r["theorem"]][r["status"]] += 1
    planted_recs = [r for r in records if r["planted"]]
    caught = sum(r["status"] == "refuted" for r in planted_recs)
    unexpected = [r for r in records if r["status"] == "refuted" and not r["planted"]
                  and r["theorem"] in THEOREMS]
    excluded = sum(e.excluded for e in entries)
    return {
        "counts": theorems,
        "by_theorem": {k: by_theorem[k] for k in sorted(by_theorem)},
        "membership": membership,
        "errors": sum(r["theorem"] == "error" for r in records),
        "unexpected_refutations": len(unexpected),
        "unexpected_ids": sorted({r["entry"] for r in unexpected}),
        "planted_audit": {"planted": planted, "refuted": caught,
                          "ids": sorted(r["entry"] for r in planted_recs if r["status"] == "refuted"),
                          "passed": caught == planted},
        "accounting": {"generated": len(entries), "checked": checked, "excluded": excluded,
                       "balanced": len(entries) == checked + excluded},
    }


def _sort_key(r: dict):
    return (r["entry"], r["theorem"], json.dumps(r["params"], sort_keys=True))


def run_all(config: RunConfig, corpus: list[CorpusEntry] | None = None) -> RunReport:
    """Run every checker; records are merged in sorted order whatever the completion order."""
    entries = generate_corpus(config) if corpus is None else corpus
    active = [e for e in entries if not e.excluded and (not config.only or e.id in config.only)]
    scoped = [e for e in entries if not config.only or e.id in config.only]
    if config.workers > 1 and len(active) > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            chunks = list(pool.map(_safe_check, active, [config] * len(active)))
    else:
        chunks = [_safe_check(e, config) for e in active]
    records = [r for chunk in chunks for r in chunk]
    records.extend(inclusion_records(active, config))
    planted = 0
    if config.plant_faults:
        # the controls are fixed constructions and do not depend on the entry filter
        pr = planted_records([e for e in entries if not e.excluded], config)
        planted = len(pr)
        records.extend(pr)
    records.sort(key=_sort_key)
    summary = _summary(records, scoped, len(active), planted)
    return RunReport(config.to_dict(), [e.to_dict() | {"checked": e in active} for e in scoped],
                     records, summary, time.strftime("%Y-%m-%dT%H:%M:%S"))


def write_report(report: RunReport, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / "report.json"
        path.write_text(report.to_json())
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc.strerror}") from exc
    return path


TRACE_KINDS = ("region-boundary", "phi-image", "dominant-values", "re-extrema")
TRACE_HEADER = ("z_re", "z_im", "w_re", "w_im", "radius", "tag")


def _trace_rows(kind: str, config: RunConfig, gamma: complex, entries) -> tuple[list, dict]:
    grid = config.grid
    rows = []
    meta = {"kind": kind, "radii": list(grid.radii), "angles": grid.angles_per_circle}

    def add(z, w, tag):
        for zz, ww in zip(np.ravel(z), np.ravel(w)):
            rows.append((zz.real, zz.imag, ww.real, ww.imag, abs(zz), tag))

    targets = [MobiusTarget(float(A), float(B)) for A, B in config.targets]
    if kind == "region-boundary":
        meta["targets"] = [list(t) for t in config.targets]
        for t in targets:
            add(grid.circles, t(grid.circles), f"A={t.A:g},B={t.B:g}")
    elif kind == "phi-image":
        meta["exponents"] = [list(e) for e in config.exponents]
        meta["entries"] = [e.id for e in entries]
        for e in entries:
            s = sample_function(e.function, grid.points)
            for a, b in config.exponents:
                lam = complex(a, b)
                _, circ = grid.split(s.phi(lam))
                add(grid.circles, circ, f"{e.id},lam={a:g}{b:+g}i")
    elif kind == "dominant-values":
        meta["gamma"] = [gamma.real, gamma.imag]
        for t in targets:
            spec = DominantSpec(gamma, t.A, t.B)
            add(grid.circles, dominant_values(spec, grid.circles), f"A={t.A:g},B={t.B:g}")
    elif kind == "re-extrema":
        meta["gamma"] = [gamma.real, gamma.imag]
        for t in targets:
            lo, hi, _, _ = extrema_of_re(DominantSpec(gamma, t.A, t.B), grid)
            for ext, name in ((lo, "inf"), (hi, "sup")):
                add(np.array([ext.z], dtype=complex), np.array([ext.value], dtype=complex),
                    f"A={t.A:g},B={t.B:g},{name}")
    else:
        raise ValueError(f"unknown trace kind {kind!r}; expected one of {', '.join(TRACE_KINDS)}")
    return rows, meta


def emit_traces(config: RunConfig, what: str, out_dir: str | Path, *, gamma: complex = 1.0,
                entries: list[CorpusEntry] | None = None) -> tuple[Path, Path]:
    """Write ``trace-<what>.csv`` (one row per sample) and a JSON sidecar."""
    if what == "phi-image" and entries is None:
        entries = [e for e in generate_corpus(config)
                   if not e.excluded and (not config.only or e.id in config.only)]
    rows, meta = _trace_rows(what, config, complex(gamma), entries or [])
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"trace-{what}.csv"
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for r in rows:
                w.writerow([repr(float(v)) for v in r[:5]] + [r[5]])
        meta_path = out / f"trace-{what}.json"
        meta_path.write_text(json.dumps(jsonable(meta), indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write traces to {out}: {exc.strerror}") from exc
    return csv_path, meta_path
