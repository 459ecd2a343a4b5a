"""Run configuration and the deterministic corpus of test functions."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .regions import winding_number
from .series import (
    AnalyticFunction,
    BranchError,
    DiskGrid,
    from_reduced,
    make_function,
    mobius_coefficients,
    radial_log,
    series_power,
)

SEED_ENV = "SUBORD_SEED"
VALIDITY_TOL = 1e-10
INVERSE_MIN_ORDER = 64
INVERSE_MAX_ORDER = 4096
INVERSE_COEFF_TOL = 1e-16


class ConfigError(ValueError):
    pass


@dataclass
class Tolerances:
    subordination: float = 1e-6
    refutation: float = 1e-6
    identity: float = 1e-7
    quadrature: float = 1e-10


@dataclass
class RunConfig:
    """Everything a batch run depends on; serialized as JSON."""

    seed: int = 42
    sizes: tuple = (10, 10, 5)  # sparse, inverse-designed, near-boundary
    valences: tuple = (1, 2)
    gaps: tuple = (1, 2)
    mus: tuple = (0.0, 0.5, 1.0, 2.0, (1.0, 0.5))
    exponents: tuple = ((1.0, 0.0), (0.5, 0.0), (2.0, 0.0), (1.0, 0.5), (0.0, 1.0))
    targets: tuple = ((1.0, -1.0), (0.5, 0.0), (1.0, 0.0), (0.8, -0.5))
    rhos: tuple = (0.0, 0.5)
    inclusion_pairs: int = 20
    angles: int = 256
    radii: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
    tolerances: Tolerances = field(default_factory=Tolerances)
    plant_faults: bool = True
    only: tuple = ()  # restrict to these entry ids
    workers: int = 1
    out: str = "results"

    def __post_init__(self):
        if isinstance(self.tolerances, dict):
            try:
                self.tolerances = Tolerances(**self.tolerances)
            except TypeError as exc:
                raise ConfigError(f"tolerances: {exc}") from None
        for name in ("sizes", "valences", "gaps", "mus", "exponents", "targets", "rhos",
                     "radii", "only"):
            setattr(self, name, _freeze(getattr(self, name)))
        if len(self.sizes) != 3 or any(int(s) != s or s < 0 for s in self.sizes):
            raise ConfigError("sizes must be three nonnegative integers")
        if any(int(p) != p or p < 1 for p in self.valences) or not self.valences:
            raise ConfigError("valences must be positive integers")
        if any(int(n) != n or n < 1 for n in self.gaps) or not self.gaps:
            raise ConfigError("gaps must be positive integers")
        if self.angles < 16:
            raise ConfigError("angles must be at least 16")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        try:
            self.grid
        except ValueError as exc:
            raise ConfigError(f"radii: {exc}") from None

    @property
    def grid(self) -> DiskGrid:
        return DiskGrid(np.array(self.radii, dtype=float), int(self.angles))

    def mu_values(self) -> list[complex]:
        return [_complex(m) for m in self.mus]

    def to_dict(self) -> dict:
        return _thaw(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def _complex(m) -> complex:
    if isinstance(m, (list, tuple)):
        return complex(m[0], m[1])
    return complex(m)


def _freeze(x):
    if isinstance(x, (list, tuple)):
        return tuple(_freeze(v) for v in x)
    return x


def _thaw(x):
    if isinstance(x, (list, tuple)):
        return [_thaw(v) for v in x]
    if isinstance(x, dict):
        return {k: _thaw(v) for k, v in x.items()}
    return x


def load_config(path: str | os.PathLike | None = None, *, seed: int | None = None,
                env: dict | None = None) -> RunConfig:
    """Read a JSON config (or defaults); ``SUBORD_SEED`` then ``seed`` override the seed."""
    d = {}
    if path is not None:
        try:
            d = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            d["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    if seed is not None:
        d["seed"] = seed
    return RunConfig.from_dict(d)


@dataclass(frozen=True)
class InverseDesign:
    """``Phi = M(scale z)`` with ``M = (1 + A z)/(1 + B z)`` for exponent alpha + i beta."""

    A: float
    B: float
    scale: float
    alpha: float
    beta: float
    mu: float

    @property
    def lam(self) -> complex:
        return complex(self.alpha, self.beta)

    def psi(self, z):
        w = self.scale * np.asarray(z, dtype=complex)
        return (1 + self.A * w) / (1 + self.B * w)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class CorpusEntry:
    id: str
    construction: str  # explicit-coefficients | inverse-designed | mobius-derived
    function: AnalyticFunction
    provenance: str
    design: InverseDesign | None = None
    excluded: bool = False
    exclusion_reason: str = ""
    control: bool = False  # negative-control entry, not a class member by design

    def to_dict(self) -> dict:
        d = {"id": self.id, "construction": self.construction, "provenance": self.provenance,
             "excluded": self.excluded, "function": self.function.to_dict()}
        if self.exclusion_reason:
            d["exclusion_reason"] = self.exclusion_reason
        if self.design is not None:
            d["design"] = self.design.to_dict()
        if self.control:
            d["control"] = True
        return d


def validate_function(f: AnalyticFunction, grid: DiskGrid) -> str:
    """Empty string when ``f/z**p`` has no zero in the sampled disk, else the reason."""
    h = f.reduced
    vals = h.evaluate(grid.points)
    if not np.all(np.isfinite(vals)):
        return "non-finite values on the grid"
    if np.min(np.abs(vals)) <= VALIDITY_TOL:
        return "f/z^p vanishes on the grid"
    outer = grid.max_radius * np.exp(1j * np.linspace(0, 2 * np.pi, 4 * grid.angles_per_circle + 1))
    try:
        wind = winding_number(h.evaluate(outer), 0.0)
    except ValueError:
        return "f/z^p nearly vanishes on the outer circle"
    if wind != 0:
        return f"f/z^p has {wind} zero(s) inside |z| < {grid.max_radius:g}"
    try:
        radial_log(h.evaluate, grid.points, dfunc=h.derivative().evaluate)
    except BranchError as exc:
        return f"branch continuation failed: {exc}"
    return ""


def inverse_design(p: int, design: InverseDesign) -> AnalyticFunction:
    """``f = z**p psi**(-1/lam)`` with the order grown until trailing terms are negligible."""
    order = INVERSE_MIN_ORDER
    while True:
        base = mobius_coefficients(design.A, design.B, order) * design.scale ** np.arange(order + 1)
        red = series_power(base, -1.0 / design.lam, order)
        if np.max(np.abs(red[-4:])) < INVERSE_COEFF_TOL or order >= INVERSE_MAX_ORDER:
            break
        order *= 2
    return from_reduced(p, 1, red)


# (A, B, scale, alpha, beta, mu): Moebius designs exercised by the sandwich theorems
_DESIGNS = (
    (1.0, -1.0, 0.5, 1.0, 0.0, 1.0),
    (0.5, 0.0, 0.6, 1.0, 0.0, 1.0),
    (0.8, -0.5, 0.5, 0.5, 0.0, 0.5),
    (1.0, -1.0, 0.4, 2.0, 0.0, 2.0),
    (0.6, -0.6, 0.6, 1.0, 0.5, 1.0),
    (1.0, 0.0, 0.5, 1.0, 0.0, 0.5),
    (0.5, -0.8, 0.5, 1.0, 0.0, 2.0),
    (1.0, -1.0, 0.6, 1.0, -0.3, 1.0),
    (0.7, 0.2, 0.7, 2.0, 0.0, 1.0),
    (1.0, -0.5, 0.45, 0.5, 0.0, 1.0),
)

_STRESS_RADII = (0.9, 0.95, 0.98, 0.995, 1.02)


def generate_corpus(config: RunConfig) -> list[CorpusEntry]:
    """Deterministic corpus for ``config.seed``; invalid entries are kept and marked excluded."""
    rng = np.random.default_rng(config.seed)
    grid = config.grid
    n_sparse, n_inverse, n_stress = config.sizes
    ps, ns = config.valences, config.gaps
    entries = []
    p0 = ps[0]
    entries.append(CorpusEntry(f"identity-p{p0}", "explicit-coefficients",
                               make_function(p0, 1, (), exact=True), f"f = z^{p0}"))
    for i in range(n_sparse):
        p, n = ps[i % len(ps)], ns[(i // len(ps)) % len(ns)]
        c, d = (0.3 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
                for _ in range(2))
        coeffs = np.zeros(n + 1, dtype=complex)
        coeffs[0], coeffs[n] = c, d
        f = make_function(p, n, coeffs, exact=True)
        entries.append(CorpusEntry(f"sparse-{i:02d}", "explicit-coefficients", f,
                                   f"z^{p}(1 + c z^{n} + d z^{2 * n}), c={c:.6g}, d={d:.6g}"))
    for i in range(n_inverse):
        A, B, s, a, b, mu = _DESIGNS[i % len(_DESIGNS)]
        # later passes over the design table shrink the scale so entries stay distinct
        s *= 0.9 ** (i // len(_DESIGNS))
        design = InverseDesign(A, B, s, a, b, mu)
        p = ps[i % len(ps)]
        entries.append(CorpusEntry(f"inverse-{i:02d}", "inverse-designed", inverse_design(p, design),
                                   f"Phi = M({s:g} z), M = (1 + {A:g} z)/(1 + {B:g} z), "
                                   f"lam = {a:g}{b:+g}i", design))
    for i in range(n_stress):
        p, n = ps[i % len(ps)], ns[i % len(ns)]
        r = _STRESS_RADII[i % len(_STRESS_RADII)]
        c = r * np.exp(2j * np.pi * rng.uniform())
        coeffs = np.zeros(n, dtype=complex)
        coeffs[0] = c
        entries.append(CorpusEntry(f"stress-{i:02d}", "mobius-derived",
                                   make_function(p, n, coeffs, exact=True),
                                   f"z^{p}(1 + c z^{n}), |c| = {r:g}"))
    for e in entries:
        reason = validate_function(e.function, grid)
        if reason:
            e.excluded, e.exclusion_reason = True, reason
    return entries


def corpus_json(entries: list[CorpusEntry], config: RunConfig) -> str:
    """Canonical JSON text of a corpus (stable key order, fixed float formatting)."""
    doc = {"schema": 1, "seed": config.seed, "entries": [e.to_dict() for e in entries]}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
