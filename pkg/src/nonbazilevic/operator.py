"""The non-Bazilevic operator, class membership and checks of the class theorems.

For ``f = z**p h(z)`` with ``h(0) = 1`` and exponent ``lam = alpha + i beta``

    Phi(z) = (z**p / f(z)) ** lam = exp(-lam log h(z))
    J(z)   = (1 + mu) Phi - mu (z f' / (p f)) Phi = Phi (1 - mu z h' / (p h))

where ``log h`` is continued along rays from ``log h(0) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol, Union

import numpy as np

from .dominant import DominantSpec, dominant_derivatives, dominant_values, extrema_of_re
from .regions import (
    DEFAULT_TOL,
    MobiusTarget,
    SampledTarget,
    SubordinationVerdict,
    check_subordination,
    convexity_margin,
    mobius_image,
    region_nested,
    schwarz_witness,
    univalence_diagnostic,
)
from .series import AnalyticFunction, DiskGrid, circle_derivative, radial_log

IDENTITY_TOL = 1e-7
IDENTITY_RADIUS = 0.9


@dataclass(frozen=True)
class RhoBound:
    rho: float


@dataclass(frozen=True)
class ClassParams:
    p: int
    n: int
    mu: complex
    alpha: float
    beta: float
    target: Union[MobiusTarget, RhoBound, None] = None

    def __post_init__(self):
        object.__setattr__(self, "mu", complex(self.mu))
        if self.p < 1 or self.n < 1:
            raise ValueError("p and n must be positive integers")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("alpha + i beta must be nonzero")
        if isinstance(self.target, RhoBound) and not 0 <= self.target.rho < self.p:
            raise ValueError("rho must satisfy 0 <= rho < p")

    @property
    def lam(self) -> complex:
        return complex(self.alpha, self.beta)

    @property
    def gamma(self) -> complex | None:
        """``p (alpha + i beta) / (mu n)``, or None when mu = 0."""
        if self.mu == 0:
            return None
        return self.p * self.lam / (self.mu * self.n)

    @property
    def eta(self) -> complex:
        return self.mu / (self.p * self.lam)

    def with_(self, **kw) -> ClassParams:
        d = dict(p=self.p, n=self.n, mu=self.mu, alpha=self.alpha, beta=self.beta,
                 target=self.target)
        d.update(kw)
        return ClassParams(**d)

    def to_dict(self) -> dict:
        d = {"p": self.p, "n": self.n, "mu": [self.mu.real, self.mu.imag],
             "alpha": self.alpha, "beta": self.beta}
        if isinstance(self.target, MobiusTarget):
            d["A"], d["B"] = self.target.A, self.target.B
        elif isinstance(self.target, RhoBound):
            d["rho"] = self.target.rho
        return d

    def key(self) -> str:
        t = self.target
        tk = f"A={t.A:g},B={t.B:g}" if isinstance(t, MobiusTarget) else (
            f"rho={t.rho:g}" if isinstance(t, RhoBound) else "-")
        return (f"p={self.p},n={self.n},mu={self.mu.real:g}{self.mu.imag:+g}i,"
                f"a={self.alpha:g},b={self.beta:g},{tk}")


@dataclass(frozen=True, eq=False)
class FunctionSamples:
    """``log h`` and ``z h'/h`` of one function on fixed points; reused across parameters."""

    f: AnalyticFunction
    points: np.ndarray
    log_h: np.ndarray
    zdh_over_h: np.ndarray

    def phi(self, lam: complex) -> np.ndarray:
        return np.exp(-lam * self.log_h)

    def operator(self, lam: complex, mu: complex) -> np.ndarray:
        return self.phi(lam) * (1 - mu * self.zdh_over_h / self.f.p)

    def head(self, count: int) -> FunctionSamples:
        """Samples at the first ``count`` points (a grid restricted to inner radii)."""
        return FunctionSamples(self.f, self.points[:count], self.log_h[:count],
                               self.zdh_over_h[:count])


def sample_function(f: AnalyticFunction, points) -> FunctionSamples:
    """Continue ``log(f/z**p)`` along rays to each point (raises BranchError on a zero)."""
    pts = np.asarray(points, dtype=complex)
    if np.any(np.abs(pts) >= 1):
        raise ValueError("sample points must lie in the open unit disk")
    h = f.reduced
    dh = h.derivative()
    log_h = radial_log(h.evaluate, pts, dfunc=dh.evaluate)
    ratio = pts * dh.evaluate(pts) / h.evaluate(pts)
    return FunctionSamples(f, pts, log_h, ratio)


def _samples(f, grid, samples):
    if samples is not None:
        return samples
    return sample_function(f, grid.points if isinstance(grid, DiskGrid) else grid)


def phi(f: AnalyticFunction, params: ClassParams, grid: DiskGrid | np.ndarray,
        samples: FunctionSamples | None = None) -> np.ndarray:
    """``(z**p / f) ** (alpha + i beta)`` on the grid, with value 1 at the origin."""
    return _samples(f, grid, samples).phi(params.lam)


def nb_operator(f: AnalyticFunction, params: ClassParams, grid: DiskGrid | np.ndarray,
                samples: FunctionSamples | None = None) -> np.ndarray:
    """``(1 + mu) Phi - mu (z f'/(p f)) Phi`` on the grid."""
    return _samples(f, grid, samples).operator(params.lam, params.mu)


def identity_check(f: AnalyticFunction, params: ClassParams, grid: DiskGrid,
                   samples: FunctionSamples | None = None,
                   max_radius: float = IDENTITY_RADIUS) -> float:
    """Largest ``|J - Phi - mu z Phi' / (p lam)|`` on circles up to ``max_radius``.

    ``Phi'`` comes only from the sampled Phi: each circle is expanded by FFT
    and the series differentiated.
    """
    sub = grid.restrict(max_radius)
    # inner radii come first, so samples on the full grid restrict by slicing
    s = samples.head(sub.points.size) if samples is not None else sample_function(f, sub.points)
    ph = s.phi(params.lam)
    jj = s.operator(params.lam, params.mu)
    ph0, ph_rows = sub.split(ph)
    j0, j_rows = sub.split(jj)
    dphi = np.stack([circle_derivative(row, r) for row, r in zip(ph_rows, sub.radii)])
    resid = j_rows - ph_rows - params.mu * sub.circles * dphi / (params.p * params.lam)
    return float(max(abs(j0 - ph0), np.max(np.abs(resid))))


@dataclass
class MembershipVerdict:
    params: ClassParams
    verdict: SubordinationVerdict | None = None
    min_re: float | None = None
    argmin_z: complex | None = None
    passes: bool | None = None

    @property
    def certified(self) -> bool:
        if self.verdict is not None:
            return self.verdict.certified
        return bool(self.passes)

    def to_dict(self) -> dict:
        d = {"params": self.params.to_dict()}
        if self.verdict is not None:
            d["verdict"] = self.verdict.to_dict()
        else:
            d.update(min_re=self.min_re, passes=self.passes,
                     argmin_z=[self.argmin_z.real, self.argmin_z.imag])
        return d


def _tol(f: AnalyticFunction, tol: float) -> float:
    return tol + f.tail_bound


def membership_def1(f: AnalyticFunction, params: ClassParams, grid: DiskGrid,
                    samples: FunctionSamples | None = None,
                    tol: float = DEFAULT_TOL) -> MembershipVerdict:
    """Subordination of J to the Moebius target of ``params``."""
    if not isinstance(params.target, MobiusTarget):
        raise ValueError("membership_def1 needs a MobiusTarget")
    jj = nb_operator(f, params, grid, samples)
    v = check_subordination(jj, params.target, grid, tol=_tol(f, tol))
    return MembershipVerdict(params, verdict=v)


def membership_def2(f: AnalyticFunction, params: ClassParams, grid: DiskGrid,
                    samples: FunctionSamples | None = None, tol: float = DEFAULT_TOL,
                    xatol: float = 1e-6) -> MembershipVerdict:
    """``min Re J > rho`` over the grid, refined near the coarse minimiser."""
    from scipy.optimize import minimize_scalar

    if not isinstance(params.target, RhoBound):
        raise ValueError("membership_def2 needs a RhoBound")
    jj = nb_operator(f, params, grid, samples)
    re = np.real(jj)
    i = int(np.argmin(re))
    z0 = grid.points[i]
    best, best_z = float(re[i]), complex(z0)
    if z0 != 0:
        r, th0 = abs(z0), float(np.angle(z0))
        dth = 2 * np.pi / grid.angles_per_circle

        def obj(th):
            z = np.array([r * np.exp(1j * th)])
            return float(np.real(nb_operator(f, params, z)[0]))

        res = minimize_scalar(obj, bounds=(th0 - dth, th0 + dth), method="bounded",
                              options={"xatol": xatol})
        if res.fun < best:
            best, best_z = float(res.fun), complex(r * np.exp(1j * res.x))
    rho = params.target.rho
    return MembershipVerdict(params, min_re=best, argmin_z=best_z,
                             passes=bool(best > rho + _tol(f, tol)))


class AnalyticMap(Protocol):
    def __call__(self, z): ...
    def derivative(self, z): ...
    def second_derivative(self, z): ...


@dataclass(frozen=True)
class IntegralDominant:
    """The dominant of ``spec`` packaged as a map with first and second derivatives."""

    spec: DominantSpec

    def __call__(self, z):
        return dominant_values(self.spec, z)

    def derivative(self, z):
        return dominant_derivatives(self.spec, z)[0]

    def second_derivative(self, z):
        return dominant_derivatives(self.spec, z)[1]


def differential_image(q: AnalyticMap, params: ClassParams, z) -> np.ndarray:
    """``q(z) + mu z q'(z) / (p lam)``, the right-hand side of the subordination hypotheses."""
    z = np.asarray(z, dtype=complex)
    return q(z) + params.eta * z * q.derivative(z)


def corollary_rhs(A: float, B: float, params: ClassParams, z) -> np.ndarray:
    """Closed form ``mu (A-B) z / (p lam (1+Bz)^2) + (1+Az)/(1+Bz)``."""
    z = np.asarray(z, dtype=complex)
    return params.eta * (A - B) * z / (1 + B * z) ** 2 + (1 + A * z) / (1 + B * z)


def jsonable(x):
    """Convert complex numbers, numpy scalars and non-finite floats for JSON output."""
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else ("nan" if np.isnan(x) else ("inf" if x > 0 else "-inf"))
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


@dataclass
class TheoremReport:
    """Outcome of one theorem check.

    ``status`` is ``certified``, ``refuted`` (the conclusion failed although
    the hypotheses held: a counterexample), ``inconclusive`` or ``skipped``
    (a hypothesis or precondition did not hold).
    """

    theorem: str
    status: str
    reason: str = ""
    margins: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return jsonable({"theorem": self.theorem, "status": self.status, "reason": self.reason,
                         "margins": self.margins, "witnesses": self.witnesses,
                         "details": self.details, "flags": self.flags})


def _param_flags(params: ClassParams) -> list[str]:
    flags = []
    if params.alpha == 0:
        flags.append("purely imaginary exponent")
    return flags


def _verdict_margin(v: SubordinationVerdict) -> float:
    return float(v.margin) if np.isfinite(v.margin) else float("nan")


def check_theorem_2_1(f: AnalyticFunction, params: ClassParams, grid: DiskGrid,
                      samples: FunctionSamples | None = None, *, swap_dominant: bool = False,
                      assume_member: bool = False, tol: float = DEFAULT_TOL) -> TheoremReport:
    """Chain ``Phi ≺ q ≺ (1+Az)/(1+Bz)`` for a certified member.

    Link 2 is an exact region test of the dominant on the grid; link 1 is the
    per-radius range test ``Phi(|z|<=r) ⊆ q(|z|<=r)``. ``swap_dominant``
    builds q with A and B exchanged (a planted fault).
    """
    th = "2.1"
    flags = _param_flags(params)
    target = params.target
    if not isinstance(target, MobiusTarget):
        return TheoremReport(th, "skipped", "needs a Moebius target", flags=flags)
    g = params.gamma
    if g is None or not g.real > 0:
        return TheoremReport(th, "skipped", "Re gamma must be positive", flags=flags)
    s = _samples(f, grid, samples)
    if not assume_member:
        mem = membership_def1(f, params, grid, s, tol)
        if not mem.certified:
            return TheoremReport(th, "skipped", f"not a certified member ({mem.verdict.status.value})",
                                 flags=flags)
    spec = DominantSpec(g, target.B, target.A) if swap_dominant else DominantSpec(g, target.A, target.B)
    q = dominant_values(spec, grid.points)
    link2 = mobius_image(target, 1.0).margin(q)
    k = int(np.argmin(link2))
    margins = {"link2": float(link2[k])}
    witnesses = {}
    if link2[k] < -tol:
        witnesses["link2"] = {"z": complex(grid.points[k]), "q": complex(q[k])}
        return TheoremReport(th, "refuted", "dominant leaves the target image", margins, witnesses,
                             flags=flags)
    ph = s.phi(params.lam)
    v = check_subordination(ph, SampledTarget(grid, q), grid, tol=_tol(f, tol))
    margins["link1"] = _verdict_margin(v)
    details = {"gamma": g, "link1": v.to_dict()}
    if target.B == -1:
        details["rho_form_gap"] = _rho_form_gap(g, (1 - target.A) / 2)
    if v.refuted:
        witnesses["link1"] = {"z": v.witness[0], "phi": v.witness[1]}
        return TheoremReport(th, "refuted", "Phi escapes q on some radius", margins, witnesses,
                             details, flags)
    status = "certified" if (v.certified and link2[k] > 0) else "inconclusive"
    return TheoremReport(th, status, v.reason, margins, witnesses, details, flags)


def _rho_form_gap(gamma: complex, rho: float) -> float:
    from .dominant import rho_form_dominant

    z = np.array([0.0, 0.4, -0.6 + 0.3j, 0.8j])
    return rho_form_dominant(gamma, rho, z).difference


def lemma2_applies(t1: MobiusTarget, t2: MobiusTarget) -> bool:
    """``-1 <= B1 <= B2 < A2 < A1 <= 1`` (or equal pairs)."""
    if (t1.A, t1.B) == (t2.A, t2.B):
        return True
    return -1 <= t1.B <= t2.B < t2.A < t1.A <= 1


@dataclass
class InclusionReport(TheoremReport):
    counterexamples: list = field(default_factory=list)
    members: int = 0

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["counterexamples"] = jsonable(self.counterexamples)
        d["members"] = self.members
        return d


def check_theorem_2_2(functions: Iterable[tuple[str, AnalyticFunction]], alpha: float, beta: float,
                      mu1: float, mu2: float, t1: MobiusTarget, t2: MobiusTarget, grid: DiskGrid,
                      *, samples: dict | None = None, validate: bool = True,
                      tol: float = DEFAULT_TOL) -> InclusionReport:
    """Members of the (mu2, t2) class must not be refuted in the (mu1, t1) class.

    With ``validate=False`` the hypotheses on (mu1, mu2, t1, t2) are not
    enforced, which is how a corrupted pair is planted.
    """
    th = "2.2"
    if validate:
        if not (0 <= mu1 <= mu2):
            return InclusionReport(th, "skipped", "needs 0 <= mu1 <= mu2")
        if not lemma2_applies(t1, t2):
            return InclusionReport(th, "skipped", "targets not nested as B1 <= B2 < A2 < A1")
    nest = region_nested(mobius_image(t2), mobius_image(t1))
    report = InclusionReport(th, "certified", details={"region_nesting_margin": nest.margin})
    worst = np.inf
    inconclusive = 0
    for fid, f in functions:
        s = samples.get(fid) if samples else None
        s = s if s is not None else sample_function(f, grid.points)
        p2 = ClassParams(f.p, f.n, mu2, alpha, beta, t2)
        m2 = membership_def1(f, p2, grid, s, tol)
        if not m2.certified:
            continue
        report.members += 1
        m1 = membership_def1(f, p2.with_(mu=mu1, target=t1), grid, s, tol)
        if m1.verdict.refuted:
            report.counterexamples.append({"id": fid, "witness_z": m1.verdict.witness[0],
                                           "witness_value": m1.verdict.witness[1],
                                           "margin": m1.verdict.margin})
        elif not m1.verdict.certified:
            inconclusive += 1
        else:
            worst = min(worst, m1.verdict.margin)
    report.margins["min_outer_margin"] = float(worst) if np.isfinite(worst) else float("nan")
    report.details["inconclusive"] = inconclusive
    if report.counterexamples:
        report.status = "refuted"
        report.reason = f"{len(report.counterexamples)} member(s) leave the larger class"
    elif report.members == 0:
        report.status = "skipped"
        report.reason = "no certified members of the smaller class"
    elif inconclusive:
        report.status = "inconclusive"
    return report


def rho_bounds(gamma: complex, rho: float, grid: DiskGrid) -> dict:
    """Bounds on Re Phi for the target ``(1 + (1-2rho) z)/(1 - z)`` in both orderings.

    ``rho + (1 - rho) inf`` / ``rho + (1 - rho) sup`` with inf/sup of Re of the
    rho = 0 dominant. For rho < 1 the first is the lower bound; for rho > 1 the
    factor ``1 - rho`` is negative and the roles swap.
    """
    inf, sup, _, _ = extrema_of_re(DominantSpec(gamma, 1.0, -1.0), grid)
    a = rho + (1 - rho) * inf.value
    b = rho + (1 - rho) * sup.value if np.isfinite(sup.value) else (
        np.inf if rho < 1 else -np.inf)
    return {"with_inf": a, "with_sup": b}


def check_theorem_2_3(f: AnalyticFunction, params: ClassParams, grid: DiskGrid,
                      samples: FunctionSamples | None = None, *,
                      bounds_target: MobiusTarget | None = None, assume_member: bool = False,
                      tol: float = DEFAULT_TOL, extrema=None) -> TheoremReport:
    """``inf Re q < Re Phi < sup Re q`` at every sample.

    ``bounds_target`` replaces the target used for the bounds (a planted
    fault when it differs from the class target).
    """
    th = "2.3"
    flags = _param_flags(params)
    target = params.target
    if not isinstance(target, MobiusTarget):
        return TheoremReport(th, "skipped", "needs a Moebius target", flags=flags)
    g = params.gamma
    if g is None or not g.real > 0:
        return TheoremReport(th, "skipped", "Re gamma must be positive", flags=flags)
    s = _samples(f, grid, samples)
    if not assume_member:
        mem = membership_def1(f, params, grid, s, tol)
        if not mem.certified:
            return TheoremReport(th, "skipped", f"not a certified member ({mem.verdict.status.value})",
                                 flags=flags)
    bt = bounds_target or target
    spec = DominantSpec(g, bt.A, bt.B)
    inf, sup, _, _ = extrema if extrema is not None else extrema_of_re(spec, grid)
    re = np.real(s.phi(params.lam))
    lo = float(np.min(re) - inf.value)
    hi = float(sup.value - np.max(re)) if np.isfinite(sup.value) else np.inf
    margins = {"lower": lo, "upper": hi}
    details = {"inf_re": inf.value, "sup_re": sup.value,
               "min_re_phi": float(np.min(re)), "max_re_phi": float(np.max(re))}
    if bt.B == -1:
        rho = (1 - bt.A) / 2
        details["rho"] = rho
        details["rho_bounds"] = rho_bounds(g, rho, grid) if rho != 1 else None
    if not np.isfinite(sup.value):
        flags.append("sup unbounded: upper check passes")
    if not np.isfinite(inf.value):
        flags.append("inf unbounded: lower check passes")
    witnesses = {}
    if lo < -tol:
        i = int(np.argmin(re))
        witnesses["lower"] = {"z": complex(s.points[i]), "re_phi": float(re[i])}
    if hi < -tol:
        i = int(np.argmax(re))
        witnesses["upper"] = {"z": complex(s.points[i]), "re_phi": float(re[i])}
    if witnesses:
        return TheoremReport(th, "refuted", "Re Phi outside [inf Re q, sup Re q]", margins,
                             witnesses, details, flags)
    return TheoremReport(th, "certified", "", margins, witnesses, details, flags)


def _convexity_bound(params: ClassParams) -> float:
    return max(0.0, -(params.p * params.lam / params.mu).real)


def _grid_convexity(q: AnalyticMap, grid: DiskGrid) -> float:
    z = grid.points
    return convexity_margin(z, q.derivative, q.second_derivative)


def check_theorem_3_1(f: AnalyticFunction, params: ClassParams, q: AnalyticMap, grid: DiskGrid,
                      samples: FunctionSamples | None = None,
                      tol: float = DEFAULT_TOL) -> TheoremReport:
    """``J ≺ q + mu z q'/(p lam)`` with the convexity condition implies ``Phi ≺ q``."""
    th = "3.1"
    flags = _param_flags(params)
    if params.mu == 0:
        return TheoremReport(th, "skipped", "mu must be nonzero", flags=flags)
    bound = _convexity_bound(params)
    cm = _grid_convexity(q, grid)
    margins = {"convexity": cm - bound}
    if not cm > bound:
        return TheoremReport(th, "skipped", "convexity hypothesis fails (vacuous)", margins,
                             flags=flags)
    s = _samples(f, grid, samples)
    jj = s.operator(params.lam, params.mu)
    rhs = SampledTarget(grid, differential_image(q, params, grid.points))
    hyp = check_subordination(jj, rhs, grid, tol=_tol(f, tol))
    margins["hypothesis"] = _verdict_margin(hyp)
    details = {"hypothesis": hyp.to_dict()}
    if not hyp.certified:
        return TheoremReport(th, "skipped", f"hypothesis subordination {hyp.status.value}",
                             margins, details=details, flags=flags)
    ph = s.phi(params.lam)
    if isinstance(q, MobiusTarget):
        con = check_subordination(ph, q, grid, tol=_tol(f, tol))
    else:
        con = check_subordination(ph, SampledTarget(grid, q(grid.points)), grid, tol=_tol(f, tol))
    margins["conclusion"] = _verdict_margin(con)
    details["conclusion"] = con.to_dict()
    if con.refuted:
        return TheoremReport(th, "refuted", "Phi not subordinate to q", margins,
                             {"conclusion": {"z": con.witness[0], "phi": con.witness[1]}},
                             details, flags)
    return TheoremReport(th, con.status.value, con.reason, margins, details=details, flags=flags)


def check_theorem_4_1(f: AnalyticFunction, params: ClassParams, q: AnalyticMap, grid: DiskGrid,
                      samples: FunctionSamples | None = None,
                      tol: float = DEFAULT_TOL) -> TheoremReport:
    """``q + mu z q'/(p lam) ≺ J`` with Re mu > 0 and J univalent implies ``q ≺ Phi``."""
    th = "4.1"
    flags = _param_flags(params)
    if not params.mu.real > 0:
        return TheoremReport(th, "skipped", "precondition Re mu > 0 fails", flags=flags)
    if not params.eta.real > 0:
        flags.append("Re(conj eta) <= 0")
    cm = _grid_convexity(q, grid)
    margins = {"convexity": cm}
    if not cm > 0:
        return TheoremReport(th, "skipped", "q is not convex on the grid", margins, flags=flags)
    s = _samples(f, grid, samples)
    jj = SampledTarget(grid, s.operator(params.lam, params.mu))
    diag = univalence_diagnostic(jj)
    if not diag.passed:
        return TheoremReport(th, "inconclusive", f"J univalence diagnostic: {diag.reason}",
                             margins, flags=flags)
    hyp = check_subordination(differential_image(q, params, grid.points), jj, grid,
                              tol=_tol(f, tol), check_univalence=False)
    margins["hypothesis"] = _verdict_margin(hyp)
    details = {"hypothesis": hyp.to_dict()}
    if not hyp.certified:
        return TheoremReport(th, "skipped", f"hypothesis superordination {hyp.status.value}",
                             margins, details=details, flags=flags)
    con = check_subordination(q(grid.points), SampledTarget(grid, s.phi(params.lam)), grid,
                              tol=_tol(f, tol))
    margins["conclusion"] = _verdict_margin(con)
    details["conclusion"] = con.to_dict()
    if con.refuted:
        return TheoremReport(th, "refuted", "q not subordinate to Phi", margins,
                             {"conclusion": {"z": con.witness[0], "q": con.witness[1]}},
                             details, flags)
    return TheoremReport(th, con.status.value, con.reason, margins, details=details, flags=flags)


def check_theorem_5_1(f: AnalyticFunction, params: ClassParams, q1: AnalyticMap, q2: AnalyticMap,
                      grid: DiskGrid, samples: FunctionSamples | None = None,
                      tol: float = DEFAULT_TOL) -> TheoremReport:
    """Sandwich ``q1 ≺ Phi ≺ q2`` from the two-sided hypothesis."""
    th = "5.1"
    s = _samples(f, grid, samples)
    lower = check_theorem_4_1(f, params, q1, grid, s, tol)
    upper = check_theorem_3_1(f, params, q2, grid, s, tol)
    details = {"subordinant": lower.to_dict(), "dominant": upper.to_dict()}
    margins = {"lower": lower.margins.get("conclusion", float("nan")),
               "upper": upper.margins.get("conclusion", float("nan"))}
    flags = sorted(set(lower.flags) | set(upper.flags))
    statuses = {lower.status, upper.status}
    if "refuted" in statuses:
        return TheoremReport(th, "refuted", "sandwich conclusion fails", margins, details=details,
                             flags=flags)
    if "skipped" in statuses:
        side = "subordinant" if lower.status == "skipped" else "dominant"
        why = lower.reason if lower.status == "skipped" else upper.reason
        return TheoremReport(th, "skipped", f"{side} side: {why}", margins, details=details,
                             flags=flags)
    if statuses == {"certified"}:
        return TheoremReport(th, "certified", "", margins, details=details, flags=flags)
    return TheoremReport(th, "inconclusive", "one side inconclusive", margins, details=details,
                         flags=flags)


def schwarz_ratio(f: AnalyticFunction, params: ClassParams, grid: DiskGrid,
                  samples: FunctionSamples | None = None) -> float:
    """``max |w(z)|/|z|`` for the Schwarz function of J against the Moebius target."""
    return schwarz_witness(nb_operator(f, params, grid, samples), params.target, grid).max_ratio
