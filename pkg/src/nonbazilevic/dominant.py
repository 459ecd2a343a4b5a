"""The integral dominant q(z) = g ∫_0^1 (1 + A z u) / (1 + B z u) u^(g-1) du.

Two independent evaluations are provided: a double-exponential (tanh-sinh)
quadrature that absorbs the ``u**(Re g - 1)`` endpoint singularity, and the
term-wise integrated power series. They are meant to check each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .regions import MobiusTarget
from .series import DiskGrid

QUAD_TOL = 1e-12
SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 10_000
UNBOUNDED = 1e6


class QuadratureError(ValueError):
    pass


class SlowConvergenceError(ValueError):
    pass


@dataclass(frozen=True)
class DominantSpec:
    """Exponent ``gamma`` and Moebius coefficients of the dominant."""

    gamma: complex
    A: float
    B: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", complex(self.gamma))
        if not self.gamma.real > 0:
            raise ValueError(f"Re gamma must be positive, got {self.gamma}")
        MobiusTarget(self.A, self.B)  # validates the pair

    @classmethod
    def from_params(cls, p: int, n: int, mu: complex, alpha: float, beta: float,
                    A: float, B: float) -> DominantSpec:
        if mu == 0:
            raise ValueError("mu must be nonzero for the dominant")
        return cls(p * complex(alpha, beta) / (mu * n), A, B)

    @property
    def target(self) -> MobiusTarget:
        return MobiusTarget(self.A, self.B)

    def to_dict(self) -> dict:
        return {"gamma": [self.gamma.real, self.gamma.imag], "A": self.A, "B": self.B}


class QuadResult(NamedTuple):
    value: np.ndarray
    error: np.ndarray


def _tail_extent(c: complex, digits: float = 40.0) -> tuple[float, float]:
    """Range of t beyond which the tanh-sinh integrand is negligible."""
    left = np.arcsinh((digits + np.log(1 + abs(c))) / (np.pi * c.real))
    right = np.arcsinh((digits + 15.0) / np.pi)
    return -left - 0.5, right + 0.5


def _nodes(t: np.ndarray, c: complex):
    """u(t), 1 - u(t) and weight ``pi cosh t (1-u) u**c`` for u = 1/(1+exp(-pi sinh t))."""
    s = np.pi * np.sinh(t)
    log_u = -np.logaddexp(0.0, -s)
    one_minus_u = np.exp(-np.logaddexp(0.0, s))
    u = np.exp(log_u)
    weight = np.pi * np.cosh(t) * one_minus_u * np.exp(c * log_u)
    return u, weight


def power_weighted_integral(h: Callable[[np.ndarray], np.ndarray], c: complex, z,
                            *, tol: float = QUAD_TOL, max_level: int = 9) -> QuadResult:
    """``c ∫_0^1 h(z u) u**(c-1) du`` by tanh-sinh quadrature, vectorised over z.

    The step is halved until successive estimates agree to ``tol`` (or the
    level cap is reached); the last difference is returned as the error.
    """
    c = complex(c)
    if not c.real > 0:
        raise QuadratureError("Re c must be positive for convergence at u = 0")
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1)
    lo, hi = _tail_extent(c)
    h0 = 0.25
    k = np.arange(np.floor(lo / h0), np.ceil(hi / h0) + 1)
    t = k * h0

    def partial(tt):
        u, w = _nodes(tt, c)
        vals = h(np.outer(flat, u))
        return vals @ w

    total = partial(t)
    est = c * h0 * total
    err = np.full(flat.shape, np.inf)
    step = h0
    for _ in range(max_level):
        step /= 2
        k = np.arange(np.floor(lo / step), np.ceil(hi / step) + 1)
        t_new = k[k % 2 == 1] * step
        total = total + partial(t_new)
        new = c * step * total
        err = np.abs(new - est)
        est = new
        if np.all(err < tol):
            break
    return QuadResult(est.reshape(z.shape), err.reshape(z.shape))


def _check_pole(spec: DominantSpec, z: np.ndarray) -> None:
    if np.any(np.abs(spec.B * z) >= 1):
        raise QuadratureError("|B z| >= 1 puts the pole on the integration path")


def dominant_quadrature(spec: DominantSpec, z, *, tol: float = QUAD_TOL,
                        with_error: bool = False):
    """Value of the dominant at z by quadrature (optionally with error estimate)."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise ValueError("z must lie in the open unit disk")
    _check_pole(spec, z)
    target = spec.target
    res = power_weighted_integral(target, spec.gamma, z, tol=tol)
    if with_error:
        return res.value[()], res.error[()]
    return res.value[()]


def series_coefficients(spec: DominantSpec, terms: int) -> np.ndarray:
    """Taylor coefficients ``[1, c_1, c_2, ...]`` of the dominant.

    ``c_{k+1} = gamma (A - B) (-B)**k / (gamma + k + 1)``.
    """
    k = np.arange(terms)
    out = np.empty(terms + 1, dtype=complex)
    out[0] = 1.0
    out[1:] = spec.gamma * (spec.A - spec.B) * (-spec.B) ** k.astype(float) / (spec.gamma + k + 1)
    return out


class SeriesResult(NamedTuple):
    value: np.ndarray
    coeffs: np.ndarray


def dominant_series(spec: DominantSpec, z, *, tol: float = SERIES_TOL) -> SeriesResult:
    """Value of the dominant from its power series, with the coefficients used."""
    z = np.asarray(z, dtype=complex)
    bz = float(np.max(np.abs(spec.B * z))) if z.size else 0.0
    if bz >= 1 - 1e-3:
        raise SlowConvergenceError("|B z| too close to 1 for the series; use quadrature")
    scale = abs(spec.gamma * (spec.A - spec.B))
    if spec.B == 0 or bz == 0:
        terms = 1
    else:
        # term k has size <= scale * |Bz|^k |z| / |gamma + k + 1|
        terms = int(np.ceil(np.log(tol / max(scale, 1e-300)) / np.log(bz))) + 2
        terms = min(max(terms, 1), SERIES_MAX_TERMS)
    coeffs = series_coefficients(spec, terms)
    value = np.polynomial.polynomial.polyval(z, coeffs)
    return SeriesResult(np.asarray(value)[()], coeffs)


def lemma1_transform(h: Callable[[np.ndarray], np.ndarray], gamma: complex, n: int, z,
                     *, tol: float = QUAD_TOL):
    """``(g/n) z^(-g/n) ∫_0^z t^(g/n - 1) h(t) dt`` via ``t = z u``."""
    c = complex(gamma) / n
    if not c.real > 0:
        raise QuadratureError("Re(gamma / n) must be positive")
    return power_weighted_integral(h, c, z, tol=tol).value[()]


class RhoForms(NamedTuple):
    direct: complex
    shifted: complex
    difference: float


def rho_form_dominant(gamma: complex, rho: float, z) -> RhoForms:
    """Dominant for target ``(1 + (1-2 rho) z)/(1 - z)`` computed in two forms.

    ``direct`` uses A = 1 - 2 rho, B = -1; ``shifted`` is
    ``rho + (1 - rho) g ∫ (1 + z u)/(1 - z u) u^(g-1) du``.
    """
    direct = dominant_quadrature(DominantSpec(gamma, 1 - 2 * rho, -1.0), z)
    base = dominant_quadrature(DominantSpec(gamma, 1.0, -1.0), z)
    shifted = rho + (1 - rho) * base
    return RhoForms(direct, shifted, float(np.max(np.abs(np.asarray(direct - shifted)))))


def dominant_values(spec: DominantSpec, z) -> np.ndarray:
    """Dominant on arbitrary points: series where it converges fast, else quadrature."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    fast = np.abs(spec.B * z) <= 0.9
    if np.any(fast):
        out[fast] = dominant_series(spec, z[fast]).value
    if np.any(~fast):
        out[~fast] = dominant_quadrature(spec, z[~fast])
    return out


def dominant_derivatives(spec: DominantSpec, z) -> tuple[np.ndarray, np.ndarray]:
    """q' and q'' from the integral differentiated under the sign.

    ``q'(z) = g ∫ (A - B) u / (1 + B z u)^2 u^(g-1) du`` and
    ``q''(z) = g ∫ -2 B (A - B) u^2 / (1 + B z u)^3 u^(g-1) du``.
    """
    z = np.asarray(z, dtype=complex)
    A, B = spec.A, spec.B
    # u enters only through zu; divide by z after integrating, handling z = 0 apart
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    d1 = power_weighted_integral(lambda w: (A - B) * w / (1 + B * w) ** 2, spec.gamma, zs).value / zs
    d2 = power_weighted_integral(lambda w: -2 * B * (A - B) * w * w / (1 + B * w) ** 3,
                                 spec.gamma, zs).value / zs ** 2
    c1 = spec.gamma * (A - B) / (spec.gamma + 1)
    c2 = 2 * spec.gamma * (A - B) * (-B) / (spec.gamma + 2)
    return np.where(small, c1, d1), np.where(small, c2, d2)


class Extremum(NamedTuple):
    value: float
    z: complex


def _refine_on_circle(func: Callable, r: float, theta0: float, dtheta: float,
                      maximize: bool, xatol: float) -> tuple[float, float]:
    """Bounded scalar search for the extreme of ``Re func`` on ``|z| = r`` near ``theta0``."""
    sign = -1.0 if maximize else 1.0
    obj = lambda th: sign * float(np.real(func(np.array([r * np.exp(1j * th)]))[0]))
    res = minimize_scalar(obj, bounds=(theta0 - dtheta, theta0 + dtheta), method="bounded",
                          options={"xatol": xatol})
    f0 = obj(theta0)
    best_th, best = (float(res.x), float(res.fun)) if res.fun <= f0 else (theta0, f0)
    return sign * best, best_th


@dataclass
class DominantReport:
    spec: DominantSpec
    points: np.ndarray
    values: np.ndarray
    series_coeffs: np.ndarray
    inf_re: float
    sup_re: float
    inf_at: complex
    sup_at: complex
    quadrature_error_estimate: float
    sampled_inf: float = np.nan
    sampled_sup: float = np.nan
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def num(x):
            return float(x) if np.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {
            "spec": self.spec.to_dict(),
            "inf_re": num(self.inf_re),
            "sup_re": num(self.sup_re),
            "inf_at": [self.inf_at.real, self.inf_at.imag],
            "sup_at": [self.sup_at.real, self.sup_at.imag],
            "sampled_inf_re": num(self.sampled_inf),
            "sampled_sup_re": num(self.sampled_sup),
            "quadrature_error_estimate": float(self.quadrature_error_estimate),
            "series_coeffs": [[c.real, c.imag] for c in self.series_coeffs],
            "values": [[z.real, z.imag, v.real, v.imag] for z, v in zip(self.points, self.values)],
            "notes": list(self.notes),
        }


def _diverges(spec: DominantSpec) -> float:
    """Sign of the divergence of Re q at ``z -> -1/B`` when ``|B| = 1``, else 0.

    Probes radii ``1 - 10**-k``; a logarithmic singularity shows up as
    roughly equal increments per decade that do not shrink.
    """
    if abs(spec.B) < 1:
        return 0.0
    zeta = -1.0 / spec.B
    ks = np.arange(3, 8)
    vals = np.real(dominant_quadrature(spec, zeta * (1 - 10.0 ** -ks)))
    inc = np.diff(vals)
    if np.any(np.abs(vals) > UNBOUNDED):
        return float(np.sign(vals[-1]))
    if np.all(np.sign(inc) == np.sign(inc[-1])) and abs(inc[-1]) > 0.5 * abs(inc[0]) > 1e-6:
        return float(np.sign(inc[-1]))
    return 0.0


def extrema_of_re(spec: DominantSpec, grid: DiskGrid, *, xatol: float = 1e-4,
                  extrapolate: bool = True) -> tuple[Extremum, Extremum, float, float]:
    """Infimum and supremum of Re q over the disk, estimated from the grid.

    Returns ``(inf, sup, sampled_min, sampled_max)``. The sampled extremes are
    refined angularly on the outermost circle; with ``extrapolate`` the refined
    extremes on the two outermost circles are extended linearly to r = 1, and
    a detected logarithmic blow-up (|B| = 1) is reported as an infinite bound.
    """
    pts = grid.points
    vals = dominant_values(spec, pts)
    re = np.real(vals)
    lo_i, hi_i = int(np.argmin(re)), int(np.argmax(re))
    sampled_lo, sampled_hi = float(re[lo_i]), float(re[hi_i])
    if grid.radii.size == 0 or np.ptp(re) == 0:
        return Extremum(sampled_lo, pts[lo_i]), Extremum(sampled_hi, pts[hi_i]), sampled_lo, sampled_hi

    func = lambda w: dominant_values(spec, w)
    dth = 2 * np.pi / grid.angles_per_circle
    r_out = grid.max_radius

    def refined(maximize: bool, idx: int) -> tuple[float, float]:
        th0 = float(np.angle(pts[idx])) if pts[idx] != 0 else 0.0
        return _refine_on_circle(func, r_out, th0, dth, maximize, xatol)

    lo_val, lo_th = refined(False, lo_i)
    hi_val, hi_th = refined(True, hi_i)
    lo_val, hi_val = min(lo_val, sampled_lo), max(hi_val, sampled_hi)
    inf = Extremum(lo_val, r_out * np.exp(1j * lo_th))
    sup = Extremum(hi_val, r_out * np.exp(1j * hi_th))
    if extrapolate and grid.radii.size >= 2:
        r_in = float(grid.radii[-2])
        lo_in, _ = _refine_on_circle(func, r_in, lo_th, 4 * dth, False, xatol)
        hi_in, _ = _refine_on_circle(func, r_in, hi_th, 4 * dth, True, xatol)
        factor = (1 - r_out) / (r_out - r_in)
        inf = Extremum(min(lo_val, lo_val + (lo_val - lo_in) * factor), np.exp(1j * lo_th))
        sup = Extremum(max(hi_val, hi_val + (hi_val - hi_in) * factor), np.exp(1j * hi_th))
        blow = _diverges(spec)
        if blow > 0:
            sup = Extremum(np.inf, complex(-1.0 / spec.B))
        elif blow < 0:
            inf = Extremum(-np.inf, complex(-1.0 / spec.B))
    return inf, sup, sampled_lo, sampled_hi


def dominant_report(spec: DominantSpec, grid: DiskGrid) -> DominantReport:
    pts = grid.points
    vals, err = dominant_quadrature(spec, pts, with_error=True)
    vals = np.array(vals, dtype=complex)
    vals[pts == 0] = 1.0  # q(0) = 1 by definition
    inf, sup, s_lo, s_hi = extrema_of_re(spec, grid)
    bz = float(np.max(np.abs(spec.B * pts)))
    coeffs = dominant_series(spec, pts[np.abs(pts) <= 0.9]).coeffs if bz < 0.999 \
        else series_coefficients(spec, 64)
    notes = []
    if not np.isfinite(sup.value):
        notes.append("Re q unbounded above on the disk")
    if not np.isfinite(inf.value):
        notes.append("Re q unbounded below on the disk")
    return DominantReport(spec, pts, vals, coeffs, inf.value, sup.value, inf.z, sup.z,
                          float(np.max(err)), s_lo, s_hi, notes)
