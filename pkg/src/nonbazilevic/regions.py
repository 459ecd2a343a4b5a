"""Images of disks under real Moebius maps, range tests and subordination verdicts."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Union

import numpy as np

from .series import DiskGrid, circle_derivative

CERTIFY_RADIUS = 0.99
ORIGIN_TOL = 1e-9
DEFAULT_TOL = 1e-6


class NearBoundaryError(ValueError):
    """A test point lies too close to the sampled curve to count windings."""


@dataclass(frozen=True)
class MobiusTarget:
    """The map ``(1 + A z) / (1 + B z)`` with real A, B."""

    A: float
    B: float

    def __post_init__(self):
        if not (np.isfinite(self.A) and np.isfinite(self.B)):
            raise ValueError("A and B must be finite")
        if not -1.0 <= self.B <= 1.0:
            raise ValueError(f"B must lie in [-1, 1], got {self.B}")
        if self.A == self.B:
            raise ValueError("A must differ from B")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (1 + self.A * z) / (1 + self.B * z)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.A - self.B) / (1 + self.B * z) ** 2

    def second_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return -2 * self.B * (self.A - self.B) / (1 + self.B * z) ** 3

    def inverse(self, w):
        """Exact inverse map ``z = (w - 1) / (A - B w)``."""
        w = np.asarray(w, dtype=complex)
        return (w - 1) / (self.A - self.B * w)

    @classmethod
    def from_rho(cls, rho: float) -> MobiusTarget:
        """``(1 + (1 - 2 rho) z) / (1 - z)``, the half-plane ``Re w > rho``."""
        return cls(1.0 - 2.0 * rho, -1.0)


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    def margin(self, w):
        return self.radius - np.abs(np.asarray(w, dtype=complex) - self.center)

    def to_dict(self) -> dict:
        return {"kind": "disk", "center": [self.center.real, self.center.imag],
                "radius": self.radius}


@dataclass(frozen=True)
class HalfPlane:
    """``{Re w > threshold}`` when ``sense == ">"``, else ``{Re w < threshold}``."""

    threshold: float
    sense: str = ">"

    def __post_init__(self):
        if self.sense not in (">", "<"):
            raise ValueError("sense must be '>' or '<'")

    def margin(self, w):
        re = np.real(np.asarray(w, dtype=complex))
        return re - self.threshold if self.sense == ">" else self.threshold - re

    def to_dict(self) -> dict:
        return {"kind": "halfplane", "threshold": self.threshold, "sense": self.sense}


Region = Union[Disk, HalfPlane]


def mobius_image(target: MobiusTarget, r: float = 1.0) -> Region:
    """Image of ``|z| < r`` under ``(1 + A z) / (1 + B z)``."""
    if not 0 < r <= 1:
        raise ValueError(f"radius must lie in (0, 1], got {r}")
    A, B = target.A, target.B
    if abs(B) * r < 1:
        den = 1 - B * B * r * r
        return Disk(complex((1 - A * B * r * r) / den), abs(A - B) * r / den)
    # |B| = 1, r = 1: the unit circle passes through the pole
    threshold = (1 + A * B) / 2
    # the image contains target(0) = 1
    return HalfPlane(threshold, ">" if 1 > threshold else "<")


def region_contains(region: Region, w):
    """Signed distance of w to the region boundary, positive inside."""
    return region.margin(w)


class Nesting(NamedTuple):
    nested: bool
    margin: float


def region_nested(inner: Region, outer: Region, tol: float = 1e-12) -> Nesting:
    """Exact containment test ``inner ⊆ outer`` with the slack as margin."""
    if isinstance(inner, Disk) and isinstance(outer, Disk):
        m = outer.radius - inner.radius - abs(inner.center - outer.center)
    elif isinstance(inner, Disk):
        if outer.sense == ">":
            m = inner.center.real - inner.radius - outer.threshold
        else:
            m = outer.threshold - inner.center.real - inner.radius
    elif isinstance(outer, HalfPlane) and inner.sense == outer.sense:
        d = inner.threshold - outer.threshold
        m = d if inner.sense == ">" else -d
    else:
        return Nesting(False, -np.inf)
    return Nesting(bool(m >= -tol), float(m))


def winding_number(curve, w0, near_tol: float = 1e-9) -> int:
    """Winding number of the closed polygon ``curve`` around ``w0``.

    The first and last samples must coincide. Each segment contributes its
    exact subtended angle, so the count is exact for the polygon.
    """
    curve = np.asarray(curve, dtype=complex)
    if abs(curve[0] - curve[-1]) > 1e-12:
        raise ValueError("curve is not closed")
    return int(winding_numbers(curve[:-1], np.asarray([w0]), near_tol=near_tol,
                               raise_near=True)[0])


def _segment_distance(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Distance from each w (rows) to each segment [a, b] (columns)."""
    ab = b - a
    L2 = np.abs(ab) ** 2
    L2 = np.where(L2 == 0, 1.0, L2)
    t = np.real((w[:, None] - a[None, :]) * np.conj(ab)[None, :]) / L2[None, :]
    t = np.clip(t, 0.0, 1.0)
    return np.abs(w[:, None] - (a[None, :] + t * ab[None, :]))


def winding_numbers(loop, points, *, near_tol: float = 1e-9, raise_near: bool = False,
                    sag=None, chunk: int = 256):
    """Winding numbers of the periodic polygon ``loop`` around many points.

    ``loop`` lists the vertices once (it is closed implicitly). Returns
    ``(windings, clearances)`` where a clearance is the distance to the
    polygon, reduced segment-wise by ``sag`` (the possible deviation of the
    true curve from each chord) when given. With ``raise_near`` a point closer
    than ``near_tol`` raises ``NearBoundaryError`` and only the windings are
    returned.
    """
    loop = np.asarray(loop, dtype=complex).reshape(-1)
    pts = np.asarray(points, dtype=complex).reshape(-1)
    a, b = loop, np.roll(loop, -1)
    sag = np.zeros(loop.size) if sag is None else np.asarray(sag, dtype=float)
    wind = np.empty(pts.size, dtype=int)
    dist = np.empty(pts.size)
    for s in range(0, pts.size, chunk):
        w = pts[s : s + chunk]
        d = (_segment_distance(a, b, w) - sag[None, :]).min(axis=1)
        da = a[None, :] - w[:, None]
        db = b[None, :] - w[:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            total = np.angle(db / da).sum(axis=1)
        wind[s : s + chunk] = np.rint(np.nan_to_num(total) / (2 * np.pi)).astype(int)
        dist[s : s + chunk] = d
    if raise_near:
        if np.any(dist < near_tol):
            raise NearBoundaryError("point within tolerance of the curve")
        return wind
    return wind, dist


def segment_sag(loop) -> np.ndarray:
    """Per-chord bound on how far a smooth sampled loop strays from its polygon.

    A chord of a curve sampled at step h deviates by about ``h**2 |c''| / 8``;
    the second differences at both ends stand in for ``h**2 |c''|`` with a
    safety factor of two.
    """
    loop = np.asarray(loop, dtype=complex)
    d2 = np.abs(np.roll(loop, 1) - 2 * loop + np.roll(loop, -1))
    return np.maximum(d2, np.roll(d2, -1)) / 4


def signed_clearance(loop, points):
    """Positive inside the loop, negative outside, zero where the chord error decides."""
    wind, dist = winding_numbers(loop, points, sag=segment_sag(loop))
    dist = np.maximum(dist, 0.0)
    return np.where(wind != 0, dist, -dist), wind


class Status(str, enum.Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass
class SubordinationVerdict:
    """Three-valued outcome of a sampled subordination test.

    ``margin`` is a signed distance: positive for Certified (the smallest
    clearance), negative for Refuted (the worst violation, attained at the
    witness).
    """

    status: Status
    margin: float
    witness: tuple[complex, complex] | None = None
    radii_checked: list[float] = field(default_factory=list)
    reason: str = ""

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    @property
    def refuted(self) -> bool:
        return self.status is Status.REFUTED

    def to_dict(self) -> dict:
        wz = wv = None
        if self.witness is not None:
            wz = [self.witness[0].real, self.witness[0].imag]
            wv = [self.witness[1].real, self.witness[1].imag]
        return {
            "status": self.status.value,
            "margin": _finite_or_none(self.margin),
            "witness_z": wz,
            "witness_value": wv,
            "radii_checked": [float(r) for r in self.radii_checked],
            "reason": self.reason,
        }


def _finite_or_none(x):
    return float(x) if np.isfinite(x) else None


@dataclass(frozen=True, eq=False)
class SampledTarget:
    """A target known through its values on a DiskGrid (aligned with ``grid.points``)."""

    grid: DiskGrid
    values: np.ndarray

    @classmethod
    def from_callable(cls, func: Callable, grid: DiskGrid) -> SampledTarget:
        return cls(grid, np.asarray(func(grid.points), dtype=complex))

    @property
    def origin(self) -> complex:
        return complex(self.values[0])

    def rows(self) -> np.ndarray:
        return self.grid.split(self.values)[1]


class UnivalenceDiagnostic(NamedTuple):
    passed: bool
    min_derivative: float
    min_separation: float
    winding_at_origin_value: int
    reason: str


def univalence_diagnostic(target: SampledTarget, *, coarse_step: int = 8,
                          deriv_tol: float = 1e-8, sep_tol: float = 1e-9
                          ) -> UnivalenceDiagnostic:
    """Necessary checks for univalence of a sampled analytic map.

    Checks a nonvanishing derivative on every circle (spectral derivative),
    that coarse samples are pairwise distinct, and that the outer curve winds
    exactly once around the value at the origin.
    """
    rows = target.rows()
    radii = target.grid.radii
    dmin = min(float(np.min(np.abs(circle_derivative(row, r)))) for row, r in zip(rows, radii))
    coarse = np.concatenate([[target.origin], rows[:, ::coarse_step].reshape(-1)])
    scale = max(1.0, float(np.max(np.abs(coarse))))
    diff = np.abs(coarse[:, None] - coarse[None, :])
    np.fill_diagonal(diff, np.inf)
    sep = float(diff.min())
    try:
        wind = winding_numbers(rows[-1], [target.origin], near_tol=0.0, raise_near=True)[0]
    except NearBoundaryError:
        wind = 0
    if dmin <= deriv_tol * scale:
        return UnivalenceDiagnostic(False, dmin, sep, int(wind), "derivative vanishes on the grid")
    if sep <= sep_tol * scale:
        return UnivalenceDiagnostic(False, dmin, sep, int(wind), "coarse samples collide")
    if wind != 1:
        return UnivalenceDiagnostic(False, dmin, sep, int(wind), "outer curve does not wind once")
    return UnivalenceDiagnostic(True, dmin, sep, int(wind), "")


def _grid_values(grid: DiskGrid, values) -> tuple[complex, np.ndarray]:
    values = np.asarray(values, dtype=complex)
    if values.shape != grid.points.shape:
        raise ValueError("values must be aligned with grid.points")
    return grid.split(values)


def check_subordination(left_values, target: MobiusTarget | SampledTarget, grid: DiskGrid,
                        *, tol: float = DEFAULT_TOL, r_max: float = CERTIFY_RADIUS,
                        check_univalence: bool = True) -> SubordinationVerdict:
    """Decide ``left ≺ target`` from samples of ``left`` on ``grid``.

    Refutes when some sample at ``|z| = s`` falls outside the target image of
    ``|z| <= s`` by more than ``tol`` (Schwarz lemma). Certifies when
    ``left(0) = target(0)`` and every sample with ``|z| <= r_max`` lies inside
    the target image of some kept circle with clearance above ``tol``.
    Anything else is Inconclusive.
    """
    left0, rows = _grid_values(grid, left_values)
    radii = grid.radii
    keep = radii <= r_max + 1e-15
    checked = [float(r) for r in radii[keep]]

    if isinstance(target, MobiusTarget):
        t0 = 1.0 + 0j
    else:
        if target.grid.radii.shape != radii.shape or np.any(target.grid.radii != radii) \
                or target.grid.angles_per_circle != grid.angles_per_circle:
            raise ValueError("sampled target must share the grid of the left side")
        t0 = target.origin
    if abs(left0 - t0) > ORIGIN_TOL:
        return SubordinationVerdict(Status.REFUTED, -abs(left0 - t0), (0j, complex(left0)),
                                    checked, "values differ at the origin")

    if isinstance(target, MobiusTarget):
        per_radius = np.stack([mobius_image(target, float(r)).margin(row)
                               for r, row in zip(radii[keep], rows[keep])])
        outer = mobius_image(target, 1.0).margin(rows[keep])
    else:
        if check_univalence:
            diag = univalence_diagnostic(target)
            if not diag.passed:
                return SubordinationVerdict(Status.INCONCLUSIVE, np.nan, None, checked,
                                            f"target univalence diagnostic: {diag.reason}")
        trows = target.rows()
        per_radius = np.stack([signed_clearance(trow, row)[0]
                               for row, trow in zip(rows[keep], trows[keep])])
        k_out = int(np.nonzero(keep)[0][-1])
        outer = signed_clearance(trows[k_out], rows[keep].reshape(-1))[0].reshape(per_radius.shape)

    worst = per_radius + tol
    i, j = np.unravel_index(np.argmin(worst), worst.shape)
    if worst[i, j] < 0:
        z = complex(grid.circles[keep][i, j])
        return SubordinationVerdict(Status.REFUTED, float(per_radius[i, j]),
                                    (z, complex(rows[keep][i, j])), checked,
                                    f"outside the target image of |z| <= {radii[keep][i]:g}")
    # inside the image of any smaller disk is inside the image of U; near a pole of
    # the target the outer curve is poorly resolved, so undecided samples also
    # try the inner target curves
    best = np.maximum(outer, per_radius)
    if not isinstance(target, MobiusTarget):
        kept_rows = trows[keep]
        for k in range(kept_rows.shape[0] - 2, -1, -1):
            pending = best - tol <= 0
            if not pending.any():
                break
            best[pending] = np.maximum(best[pending],
                                       signed_clearance(kept_rows[k], rows[keep][pending])[0])
    clearance = best - tol
    m = float(best.min())
    if np.all(clearance > 0):
        return SubordinationVerdict(Status.CERTIFIED, m, None, checked)
    i, j = np.unravel_index(np.argmin(clearance), clearance.shape)
    return SubordinationVerdict(Status.INCONCLUSIVE, m,
                                (complex(grid.circles[keep][i, j]), complex(rows[keep][i, j])),
                                checked, "samples within tolerance of the target boundary")


@dataclass
class SchwarzWitness:
    w: np.ndarray
    max_ratio: float
    failures: int


def schwarz_witness(left_values, target: MobiusTarget, grid: DiskGrid,
                    blowup_tol: float = 1e-12) -> SchwarzWitness:
    """Recover ``w = target^{-1}(left)`` and report ``max |w(z)| / |z|``."""
    left = np.asarray(left_values, dtype=complex)
    den = target.A - target.B * left
    bad = np.abs(den) < blowup_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(bad, np.nan, (left - 1) / np.where(bad, 1.0, den))
    z = grid.points
    nz = (np.abs(z) > 0) & ~bad
    ratio = float(np.max(np.abs(w[nz]) / np.abs(z[nz]))) if np.any(nz) else 0.0
    return SchwarzWitness(w, ratio, int(bad.sum()))


def convexity_margin(z, dq, d2q) -> float:
    """``min Re(1 + z q''(z) / q'(z))`` over the sample points.

    ``dq`` and ``d2q`` are either callables or values aligned with ``z``.
    """
    z = np.asarray(z, dtype=complex)
    d1 = np.asarray(dq(z) if callable(dq) else dq, dtype=complex)
    d2 = np.asarray(d2q(z) if callable(d2q) else d2q, dtype=complex)
    if np.any(np.abs(d1) == 0):
        raise ValueError("q' vanishes at a sample point")
    return float(np.min(np.real(1 + z * d2 / d1)))


def convex_combination_check(f_values, g_values, region: Region, mu: float,
                             tol: float = 0.0) -> bool:
    """Whether ``mu f + (1 - mu) g`` stays inside a convex region."""
    if not 0 <= mu <= 1:
        raise ValueError("mu must lie in [0, 1]")
    combo = mu * np.asarray(f_values, dtype=complex) + (1 - mu) * np.asarray(g_values, dtype=complex)
    return bool(np.all(region.margin(combo) >= -tol))
