"""Truncated power series for p-valent functions on the unit disk.

Functions in the class are normalised as

    f(z) = z**p + a[p+n] z**(p+n) + a[p+n+1] z**(p+n+1) + ...

and are stored through their coefficient list starting at exponent ``p + n``.
Everything here is vectorised over numpy arrays of sample points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_ORDER = 64
TAIL_RADIUS = 0.99
DEFAULT_RADII = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
DEFAULT_ANGLES = 720

# arg increments at or above this trigger step halving along a ray
MAX_ARG_STEP = np.pi / 2


class BranchError(ValueError):
    """The continued logarithm does not exist along a ray (zero on the path)."""


class RefinementRequired(BranchError):
    """Consecutive samples are too far apart to track the argument safely."""


def _as_complex(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    # fold a negative-zero imaginary part onto the principal side (-pi, pi]
    return z.real + 1j * (z.imag + 0.0)


def _check_disk(z: np.ndarray) -> None:
    if np.any(~np.isfinite(z)):
        raise ValueError("non-finite evaluation point")
    if np.any(np.abs(z) >= 1.0):
        raise ValueError("evaluation point outside the open unit disk")


@dataclass(frozen=True, eq=False)
class PowerSeries:
    """Dense truncated series ``sum_k coeffs[k] z**k``."""

    coeffs: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        z = _as_complex(z)
        _check_disk(z)
        return self.evaluate(z)

    def evaluate(self, z):
        """Horner evaluation without the disk check (used on refined ray samples)."""
        z = np.asarray(z, dtype=complex)
        acc = np.full(z.shape, self.coeffs[-1], dtype=complex)
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc

    def derivative(self) -> PowerSeries:
        if self.degree == 0:
            return PowerSeries(np.zeros(1, dtype=complex))
        k = np.arange(1, self.coeffs.size)
        return PowerSeries(self.coeffs[1:] * k, tail_bound=self.tail_bound)

    def power(self, c: complex, order: int | None = None) -> PowerSeries:
        """Series of ``self ** c`` on the branch with value 1 at the origin."""
        return PowerSeries(series_power(self.coeffs, c, order or self.degree))


@dataclass(frozen=True, eq=False)
class AnalyticFunction:
    """A member of A_p stored as its coefficients from exponent ``p + n`` on.

    ``truncation_order`` is N, the largest offset kept: the last stored
    exponent is ``p + N``. ``tail_bound`` estimates the sup of the omitted
    tail on ``|z| <= 0.99``.
    """

    p: int
    n: int
    coeffs: np.ndarray
    truncation_order: int
    tail_bound: float = 0.0
    _dense: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.truncation_order < self.n:
            raise ValueError("truncation order must be at least n")
        if self.tail_bound < 0:
            raise ValueError("tail bound must be nonnegative")
        # reduced series f(z) / z**p = 1 + sum a[p+k] z**k
        dense = np.zeros(self.truncation_order + 1, dtype=complex)
        dense[0] = 1.0
        dense[self.n : self.n + c.size] = c
        dense.setflags(write=False)
        object.__setattr__(self, "_dense", dense)

    @property
    def reduced(self) -> PowerSeries:
        """``f(z) / z**p`` as a series with constant term 1."""
        return PowerSeries(self._dense, tail_bound=self.tail_bound)

    @property
    def series(self) -> PowerSeries:
        """The full series of f, indexed by exponent."""
        full = np.concatenate([np.zeros(self.p, dtype=complex), self._dense])
        return PowerSeries(full, tail_bound=self.tail_bound)

    def __call__(self, z):
        return self.series(z)

    def derivative(self) -> PowerSeries:
        return self.series.derivative()

    def log_derivative_ratio(self, z):
        """``z f'(z) / (p f(z))`` computed from the reduced series (equals 1 at 0)."""
        z = _as_complex(z)
        _check_disk(z)
        h = self.reduced
        return 1.0 + z * h.derivative().evaluate(z) / (self.p * h.evaluate(z))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "truncation_order": self.truncation_order,
            "tail_bound": self.tail_bound,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> AnalyticFunction:
        coeffs = [complex(re, im) for re, im in d["coeffs"]]
        return cls(d["p"], d["n"], np.asarray(coeffs, dtype=complex),
                   d["truncation_order"], d["tail_bound"])


def estimate_tail(coeffs: np.ndarray, order: int, rho: float = TAIL_RADIUS) -> float:
    """Geometric tail heuristic ``|a_last| rho**(N+1) / (1 - rho)``.

    ``|a_last|`` is the largest magnitude among the last four coefficients.
    """
    if coeffs.size == 0:
        return 0.0
    a_last = float(np.max(np.abs(coeffs[-4:])))
    return a_last * rho ** (order + 1) / (1.0 - rho)


def make_function(p: int, n: int, coeffs: Sequence[complex] = (), *,
                  exact: bool = False) -> AnalyticFunction:
    """Build ``z**p + sum_k coeffs[k] z**(p+n+k)``.

    With ``exact=True`` the coefficients are taken to be the whole function
    (a polynomial) and the tail bound is zero.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"valence p must be a positive integer, got {p!r}")
    if int(n) != n or n < 1:
        raise ValueError(f"gap n must be a positive integer, got {n!r}")
    c = np.asarray(list(coeffs), dtype=complex).reshape(-1)
    if not np.all(np.isfinite(c)):
        raise ValueError("non-finite coefficient")
    order = max(n, n + c.size - 1)
    tail = 0.0 if exact else estimate_tail(c, order)
    return AnalyticFunction(int(p), int(n), c, order, tail)


def from_reduced(p: int, n: int, reduced: Sequence[complex], *,
                 exact: bool = False) -> AnalyticFunction:
    """Build f from the dense series of ``f(z) / z**p``.

    The constant term must be 1 and offsets 1 .. n-1 must vanish.
    """
    r = np.asarray(reduced, dtype=complex).reshape(-1)
    if r.size == 0 or abs(r[0] - 1.0) > 1e-14:
        raise ValueError("f/z^p must have constant term 1")
    if np.any(np.abs(r[1:n]) > 0.0):
        raise ValueError(f"coefficients of z^(p+1) .. z^(p+{n - 1}) must vanish")
    return make_function(p, n, r[n:], exact=exact)


def series_power(coeffs: Sequence[complex], c: complex, order: int) -> np.ndarray:
    """Coefficients of ``a(z) ** c`` up to ``z**order`` for ``a(0) == 1``.

    Uses the recurrence ``k g_k = sum_{j=1..k} (c j - (k - j)) a_j g_{k-j}``
    obtained from ``a g' = c a' g``.
    """
    a = np.zeros(order + 1, dtype=complex)
    src = np.asarray(coeffs, dtype=complex)[: order + 1]
    a[: src.size] = src
    if abs(a[0] - 1.0) > 1e-14:
        raise ValueError("series power needs constant term 1")
    g = np.zeros(order + 1, dtype=complex)
    g[0] = 1.0
    for k in range(1, order + 1):
        j = np.arange(1, k + 1)
        g[k] = np.dot((c * j - (k - j)) * a[1 : k + 1], g[k - 1 :: -1][:k]) / k
    return g


def mobius_coefficients(A: float, B: float, order: int) -> np.ndarray:
    """Taylor coefficients of ``(1 + A z) / (1 + B z)`` up to ``z**order``."""
    out = np.zeros(order + 1, dtype=complex)
    out[0] = 1.0
    k = np.arange(order)
    out[1:] = (A - B) * (-B) ** k.astype(float)
    return out


def principal_power(w, c):
    """``exp(c Log w)`` with the principal logarithm, ``Im Log w`` in (-pi, pi]."""
    w, c = np.broadcast_arrays(_as_complex(w), np.asarray(c, dtype=complex))
    zero = w == 0
    if np.any(zero & (c.real <= 0)):
        raise ValueError("0 ** c is undefined for Re c <= 0")
    out = np.exp(c * np.log(np.where(zero, 1.0, w)))
    return np.where(zero, 0.0, out)[()]


def _arg_increments(values: np.ndarray, zero_tol: float) -> np.ndarray:
    if np.any(np.abs(values) <= zero_tol):
        raise BranchError("function vanishes on the continuation path")
    return np.angle(values[..., 1:] / values[..., :-1])


def tracked_log(values, zero_tol: float = 1e-12) -> np.ndarray:
    """Continuous logarithm of samples along a path starting at value 1.

    Works along the last axis. Raises ``RefinementRequired`` when any step
    changes the argument by pi/2 or more.
    """
    v = _as_complex(values)
    if np.any(np.abs(v[..., 0] - 1.0) > 1e-12):
        raise ValueError("continuation must start from the value 1")
    d = _arg_increments(v, zero_tol)
    if np.any(np.abs(d) >= MAX_ARG_STEP):
        raise RefinementRequired("argument jump of pi/2 or more between samples")
    arg = np.concatenate([np.zeros(v.shape[:-1] + (1,)), np.cumsum(d, axis=-1)], axis=-1)
    return np.log(np.abs(v)) + 1j * arg


def power_with_continuation(values, c) -> np.ndarray:
    """``g ** c`` along a ray, continued analytically from ``g(0) = 1``."""
    return np.exp(np.asarray(c, dtype=complex) * tracked_log(values))


def radial_log(func: Callable[[np.ndarray], np.ndarray], points, *,
               dfunc: Callable[[np.ndarray], np.ndarray] | None = None, steps: int = 16,
               max_halvings: int = 10, zero_tol: float = 1e-12) -> np.ndarray:
    """Log of ``func`` continued along each segment ``[0, z]``.

    ``func`` must be vectorised with ``func(0) == 1``. Measured argument steps
    are only known modulo 2 pi, so a step that turns by a full revolution
    looks small. With ``dfunc`` (the derivative) each step is compared with
    the trapezoid estimate of ``∫ z func'/func``; without it neighbouring
    steps must agree to within pi/4, a heuristic that a very coarse start can
    defeat. Rays failing the check, or with a step of pi/2 or more, are
    resampled with twice the steps.
    """
    z = _as_complex(points)
    flat = z.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    todo = np.arange(flat.size)
    s = max(int(steps), 2)
    for _ in range(max_halvings + 1):
        t = np.linspace(0.0, 1.0, s + 1)
        w = np.outer(flat[todo], t)
        vals = func(w)
        if np.any(np.abs(vals[:, 0] - 1.0) > 1e-12):
            raise ValueError("continuation must start from the value 1")
        d = _arg_increments(vals, zero_tol)
        ok = np.all(np.abs(d) < MAX_ARG_STEP, axis=1)
        if dfunc is not None:
            lp = np.imag(flat[todo, None] * dfunc(w) / vals)
            pred = 0.5 * (lp[:, 1:] + lp[:, :-1]) / s
            ok &= np.all(np.abs(d - pred) < 0.5, axis=1)
        else:
            ok &= np.all(np.abs(np.diff(d, axis=1)) < MAX_ARG_STEP / 2, axis=1)
        out[todo[ok]] = np.log(np.abs(vals[ok, -1])) + 1j * d[ok].sum(axis=1)
        todo = todo[~ok]
        if todo.size == 0:
            return out.reshape(z.shape)
        s *= 2
    raise RefinementRequired(f"{todo.size} rays still jump after {max_halvings} halvings")


@dataclass(frozen=True, eq=False)
class DiskGrid:
    """Origin plus ``angles_per_circle`` uniform samples on each radius."""

    radii: np.ndarray
    angles_per_circle: int

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if r.size == 0 or self.angles_per_circle < 1:
            raise ValueError("grid needs at least one radius and one angle")
        if np.any(r <= 0) or np.any(r >= 1):
            raise ValueError("radii must lie in (0, 1)")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly ascending")
        r.setflags(write=False)
        object.__setattr__(self, "radii", r)

    @property
    def thetas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.angles_per_circle) / self.angles_per_circle

    @property
    def circles(self) -> np.ndarray:
        """Points as an array of shape (len(radii), angles_per_circle)."""
        return self.radii[:, None] * np.exp(1j * self.thetas)[None, :]

    @property
    def points(self) -> np.ndarray:
        return np.concatenate([[0j], self.circles.reshape(-1)])

    @property
    def max_radius(self) -> float:
        return float(self.radii[-1])

    def split(self, values: np.ndarray) -> tuple[complex, np.ndarray]:
        """Split values aligned with ``points`` into (origin value, circle rows)."""
        values = np.asarray(values)
        return values[0], values[1:].reshape(self.radii.size, self.angles_per_circle)

    def restrict(self, max_radius: float) -> DiskGrid:
        return DiskGrid(self.radii[self.radii <= max_radius + 1e-15], self.angles_per_circle)


def disk_grid(max_radius: float, radii_count: int, angles: int) -> DiskGrid:
    """Grid whose radii approach ``max_radius`` geometrically.

    The distances to the unit circle are ``(1 - max_radius) ** (j / m)`` for j = 1..m.
    """
    if not 0 < max_radius < 1:
        raise ValueError("max_radius must lie in (0, 1)")
    if radii_count < 1 or angles < 1:
        raise ValueError("radii_count and angles must be positive")
    j = np.arange(1, radii_count + 1)
    radii = 1.0 - (1.0 - max_radius) ** (j / radii_count)
    radii[-1] = max_radius
    return DiskGrid(radii, angles)


def default_grid(angles: int = DEFAULT_ANGLES) -> DiskGrid:
    return DiskGrid(np.array(DEFAULT_RADII), angles)


def fourier_coefficients(values, radius: float) -> np.ndarray:
    """Taylor coefficients recovered from equispaced samples on ``|z| = radius``."""
    v = np.asarray(values, dtype=complex)
    m = v.shape[-1]
    c = np.fft.fft(v, axis=-1) / m
    return c / radius ** np.arange(m)


def circle_derivative(values, radius: float) -> np.ndarray:
    """Derivative of an analytic function from its samples on one circle.

    The samples are expanded in powers of z by FFT (only nonnegative modes,
    as for an analytic function) and the series is differentiated term-wise.
    """
    v = np.asarray(values, dtype=complex)
    m = v.shape[-1]
    k = np.arange(m)
    c = np.fft.fft(v, axis=-1) / m  # coefficients of (z/r)**k
    # f'(z) = sum k c_k z^(k-1) / r^k ; at z = r e^{i theta} the factor is (k/r) e^{i(k-1)theta}
    dtheta = np.fft.ifft(c * k, axis=-1) * m  # sum k c_k e^{ik theta}
    theta = 2 * np.pi * k / m
    return dtheta * np.exp(-1j * theta) / radius
