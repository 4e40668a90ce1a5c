"""Magnetic field profiles on the band and transverse well extraction.

A field profile is the scalar intensity b(s, t) > 0 of the magnetic
2-form on the band.  The degenerate-well assumption baked into this
package is

    b(s, 0) = b0 = min b,   d_t b(s, 0) = 0,   beta2(s) = d_t^2 b(s, 0) > 0,

i.e. b attains its positive minimum exactly on the curve t = 0 and is
uniformly quadratic across it.  :func:`extract_well` measures beta2 and
the effective longitudinal wells

    V_k(s) = (2k^2 + 2k + 1) beta2(s) / (4 b0) + (k^2 + k) R(s) / 2,

and :func:`gauge_potential` produces the vector potential A0 dS in the
transverse gauge A0(s, 0) = 0 used by the discretized operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import (
    ConfigError,
    DegeneracyViolationError,
    DegenerateMiniwellError,
    DomainError,
    IntegrationError,
    NotAWellError,
    OutOfBandError,
)
from .geometry import Band, BandMetric, CurveGeometry, _read_grid_csv

FieldIntensity = Callable[[np.ndarray, np.ndarray], np.ndarray]

# Relative tolerance for "b is critical and constant on the curve".
WELL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class FieldProfile:
    """Positive field intensity b(s, t) on a band.

    b0 is computed at construction as the minimum of b over the curve
    t = 0; the well structure itself (criticality, quadratic growth) is
    only checked where it matters, by :func:`extract_well` and
    :func:`validate_quadratic_well`.
    """

    b: FieldIntensity
    band: Band
    step: float | None = None
    b0: float = dataclass_field(init=False)

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        s = np.linspace(self.band.s_min, self.band.s_max, 257)
        on_curve = self.intensity(s, np.zeros_like(s))
        object.__setattr__(self, "b0", float(np.min(on_curve)))

    @property
    def dt(self) -> float:
        return self.step if self.step is not None else 1e-3 * self.band.t_halfwidth

    def intensity(self, s, t) -> np.ndarray:
        """Evaluate b(s, t) with domain and positivity checks."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > self.band.t_halfwidth * (1 + 1e-12)):
            raise OutOfBandError(f"|t| exceeds t_halfwidth={self.band.t_halfwidth}")
        shape = np.broadcast(s, t).shape
        vals = np.broadcast_to(np.asarray(self.b(s, t), dtype=float), shape)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise DomainError("field intensity b must be positive on the band")
        return vals


@dataclass(frozen=True)
class MiniWell:
    """Nondegenerate interior minimum of one longitudinal well V_k."""

    k: int
    Vk: Callable[[np.ndarray], np.ndarray]
    x0: float
    Vk_min: float
    delta_k: float  # V_k''(x0) > 0
    mu2: float      # beta2''(x0)


@dataclass(frozen=True)
class WellData:
    """Transverse well profile and, per requested k, its miniwell."""

    b0: float
    beta2: Callable[[np.ndarray], np.ndarray]
    mu0: float  # min over s of beta2
    wells: dict[int, MiniWell]


def _transverse_derivatives(field: FieldProfile, s: np.ndarray):
    """(b, d_t b, d_t^2 b) on the curve by 5-point differences, O(step^4)."""
    h = field.dt
    rows = [field.intensity(s, np.full_like(s, j * h)) for j in (-2, -1, 0, 1, 2)]
    f_m2, f_m1, f_0, f_p1, f_p2 = rows
    d1 = (f_m2 - 8 * f_m1 + 8 * f_p1 - f_p2) / (12 * h)
    d2 = (-f_m2 + 16 * f_m1 - 30 * f_0 + 16 * f_p1 - f_p2) / (12 * h * h)
    return f_0, d1, d2


def _curve_samples(band: Band, n: int) -> np.ndarray:
    if band.periodic:
        return np.linspace(band.s_min, band.s_max, n, endpoint=False)
    return np.linspace(band.s_min, band.s_max, n)


def extract_well(
    field: FieldProfile,
    geometry: CurveGeometry,
    ks: tuple[int, ...] = (),
    n_samples: int = 2048,
    refine_step: float | None = None,
) -> WellData:
    """Measure beta2(s) and locate the miniwells of V_k for the given k.

    Raises NotAWellError if b is not critical and constant on the curve,
    DegeneracyViolationError if beta2 <= 0 anywhere, and
    DegenerateMiniwellError if a requested V_k has no nondegenerate
    interior minimum.
    """
    band = field.band
    b0 = field.b0
    s = _curve_samples(band, n_samples)
    on_curve, d1, d2 = _transverse_derivatives(field, s)

    scale = b0 / band.t_halfwidth
    if np.max(np.abs(d1)) > 1e-4 * scale + WELL_TOLERANCE:
        raise NotAWellError(
            f"d_t b(s, 0) != 0 (max {np.max(np.abs(d1)):.3e}); "
            "the curve is not a critical set of b"
        )
    if np.max(np.abs(on_curve - b0)) > 1e-6 * b0:
        raise NotAWellError(
            "b restricted to the curve is not constant; the minimum is not "
            "attained along the whole curve"
        )
    if np.min(d2) <= 0:
        raise DegeneracyViolationError(
            f"beta2 = d_t^2 b(s, 0) must be positive, min {np.min(d2):.3e}"
        )

    def beta2(sv):
        sv = np.asarray(sv, dtype=float)
        return _transverse_derivatives(field, sv)[2]

    ds = refine_step if refine_step is not None else 1e-3 * band.s_span
    idx0 = int(np.argmin(d2))
    if band.periodic or 0 < idx0 < s.size - 1:
        mu0 = float(beta2(np.array([_refine_minimum(beta2, band, s[idx0], ds)]))[0])
    else:
        mu0 = float(d2[idx0])
    wells: dict[int, MiniWell] = {}
    for k in ks:
        if k < 0:
            raise DomainError(f"band index k must be >= 0, got {k}")

        def Vk(sv, k=k):
            sv = np.asarray(sv, dtype=float)
            return (2 * k * k + 2 * k + 1) * beta2(sv) / (4 * b0) + 0.5 * (k * k + k) * np.asarray(
                geometry.R(sv), dtype=float
            )

        values = Vk(s)
        idx = int(np.argmin(values))  # ties resolved to the smallest s
        interior = band.periodic or (0 < idx < s.size - 1)
        if not interior:
            raise DegenerateMiniwellError(
                f"V_{k} is minimized at the s-boundary (s = {s[idx]:.6g}); "
                "no interior miniwell"
            )
        x0 = _refine_minimum(Vk, band, s[idx], ds)
        trip = np.array([x0 - ds, x0, x0 + ds])
        v_m, v_0, v_p = Vk(trip)
        delta_k = float((v_m - 2 * v_0 + v_p) / (ds * ds))
        v_scale = max(abs(v_0), abs(v_m), abs(v_p), 1e-30)
        if delta_k <= 1e-6 * v_scale:
            raise DegenerateMiniwellError(
                f"V_{k}''(x0) = {delta_k:.3e} at x0 = {x0:.6g}; miniwell is degenerate"
            )
        b_m, b_0c, b_p = beta2(trip)
        mu2 = float((b_m - 2 * b_0c + b_p) / (ds * ds))
        wells[k] = MiniWell(k=k, Vk=Vk, x0=float(x0), Vk_min=float(v_0), delta_k=delta_k, mu2=mu2)

    return WellData(b0=b0, beta2=beta2, mu0=mu0, wells=wells)


def _refine_minimum(f, band: Band, s_star: float, ds: float) -> float:
    """One parabolic-vertex refinement step around a grid minimum."""
    lo = s_star - ds
    hi = s_star + ds
    if not band.periodic:
        lo = max(lo, band.s_min)
        hi = min(hi, band.s_max)
    trip = np.array([lo, s_star, hi])
    v = f(trip)
    denom = v[0] - 2 * v[1] + v[2]
    if denom <= 0:
        return s_star
    # vertex of the parabola through the three samples
    shift = 0.5 * (v[0] - v[2]) / denom * ds
    return float(np.clip(s_star + shift, lo, hi))


@dataclass(frozen=True)
class QuadraticWellReport:
    """Outcome of a two-sided quadratic-growth check on b - b0."""

    holds: bool
    C: float
    halfwidth: float
    n_checked: int
    violation: tuple[float, float, float] | None  # (s, t, b) of the worst sample


def validate_quadratic_well(
    field: FieldProfile,
    C: float,
    halfwidth: float | None = None,
    n_s: int = 129,
    n_t: int = 129,
) -> QuadraticWellReport:
    """Check C^-1 t^2 <= b - b0 <= C t^2 on a sample grid of the band."""
    if not C >= 1:
        raise DomainError(f"quadratic-well constant must satisfy C >= 1, got {C}")
    T = halfwidth if halfwidth is not None else field.band.t_halfwidth
    if not 0 < T <= field.band.t_halfwidth:
        raise DomainError(f"halfwidth must lie in (0, {field.band.t_halfwidth}]")
    s = _curve_samples(field.band, n_s)
    t = np.linspace(-T, T, n_t)
    t = t[t != 0.0]  # both bounds are trivially tight on the curve
    ss, tt = np.meshgrid(s, t, indexing="ij")
    diff = field.intensity(ss, tt) - field.b0
    lower = tt**2 / C
    upper = C * tt**2
    bad = (diff < lower) | (diff > upper)
    if not np.any(bad):
        return QuadraticWellReport(True, C, T, ss.size, None)
    # report the sample with the largest relative excursion
    excess = np.maximum(lower - diff, diff - upper) / tt**2
    i, j = np.unravel_index(int(np.argmax(np.where(bad, excess, -np.inf))), ss.shape)
    worst = (float(ss[i, j]), float(tt[i, j]), float(diff[i, j] + field.b0))
    return QuadraticWellReport(False, C, T, ss.size, worst)


class GaugePotential:
    """Vector potential A0(s, t) = -int_0^t b sqrt(a) dtau (so A0 = 0 on the curve).

    Array evaluation integrates with a fixed-order Gauss-Legendre rule,
    exact to machine precision for the smooth profiles this package deals
    with; :meth:`scalar` is an independent adaptive-quadrature route used
    for cross-checks.
    """

    def __init__(self, field: FieldProfile, metric: BandMetric, order: int = 32):
        if order < 2:
            raise ConfigError(f"quadrature order must be >= 2, got {order}")
        self.field = field
        self.metric = metric
        self.order = order
        nodes, weights = np.polynomial.legendre.leggauss(order)
        self._nodes = 0.5 * (nodes + 1.0)  # mapped to [0, 1]
        self._weights = 0.5 * weights

    def __call__(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        s, t = np.broadcast_arrays(s, t)
        tau = np.multiply.outer(self._nodes, t)  # (order, *shape)
        s_rep = np.broadcast_to(s, tau.shape)
        integrand = self.field.intensity(s_rep, tau) * np.sqrt(self.metric.coeff(s_rep, tau))
        w = self._weights.reshape((-1,) + (1,) * t.ndim)
        return -t * np.sum(w * integrand, axis=0)

    def scalar(self, s: float, t: float, epsabs: float = 1e-12) -> float:
        """Adaptive-quadrature evaluation at a single point."""

        def integrand(tau):
            return float(self.field.intensity(s, tau) * np.sqrt(self.metric.coeff(s, tau)))

        value, abserr = quad(integrand, 0.0, t, epsabs=epsabs, limit=200)
        if abserr > max(100 * epsabs, 1e-10 * abs(value)):
            raise IntegrationError(
                f"gauge integral at (s={s}, t={t}) only reached abserr={abserr:.3e}"
            )
        return -value


def gauge_potential(field: FieldProfile, metric: BandMetric, order: int = 32) -> GaugePotential:
    return GaugePotential(field, metric, order=order)


### built-in field catalog

def uniform_field(b0: float, band: Band | None = None) -> FieldProfile:
    """Constant field b = b0.  Valid operator input; has no transverse well."""
    if not b0 > 0:
        raise DomainError(f"field intensity must be positive, got {b0}")
    if band is None:
        band = Band(-4.0, 4.0, 2.0)
    return FieldProfile(b=lambda s, t: b0 * np.ones(np.broadcast(s, t).shape), band=band)


def parabolic_field(b0: float, beta2: float, band: Band | None = None) -> FieldProfile:
    """Translation-invariant quadratic well: b = b0 + beta2 t^2 / 2."""
    if not (b0 > 0 and beta2 > 0):
        raise DomainError("parabolic well needs b0 > 0 and beta2 > 0")
    if band is None:
        band = Band(-4.0, 4.0, 2.0)
    return FieldProfile(
        b=lambda s, t: (b0 + 0.5 * beta2 * t**2) * np.ones(np.broadcast(s, t).shape),
        band=band,
    )


def miniwell_field(b0: float, mu0: float, mu2: float, band: Band | None = None) -> FieldProfile:
    """Quadratic well with a longitudinal miniwell at s = 0:

    b = b0 + (mu0 + mu2 s^2 / 2) t^2 / 2, so beta2(s) = mu0 + mu2 s^2 / 2
    with min(beta2) = mu0 and beta2''(0) = mu2.
    """
    if not (b0 > 0 and mu0 > 0 and mu2 > 0):
        raise DomainError("miniwell profile needs b0, mu0, mu2 > 0")
    if band is None:
        band = Band(-4.0, 4.0, 2.0)
    return FieldProfile(
        b=lambda s, t: b0 + 0.5 * (mu0 + 0.5 * mu2 * s**2) * t**2,
        band=band,
    )


def field_from_expression(expr: str, band: Band) -> FieldProfile:
    """Field from a closed-form expression in the symbols s and t."""
    import sympy

    s_sym, t_sym = sympy.symbols("s t")
    parsed = sympy.sympify(expr)
    extra = parsed.free_symbols - {s_sym, t_sym}
    if extra:
        raise ConfigError(f"field expression uses unknown symbols {sorted(map(str, extra))}")
    func = sympy.lambdify((s_sym, t_sym), parsed, "numpy")
    return FieldProfile(
        b=lambda s, t: np.asarray(func(s, t), dtype=float) * np.ones(np.broadcast(s, t).shape),
        band=band,
    )


def field_from_samples(s_nodes, t_nodes, b_values, periodic: bool = False) -> FieldProfile:
    """Bicubic interpolant of b sampled on a rectangular (s, t) grid."""
    from scipy.interpolate import RectBivariateSpline

    s_nodes = np.asarray(s_nodes, dtype=float)
    t_nodes = np.asarray(t_nodes, dtype=float)
    b_values = np.asarray(b_values, dtype=float)
    if b_values.shape != (s_nodes.size, t_nodes.size):
        raise ConfigError(
            f"need b_values of shape ({s_nodes.size}, {t_nodes.size}), got {b_values.shape}"
        )
    halfwidth = min(-t_nodes[0], t_nodes[-1])
    if not halfwidth > 0:
        raise ConfigError("t samples must straddle t = 0")
    spline = RectBivariateSpline(s_nodes, t_nodes, b_values, kx=3, ky=3)
    band = Band(float(s_nodes[0]), float(s_nodes[-1]), float(halfwidth), periodic=periodic)

    def b(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return spline.ev(s, t)

    return FieldProfile(b=b, band=band)


def field_from_csv(path, periodic: bool = False) -> FieldProfile:
    """Load a sampled field from CSV with columns s, t, b (header optional)."""
    s, t, table = _read_grid_csv(path, value_column="b")
    return field_from_samples(s, t, table, periodic=periodic)


FIELD_CATALOG = {
    "uniform": uniform_field,
    "parabolic": parabolic_field,
    "miniwell": miniwell_field,
}
