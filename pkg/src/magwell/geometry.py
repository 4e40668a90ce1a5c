"""Band geometry around a reference curve.

Coordinates are (s, t): s runs along the curve, t is the signed normal
distance.  The induced metric on the band |t| <= t_halfwidth is

    g = a(s, t) ds^2 + dt^2,        a(s, 0) = 1,

so the curve itself is parametrized by arc length.  Everything downstream
(curvature, field wells, discretized operators) reads the geometry through
:class:`BandMetric`.

Sign conventions, used consistently across the package:

    a1(s) = d_t a(s, 0)            kappa(s) = -a1(s) / 2
    a2(s) = d_t^2 a(s, 0) / 2      R(s, 0)  = 2 (kappa(s)^2 - a2(s))

R = 2K is twice the Gauss curvature, K = -(d_t^2 sqrt(a)) / sqrt(a).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import (
    ConfigError,
    InvalidMetricError,
    OutOfBandError,
    StencilError,
)

MetricCoefficient = Callable[[np.ndarray, np.ndarray], np.ndarray]

# Default transverse step for derivative extraction, as a fraction of the
# band halfwidth.  Small enough that 5-point stencils sit well inside the
# band, large enough that square-root cancellation stays below ~1e-10.
DEFAULT_STEP_FRACTION = 1e-3


@dataclass(frozen=True)
class Band:
    """Tubular coordinate domain: s in [s_min, s_max], |t| <= t_halfwidth."""

    s_min: float
    s_max: float
    t_halfwidth: float
    periodic: bool = False

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ConfigError(f"empty s-range [{self.s_min}, {self.s_max}]")
        if not self.t_halfwidth > 0:
            raise ConfigError(f"t_halfwidth must be positive, got {self.t_halfwidth}")

    @property
    def s_span(self) -> float:
        return self.s_max - self.s_min


@dataclass(frozen=True)
class BandMetric:
    """Metric g = a(s, t) ds^2 + dt^2 on a band around the curve.

    Parameters
    ----------
    a:
        Vectorized coefficient a(s, t).  Must be positive on the band and
        equal to 1 on the curve t = 0 (checked on a sample of s values at
        construction time).
    band:
        Coordinate domain.
    step:
        Transverse step for finite-difference extraction of derivatives of
        a at t = 0.  Defaults to 1e-3 * t_halfwidth.
    """

    a: MetricCoefficient
    band: Band
    step: float | None = None

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        s = np.linspace(self.band.s_min, self.band.s_max, 17)
        on_curve = np.asarray(self.a(s, np.zeros_like(s)), dtype=float)
        if not np.all(np.isfinite(on_curve)) or np.any(on_curve <= 0):
            raise InvalidMetricError("a(s, 0) must be finite and positive")
        if np.max(np.abs(on_curve - 1.0)) > 1e-6:
            raise InvalidMetricError(
                "a(s, 0) = 1 is required (curve parametrized by arc length); "
                f"max deviation {np.max(np.abs(on_curve - 1.0)):.3e}"
            )

    @property
    def dt(self) -> float:
        return self.step if self.step is not None else DEFAULT_STEP_FRACTION * self.band.t_halfwidth

    def coeff(self, s, t) -> np.ndarray:
        """Evaluate a(s, t) with domain and positivity checks."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > self.band.t_halfwidth * (1 + 1e-12)):
            raise OutOfBandError(
                f"|t| exceeds t_halfwidth={self.band.t_halfwidth}"
            )
        shape = np.broadcast(s, t).shape
        vals = np.broadcast_to(np.asarray(self.a(s, t), dtype=float), shape)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise InvalidMetricError("metric coefficient a <= 0 inside the band")
        return vals


@dataclass(frozen=True)
class CurveGeometry:
    """Curve data extracted from a band metric.

    All fields are vectorized functions of arc length s.  kappa is the
    geodesic curvature of the curve, R the restriction of 2*(Gauss
    curvature) to the curve; a1, a2, a3 are the transverse Taylor
    coefficients a(s, t) = 1 + a1 t + a2 t^2 + a3 t^3 + O(t^4).
    """

    kappa: Callable[[np.ndarray], np.ndarray]
    R: Callable[[np.ndarray], np.ndarray]
    a1: Callable[[np.ndarray], np.ndarray]
    a2: Callable[[np.ndarray], np.ndarray]
    a3: Callable[[np.ndarray], np.ndarray]
    step: float


def _stencil_values(metric: BandMetric, s, t, h: float) -> list[np.ndarray]:
    """a at the five transverse stencil points t + j*h, j = -2..2."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    T = metric.band.t_halfwidth
    if np.any(np.abs(t) > T * (1 + 1e-12)):
        raise OutOfBandError(f"|t| exceeds t_halfwidth={T}")
    if np.any(np.abs(t) + 2 * h > T * (1 + 1e-12)):
        raise StencilError(
            f"5-point stencil with step {h} leaves the band at |t| near {T}"
        )
    shape = np.broadcast(s, t).shape
    vals = [
        np.broadcast_to(np.asarray(metric.a(s, t + j * h), dtype=float), shape)
        for j in (-2, -1, 0, 1, 2)
    ]
    stacked = np.stack(vals)
    if not np.all(np.isfinite(stacked)) or np.any(stacked <= 0):
        raise InvalidMetricError("metric coefficient a <= 0 at a stencil point")
    return vals


def gauss_curvature(metric: BandMetric, s, t) -> np.ndarray:
    """R(s, t) = 2K = -2 (d_t^2 sqrt(a)) / sqrt(a), by a 5-point stencil."""
    h = metric.dt
    f_m2, f_m1, f_0, f_p1, f_p2 = (np.sqrt(v) for v in _stencil_values(metric, s, t, h))
    d2 = (-f_m2 + 16 * f_m1 - 30 * f_0 + 16 * f_p1 - f_p2) / (12 * h * h)
    return -2.0 * d2 / f_0


def curve_coefficients(metric: BandMetric) -> CurveGeometry:
    """Extract kappa, R and the Taylor coefficients a1, a2, a3 on the curve.

    a1 uses the 5-point first difference (O(step^4)); a2 the 3-point second
    difference (O(step^2)); a3 the 5-point third difference (O(step^2)).
    kappa = -a1/2 and R = 2(kappa^2 - a2) are derived, so the returned
    record satisfies those identities exactly.
    """
    h = metric.dt

    def a1(s):
        f_m2, f_m1, _, f_p1, f_p2 = _stencil_values(metric, s, 0.0, h)
        return (f_m2 - 8 * f_m1 + 8 * f_p1 - f_p2) / (12 * h)

    def a2(s):
        _, f_m1, f_0, f_p1, _ = _stencil_values(metric, s, 0.0, h)
        return (f_m1 - 2 * f_0 + f_p1) / (2 * h * h)

    def a3(s):
        f_m2, f_m1, _, f_p1, f_p2 = _stencil_values(metric, s, 0.0, h)
        return (f_p2 - 2 * f_p1 + 2 * f_m1 - f_m2) / (2 * h ** 3) / 6

    def kappa(s):
        return -0.5 * a1(s)

    def R(s):
        k = kappa(s)
        return 2.0 * (k * k - a2(s))

    return CurveGeometry(kappa=kappa, R=R, a1=a1, a2=a2, a3=a3, step=h)


### built-in metric catalog

def flat_metric(band: Band | None = None) -> BandMetric:
    """Euclidean band: a = 1."""
    if band is None:
        band = Band(-4.0, 4.0, 2.0)
    return BandMetric(a=lambda s, t: np.ones(np.broadcast(s, t).shape), band=band)


def circle_metric(rho: float, t_halfwidth: float | None = None) -> BandMetric:
    """Band around a circle of radius rho in the flat plane: a = (1 + t/rho)^2.

    t points away from the center, so kappa = -1/rho with this package's
    sign convention, and R = 0.
    """
    if not rho > 0:
        raise ConfigError(f"circle radius must be positive, got {rho}")
    if t_halfwidth is None:
        t_halfwidth = 0.5 * rho
    if t_halfwidth >= rho:
        raise ConfigError("band must stay away from the circle's center (t_halfwidth < rho)")
    band = Band(-np.pi * rho, np.pi * rho, t_halfwidth, periodic=True)
    return BandMetric(a=lambda s, t: (1.0 + t / rho) ** 2, band=band)


def sphere_equator_metric(t_halfwidth: float = 1.2) -> BandMetric:
    """Band around the equator of the unit sphere: a = cos(t)^2, R = 2."""
    if not 0 < t_halfwidth < np.pi / 2:
        raise ConfigError("equatorial band requires 0 < t_halfwidth < pi/2")
    band = Band(-np.pi, np.pi, t_halfwidth, periodic=True)
    return BandMetric(a=lambda s, t: np.cos(t) ** 2, band=band)


def horocycle_metric(s_halfspan: float = 4.0, t_halfwidth: float = 1.0) -> BandMetric:
    """Band around a horocycle in the hyperbolic plane: a = exp(-2t), R = -2."""
    band = Band(-s_halfspan, s_halfspan, t_halfwidth)
    return BandMetric(a=lambda s, t: np.exp(-2.0 * t) * np.ones(np.broadcast(s, t).shape), band=band)


METRIC_CATALOG = {
    "flat": flat_metric,
    "circle": circle_metric,
    "sphere-equator": sphere_equator_metric,
    "hyperbolic-horocycle": horocycle_metric,
}


def metric_from_samples(
    s_nodes: np.ndarray,
    t_nodes: np.ndarray,
    a_values: np.ndarray,
    periodic: bool = False,
) -> BandMetric:
    """Bicubic interpolant of a sampled on a rectangular (s, t) grid.

    t_nodes must straddle t = 0 symmetrically enough that the band
    halfwidth min(|t_min|, t_max) is positive.
    """
    s_nodes = np.asarray(s_nodes, dtype=float)
    t_nodes = np.asarray(t_nodes, dtype=float)
    a_values = np.asarray(a_values, dtype=float)
    if s_nodes.ndim != 1 or t_nodes.ndim != 1 or a_values.shape != (s_nodes.size, t_nodes.size):
        raise ConfigError(
            f"need a_values of shape (len(s), len(t)) = ({s_nodes.size}, {t_nodes.size}), "
            f"got {a_values.shape}"
        )
    if s_nodes.size < 4 or t_nodes.size < 4:
        raise ConfigError("bicubic interpolation needs at least 4 nodes per axis")
    if np.any(np.diff(s_nodes) <= 0) or np.any(np.diff(t_nodes) <= 0):
        raise ConfigError("sample nodes must be strictly increasing")
    halfwidth = min(-t_nodes[0], t_nodes[-1])
    if not halfwidth > 0:
        raise ConfigError("t samples must straddle t = 0")
    spline = RectBivariateSpline(s_nodes, t_nodes, a_values, kx=3, ky=3)
    band = Band(float(s_nodes[0]), float(s_nodes[-1]), float(halfwidth), periodic=periodic)

    def a(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return spline.ev(s, t)

    return BandMetric(a=a, band=band)


def metric_from_csv(path, periodic: bool = False) -> BandMetric:
    """Load a sampled metric from CSV with columns s, t, a (header optional)."""
    s, t, table = _read_grid_csv(path, value_column="a")
    return metric_from_samples(s, t, table, periodic=periodic)


def _read_grid_csv(path, value_column: str):
    """Parse (s, t, value) triples on a full rectangular grid from CSV."""
    try:
        raw = np.genfromtxt(path, delimiter=",", comments="#", names=True)
        if raw.dtype.names is None or "s" not in raw.dtype.names:
            raise ValueError
        cols = raw.dtype.names
        if value_column not in cols:
            raise ConfigError(f"CSV {path} lacks a '{value_column}' column (found {cols})")
        s_col = raw["s"]
        t_col = raw["t"]
        v_col = raw[value_column]
    except ValueError:
        data = np.loadtxt(path, delimiter=",", comments="#")
        if data.ndim != 2 or data.shape[1] != 3:
            raise ConfigError(f"CSV {path} must have columns s,t,{value_column}")
        s_col, t_col, v_col = data.T
    if not (np.all(np.isfinite(s_col)) and np.all(np.isfinite(t_col)) and np.all(np.isfinite(v_col))):
        raise ConfigError(f"CSV {path} contains non-numeric entries")
    s_nodes = np.unique(s_col)
    t_nodes = np.unique(t_col)
    if s_nodes.size * t_nodes.size != s_col.size:
        raise ConfigError(f"CSV {path} does not cover a full rectangular grid")
    table = np.full((s_nodes.size, t_nodes.size), np.nan)
    i = np.searchsorted(s_nodes, s_col)
    j = np.searchsorted(t_nodes, t_col)
    table[i, j] = v_col
    if np.any(np.isnan(table)):
        raise ConfigError(f"CSV {path} has duplicate or missing grid entries")
    return s_nodes, t_nodes, table
