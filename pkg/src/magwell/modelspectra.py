"""Closed-form spectral data.

Three families live here:

* two-term and miniwell eigenvalue expansions for a field with a
  degenerate well along a curve,

      lambda(h) = (2k+1) h b0
                + h^2 [ (2k^2+2k+1) beta2(x)/(4 b0) + (k^2+k) R(x)/2 ]
      mu_jk(h)  = (2k+1) h b0 + h^2 V_k(x0)
                + h^{5/2} sqrt(delta_k beta2(x0) (2k+1)) (2j+1) / (2 b0),

* Landau levels of the constant-field problem on the flat plane, the
  hyperbolic plane, and the sphere, all satisfying the single identity
  level = (2k+1) h b0 + (1/2) h^2 (k^2+k) R,

* the quadratic Zeeman spectrum (2n1+1) s1 + (2n2+1) s2 of the constant
  field plus quadratic potential model, and the translation-invariant
  model operator's ground state built from it.

Everything is exact arithmetic on floats; radicals are factored before
subtraction so small-h differences keep full relative accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

from .errors import (
    ComplexFrequencyError,
    DegenerateMiniwellError,
    DomainError,
    PrequantizationError,
)


@dataclass(frozen=True)
class AsymptoticEigenvalue:
    """Eigenvalue expansion Σ c_p h^p with its term breakdown.

    term_breakdown maps the power of h to the coefficient; value is
    always the sum of the terms, so the two stay consistent by
    construction.
    """

    h: float
    term_breakdown: dict[float, float]

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError(f"semiclassical parameter h must be positive, got {self.h}")

    @property
    def value(self) -> float:
        return float(sum(c * self.h**p for p, c in sorted(self.term_breakdown.items())))

    def term(self, power: float) -> float:
        return self.term_breakdown[power] * self.h**power


def _check_positive(**kwargs: float) -> None:
    for name, val in kwargs.items():
        if not val > 0:
            raise DomainError(f"{name} must be positive, got {val}")


def lambda_band(h: float, k: int, b0: float, beta2_x: float, R_x: float) -> AsymptoticEigenvalue:
    """Two-term band eigenvalue at a point x of the well curve."""
    _check_positive(h=h, b0=b0, beta2_x=beta2_x)
    if k < 0 or k != int(k):
        raise DomainError(f"band index k must be a nonnegative integer, got {k}")
    k = int(k)
    c1 = (2 * k + 1) * b0
    c2 = (2 * k * k + 2 * k + 1) * beta2_x / (4 * b0) + 0.5 * (k * k + k) * R_x
    return AsymptoticEigenvalue(h=h, term_breakdown={1.0: c1, 2.0: c2})


def groundstate_two_term(h: float, b0: float, mu0: float) -> AsymptoticEigenvalue:
    """Ground-state expansion h b0 + h^2 mu0/(4 b0).

    Identical to lambda_band(h, 0, b0, mu0, R) for every R: the curvature
    term carries the factor k^2 + k and vanishes in the lowest band.
    """
    _check_positive(h=h, b0=b0, mu0=mu0)
    return AsymptoticEigenvalue(h=h, term_breakdown={1.0: b0, 2.0: mu0 / (4 * b0)})


def miniwell_eigenvalue(
    h: float,
    j: int,
    k: int,
    b0: float,
    beta2_x0: float,
    Vk_x0: float,
    delta_k: float,
) -> AsymptoticEigenvalue:
    """Three-term miniwell ladder eigenvalue.

    delta_k = V_k''(x0) and beta2_x0 = beta2(x0) come from WellData.  At
    k = 0 with delta_0 = mu2/(4 b0) and V_0(x0) = mu0/(4 b0) the h^{5/2}
    coefficient reduces to sqrt(mu0 mu2) (2j+1) / (4 b0^{3/2}).
    """
    _check_positive(h=h, b0=b0, beta2_x0=beta2_x0)
    if delta_k <= 0:
        raise DegenerateMiniwellError(f"need V_k''(x0) > 0, got {delta_k}")
    if j < 0 or j != int(j) or k < 0 or k != int(k):
        raise DomainError(f"indices j, k must be nonnegative integers, got j={j}, k={k}")
    j, k = int(j), int(k)
    c1 = (2 * k + 1) * b0
    c52 = math.sqrt(delta_k * beta2_x0 * (2 * k + 1)) * (2 * j + 1) / (2 * b0)
    return AsymptoticEigenvalue(h=h, term_breakdown={1.0: c1, 2.0: Vk_x0, 2.5: c52})


def miniwell_eigenvalue_k0(h: float, j: int, b0: float, mu0: float, mu2: float) -> AsymptoticEigenvalue:
    """Lowest-band miniwell ladder in the (mu0, mu2) parametrization."""
    _check_positive(mu0=mu0, mu2=mu2)
    return miniwell_eigenvalue(
        h, j, 0, b0, beta2_x0=mu0, Vk_x0=mu0 / (4 * b0), delta_k=mu2 / (4 * b0)
    )


### Landau levels in the three constant-curvature geometries

@dataclass(frozen=True)
class LandauLevel:
    k: int
    value: float
    multiplicity: int | None = None  # spherical only
    rescaled: float | None = None    # spherical only: h^2 * value with h = 1/n


@dataclass(frozen=True)
class LandauSpectrum:
    geometry: str
    levels: list[LandauLevel]
    ac_threshold: float | None = None  # hyperbolic only


def landau_levels(
    geometry: str,
    h: float | None = None,
    b: float | None = None,
    n: int | None = None,
    kmax: int = 3,
) -> LandauSpectrum:
    """Constant-field levels; see the module docstring for the formulas.

    flat:       (2k+1) h b for k = 0..kmax.
    hyperbolic: (2k+1) h b - h^2 (k^2+k) for the finitely many k < hb - 1/2,
                plus the continuous-spectrum threshold h^2 b^2 + 1/4.
    spherical:  (1/2)|n|(2k+1) + k^2 + k with multiplicity |n| + 2k + 1,
                plus the rescaled value level/n^2 (i.e. h = 1/n).
    """
    if kmax < 0:
        raise DomainError(f"kmax must be >= 0, got {kmax}")
    if geometry in ("flat", "hyperbolic"):
        if h is None or b is None:
            raise DomainError(f"{geometry} levels need h and b")
        _check_positive(h=h, b=b)
    if geometry == "flat":
        levels = [LandauLevel(k, (2 * k + 1) * h * b) for k in range(kmax + 1)]
        return LandauSpectrum("flat", levels)
    if geometry == "hyperbolic":
        levels = [
            LandauLevel(k, (2 * k + 1) * h * b - h * h * (k * k + k))
            for k in range(kmax + 1)
            if k < h * b - 0.5
        ]
        return LandauSpectrum("hyperbolic", levels, ac_threshold=h * h * b * b + 0.25)
    if geometry == "spherical":
        if n is None or n != int(n) or n == 0:
            raise PrequantizationError(
                f"spherical levels need a nonzero integer n (field strength n/2), got {n}"
            )
        n = int(n)
        levels = []
        for k in range(kmax + 1):
            value = 0.5 * abs(n) * (2 * k + 1) + k * k + k
            levels.append(
                LandauLevel(k, value, multiplicity=abs(n) + 2 * k + 1, rescaled=value / n**2)
            )
        return LandauSpectrum("spherical", levels)
    raise DomainError(f"unknown geometry {geometry!r} (flat, hyperbolic, spherical)")


def landau_identity_terms(level: float, k: int, h: float, b0: float, R: float) -> float:
    """(2k+1) h b0 + (1/2) h^2 (k^2+k) R - level; zero for all three geometries.

    Tuples that make this vanish exactly: flat (R, b0, h) = (0, b, h);
    hyperbolic (-2, b, h); spherical raw levels (2, n/2, 1) and rescaled
    levels (2, 1/2, 1/n).
    """
    return (2 * k + 1) * h * b0 + 0.5 * h * h * (k * k + k) * R - level


### quadratic Zeeman model

@dataclass(frozen=True)
class ZeemanSpectrum:
    """Characteristic frequencies and levels of -Laplacian + field b + quadratic K."""

    b: float
    t_K: float
    d_K: float
    s1: float
    s2: float
    levels: list[tuple[float, int, int]] = dataclass_field(default_factory=list)


def quadratic_zeeman_spectrum(
    b: float,
    K11: float,
    K12: float,
    K22: float,
    max_n1: int = 0,
    max_n2: int = 0,
) -> ZeemanSpectrum:
    """Levels (2n1+1) s1 + (2n2+1) s2 of the constant-field quadratic model.

    s1,2^2 = (t_K + b^2 -/+ sqrt((t_K + b^2)^2 - 4 d_K)) / 2 with
    t_K = tr K and d_K = det K.  s1 is computed as sqrt(d_K)/s2 to avoid
    the radical cancellation at small d_K.
    """
    t_K = K11 + K22
    d_K = K11 * K22 - K12 * K12
    if t_K < 0 or d_K < -1e-15 * max(1.0, t_K * t_K):
        raise DomainError(f"K must be positive semidefinite (t_K={t_K}, d_K={d_K})")
    d_K = max(d_K, 0.0)
    if max_n1 < 0 or max_n2 < 0:
        raise DomainError("level caps must be nonnegative")
    T = t_K + b * b
    disc = T * T - 4 * d_K
    if disc < 0:
        raise ComplexFrequencyError(
            f"(t_K + b^2)^2 - 4 d_K = {disc} < 0: frequencies would be complex"
        )
    s2 = math.sqrt(0.5 * (T + math.sqrt(disc)))
    s1 = math.sqrt(d_K) / s2 if s2 > 0 else 0.0
    levels = sorted(
        ((2 * n1 + 1) * s1 + (2 * n2 + 1) * s2, n1, n2)
        for n1 in range(max_n1 + 1)
        for n2 in range(max_n2 + 1)
    )
    return ZeemanSpectrum(b=b, t_K=t_K, d_K=d_K, s1=s1, s2=s2, levels=levels)


def model_p0_groundstate(h: float, b0: float, mu0: float) -> tuple[float, float]:
    """Ground state of the translation-invariant model operator.

    Returns (exact, leading) with

        exact   = h sqrt(h^{1/2} mu0 / 2 + b0^2) - h b0
        leading = mu0 h^{3/2} / (4 b0),

    exact - leading = O(h^2).  The exact value is the lowest quadratic
    Zeeman level for t_K = mu0/2, d_K = 0 in the h-scaled variables,
    shifted by the Landau energy; it is evaluated in the rationalized
    form h * w / (sqrt(b0^2 + w) + b0), w = h^{1/2} mu0 / 2, which is
    cancellation-free as h -> 0.
    """
    _check_positive(h=h, b0=b0)
    if mu0 < 0:
        raise DomainError(f"mu0 must be nonnegative, got {mu0}")
    w = math.sqrt(h) * mu0 / 2.0
    exact = h * w / (math.sqrt(b0 * b0 + w) + b0)
    leading = mu0 * h**1.5 / (4 * b0)
    return exact, leading
