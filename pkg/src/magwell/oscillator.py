"""Quasimode machinery.

Everything here works in the rescaled transverse variable t1 = t / sqrt(h)
and the orthonormal oscillator basis

    psi_m(t1) = b0^{1/4} h_m(sqrt(b0) t1),

where h_m are the L^2-orthonormal Hermite functions.  The effective
operator at a point x of the curve, with the geometry frozen there, is

    L0 = -d^2/dt1^2 + b0^2 t1^2
    L1 = -2 i b0 t1 d/ds - (a1 b0^2 / 2) t1^3
    L2 = -d^2/ds^2 + (3i/2) a1 b0 t1^2 d/ds
         + [beta2 b0/3 - (2/3) a2 b0^2 + (23/48) a1^2 b0^2] t1^4
         + [a2/2 - (3/16) a1^2],

and the order-2 quasimode (phi0, phi1, phi2; lambda0 + h lambda2) is the
perturbative solution of (L0 + h^{1/2} L1 + h L2) phi = lambda phi.  A
ModeExpansion stores such functions as finite sums

    sum over (m, d) of  c_{m,d} * psi_m(t1) * chi0^{(d)}(s),

so applying L0..L2 is exact ladder algebra; the longitudinal profile
chi0 is only instantiated (as a cut-off Gaussian envelope) when a trial
state is sampled on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Iterator, Mapping

import numpy as np

from .errors import (
    ConstructionError,
    DomainError,
    GridMismatchError,
    SolvabilityError,
)

MAX_DERIVATIVE = 3  # chi0 derivative orders carried by the expansions

SOLVABILITY_TOL = 1e-12


def hermite_functions(x: np.ndarray, max_index: int) -> np.ndarray:
    """Orthonormal Hermite functions h_0..h_max at the points x.

    Uses the stable recurrence h_m = x sqrt(2/m) h_{m-1}
    - sqrt((m-1)/m) h_{m-2}; the Gaussian weight is included, so the
    functions are orthonormal on the line with plain Lebesgue measure.
    """
    if max_index < 0:
        raise DomainError(f"max_index must be >= 0, got {max_index}")
    x = np.asarray(x, dtype=float)
    out = np.empty((max_index + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if max_index >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for m in range(2, max_index + 1):
        out[m] = x * math.sqrt(2.0 / m) * out[m - 1] - math.sqrt((m - 1) / m) * out[m - 2]
    return out


@dataclass(frozen=True)
class OscillatorBasis:
    """Oscillator eigenbasis for L0 = -d^2/dt1^2 + b0^2 t1^2.

    psi_m has eigenvalue (2m+1) b0 and unit L^2 norm.
    """

    b0: float
    max_index: int

    def __post_init__(self):
        if not self.b0 > 0:
            raise DomainError(f"frequency b0 must be positive, got {self.b0}")
        if self.max_index < 0:
            raise DomainError(f"max_index must be >= 0, got {self.max_index}")

    def evaluate_all(self, t1) -> np.ndarray:
        """Matrix psi_m(t1) of shape (max_index + 1, len(t1))."""
        t1 = np.asarray(t1, dtype=float)
        return self.b0**0.25 * hermite_functions(math.sqrt(self.b0) * t1, self.max_index)

    def evaluate(self, m: int, t1) -> np.ndarray:
        if not 0 <= m <= self.max_index:
            raise DomainError(f"mode index {m} outside 0..{self.max_index}")
        return self.evaluate_all(t1)[m]


def moment_table(k: int, b0: float, p: int, q: int) -> float:
    """Exact oscillator coupling <t1^p psi_{k+q}, psi_k>.

    Computed by p applications of the ladder decomposition
    t1 = (a + a*)/sqrt(2 b0).  Parity-violating (p + q odd) and
    out-of-range (k + q < 0 or |q| > p) couplings are exactly 0.
    Diagonal sanity values: <t1^2>_kk = (2k+1)/(2 b0),
    <t1^4>_kk = 3(2k^2+2k+1)/(4 b0^2).
    """
    if k < 0:
        raise DomainError(f"mode index k must be >= 0, got {k}")
    if p < 0:
        raise DomainError(f"power p must be >= 0, got {p}")
    if not b0 > 0:
        raise DomainError(f"frequency b0 must be positive, got {b0}")
    if k + q < 0:
        return 0.0
    coeffs = {k: 1.0}
    w = 1.0 / math.sqrt(2.0 * b0)
    for _ in range(p):
        nxt: dict[int, float] = {}
        for m, c in coeffs.items():
            if m > 0:
                nxt[m - 1] = nxt.get(m - 1, 0.0) + c * w * math.sqrt(m)
            nxt[m + 1] = nxt.get(m + 1, 0.0) + c * w * math.sqrt(m + 1)
        coeffs = nxt
    return coeffs.get(k + q, 0.0)


class ModeExpansion(Mapping):
    """Finite sum of psi_m(t1) * chi0^{(d)}(s) terms, keyed by (m, d)."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[tuple[int, int], complex]):
        clean: dict[tuple[int, int], complex] = {}
        for (m, d), c in coeffs.items():
            if m < 0 or d < 0 or d > MAX_DERIVATIVE:
                raise DomainError(
                    f"mode key ({m}, {d}) outside m >= 0, 0 <= d <= {MAX_DERIVATIVE}"
                )
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise DomainError(f"non-finite coefficient at ({m}, {d})")
            if c != 0:
                clean[(m, d)] = c
        self._c = clean

    def __getitem__(self, key) -> complex:
        return self._c[key]

    def get(self, key, default=0.0) -> complex:
        return self._c.get(key, default)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self._c)

    def __len__(self) -> int:
        return len(self._c)

    def __repr__(self) -> str:
        inner = ", ".join(f"({m},{d}): {c:.6g}" for (m, d), c in sorted(self._c.items()))
        return f"ModeExpansion({{{inner}}})"

    @property
    def max_mode(self) -> int:
        return max((m for m, _ in self._c), default=0)

    @property
    def max_derivative(self) -> int:
        return max((d for _, d in self._c), default=0)

    def scaled(self, factor: complex) -> "ModeExpansion":
        return ModeExpansion({key: factor * c for key, c in self._c.items()})

    def __add__(self, other: "ModeExpansion") -> "ModeExpansion":
        out = dict(self._c)
        for key, c in other.items():
            out[key] = out.get(key, 0.0) + c
        return ModeExpansion(out)

    def __sub__(self, other: "ModeExpansion") -> "ModeExpansion":
        return self + other.scaled(-1.0)

    def isclose(self, other: "ModeExpansion", tol: float = 1e-12) -> bool:
        keys = set(self._c) | set(other._c)
        return all(abs(self.get(key) - other.get(key)) <= tol for key in keys)

    def norm(self) -> float:
        """l2 norm of the coefficient vector (not a function norm)."""
        return math.sqrt(sum(abs(c) ** 2 for c in self._c.values()))


def apply_t1(exp: ModeExpansion, b0: float, power: int = 1) -> ModeExpansion:
    """Multiply by t1^power via the ladder decomposition."""
    if power < 0:
        raise DomainError(f"power must be >= 0, got {power}")
    w = 1.0 / math.sqrt(2.0 * b0)
    coeffs = dict(exp.items())
    for _ in range(power):
        nxt: dict[tuple[int, int], complex] = {}
        for (m, d), c in coeffs.items():
            if m > 0:
                key = (m - 1, d)
                nxt[key] = nxt.get(key, 0.0) + c * w * math.sqrt(m)
            key = (m + 1, d)
            nxt[key] = nxt.get(key, 0.0) + c * w * math.sqrt(m + 1)
        coeffs = nxt
    return ModeExpansion(coeffs)


def apply_ds(exp: ModeExpansion, order: int = 1) -> ModeExpansion:
    """Differentiate the longitudinal profile: chi0^{(d)} -> chi0^{(d+order)}."""
    if order < 0:
        raise DomainError(f"order must be >= 0, got {order}")
    return ModeExpansion({(m, d + order): c for (m, d), c in exp.items()})


def apply_l0(exp: ModeExpansion, b0: float) -> ModeExpansion:
    return ModeExpansion({(m, d): (2 * m + 1) * b0 * c for (m, d), c in exp.items()})


def apply_l1(exp: ModeExpansion, b0: float, a1: float) -> ModeExpansion:
    out = apply_ds(apply_t1(exp, b0, 1)).scaled(-2j * b0)
    if a1 != 0.0:
        out = out + apply_t1(exp, b0, 3).scaled(-0.5 * a1 * b0**2)
    return out


def apply_l2(exp: ModeExpansion, b0: float, a1: float, a2: float, beta2: float) -> ModeExpansion:
    out = apply_ds(exp, 2).scaled(-1.0)
    if a1 != 0.0:
        out = out + apply_ds(apply_t1(exp, b0, 2)).scaled(1.5j * a1 * b0)
    c4 = beta2 * b0 / 3.0 - (2.0 / 3.0) * a2 * b0**2 + (23.0 / 48.0) * a1**2 * b0**2
    if c4 != 0.0:
        out = out + apply_t1(exp, b0, 4).scaled(c4)
    c0 = 0.5 * a2 - (3.0 / 16.0) * a1**2
    if c0 != 0.0:
        out = out + exp.scaled(c0)
    return out


def oscillator_resolvent_solve(rhs: ModeExpansion, k: int, b0: float) -> ModeExpansion:
    """Solve (L0 - (2k+1) b0) u = rhs with u orthogonal to psi_k.

    The psi_k components of rhs must vanish (within SOLVABILITY_TOL
    relative to the largest coefficient); each remaining coefficient is
    divided by the eigenvalue gap 2 (m - k) b0.
    """
    if k < 0:
        raise DomainError(f"mode index k must be >= 0, got {k}")
    if not b0 > 0:
        raise DomainError(f"frequency b0 must be positive, got {b0}")
    scale = max((abs(c) for c in rhs.values()), default=0.0)
    out: dict[tuple[int, int], complex] = {}
    for (m, d), c in rhs.items():
        if m == k:
            if abs(c) > SOLVABILITY_TOL * max(scale, 1.0):
                raise SolvabilityError(
                    f"right-hand side has a psi_{k} component at derivative order {d}",
                    c,
                )
            continue  # discard numerical dust in the kernel direction
        out[(m, d)] = c / (2.0 * (m - k) * b0)
    return ModeExpansion(out)


@dataclass(frozen=True)
class Order2Quasimode:
    """Output of the order-2 construction at a frozen point of the curve."""

    k: int
    b0: float
    a1: float
    a2: float
    beta2: float
    lambda0: float
    lambda2: float
    phi0: ModeExpansion
    phi1: ModeExpansion
    phi2: ModeExpansion
    kernel_residual: float  # max |psi_k component| of the step-3 RHS


def build_order2_quasimode(
    k: int, b0: float, a1_at_x: float, a2_at_x: float, beta2_at_x: float
) -> Order2Quasimode:
    """Perturbative eigenpair of L0 + h^{1/2} L1 + h L2 through order h.

    lambda0 = (2k+1) b0, lambda1 = 0, and

        lambda2 = beta2 (2k^2+2k+1) / (4 b0) - (k^2+k)(a2 - a1^2/4).

    The construction cross-checks itself: with this lambda2 the psi_k
    components of the step-3 right-hand side lambda2 phi0 - L2 phi0
    - L1 phi1 must vanish identically; if they do not, the ladder
    algebra and the closed-form lambda2 disagree and a
    ConstructionError is raised.
    """
    if k < 0 or k != int(k):
        raise DomainError(f"band index k must be a nonnegative integer, got {k}")
    if not b0 > 0:
        raise DomainError(f"b0 must be positive, got {b0}")
    if not beta2_at_x > 0:
        raise DomainError(f"beta2 must be positive, got {beta2_at_x}")
    k = int(k)
    lambda0 = (2 * k + 1) * b0
    phi0 = ModeExpansion({(k, 0): 1.0})

    # step 2: lambda1 = 0 by parity (L1 phi0 has no psi_k component)
    l1_phi0 = apply_l1(phi0, b0, a1_at_x)
    lambda1_defect = max((abs(c) for (m, _), c in l1_phi0.items() if m == k), default=0.0)
    if lambda1_defect > SOLVABILITY_TOL:
        raise ConstructionError(
            f"L1 phi0 has a psi_{k} component ({lambda1_defect:.3e}); "
            "the first-order term should vanish by parity"
        )
    phi1 = oscillator_resolvent_solve(l1_phi0.scaled(-1.0), k, b0)

    lambda2 = beta2_at_x * (2 * k * k + 2 * k + 1) / (4 * b0) - (k * k + k) * (
        a2_at_x - 0.25 * a1_at_x**2
    )

    rhs = phi0.scaled(lambda2) - apply_l2(phi0, b0, a1_at_x, a2_at_x, beta2_at_x) - apply_l1(
        phi1, b0, a1_at_x
    )
    kernel_residual = max((abs(c) for (m, _), c in rhs.items() if m == k), default=0.0)
    scale = max(abs(lambda2), 1.0)
    if kernel_residual > SOLVABILITY_TOL * scale:
        raise ConstructionError(
            f"step-3 solvability violated: psi_{k} component {kernel_residual:.3e} "
            f"does not cancel against lambda2 = {lambda2:.6g}"
        )
    phi2 = oscillator_resolvent_solve(rhs, k, b0)
    return Order2Quasimode(
        k=k,
        b0=b0,
        a1=a1_at_x,
        a2=a2_at_x,
        beta2=beta2_at_x,
        lambda0=lambda0,
        lambda2=lambda2,
        phi0=phi0,
        phi1=phi1,
        phi2=phi2,
        kernel_residual=kernel_residual,
    )


### Gaussian envelope with a smooth compactly supported cutoff

def _bump(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C-infinity step f with f = 1 at u <= 0, f = 0 at u >= 1, and f', f''.

    f(u) = g(1-u) / (g(u) + g(1-u)) with g(v) = exp(-1/v) for v > 0.
    """
    u = np.asarray(u, dtype=float)
    f = np.zeros_like(u)
    fp = np.zeros_like(u)
    fpp = np.zeros_like(u)
    # outside (eps, 1-eps) the transition terms are below 1e-200, so the
    # plateau value 1 (left, INCLUDING the sliver u <= eps) and 0 (right)
    # hold to machine precision with exactly zero derivatives
    eps = 2e-3
    f[u <= eps] = 1.0
    mask = (u > eps) & (u < 1.0 - eps)
    if np.any(mask):
        um = u[mask]

        def g(v):
            return np.exp(-1.0 / v)

        def gp(v):
            return g(v) / v**2

        def gpp(v):
            return g(v) * (1.0 - 2.0 * v) / v**4

        A, B = g(1.0 - um), g(um)
        Ap, Bp = -gp(1.0 - um), gp(um)
        App, Bpp = gpp(1.0 - um), gpp(um)
        S = A + B
        f[mask] = A / S
        fp[mask] = (Ap * B - A * Bp) / S**2
        fpp[mask] = ((App * B - A * Bpp) * S - 2.0 * (Ap * B - A * Bp) * (Ap + Bp)) / S**3
    return f, fp, fpp


@dataclass(frozen=True)
class CutoffWindow:
    """Smooth even plateau: 1 on |s| <= plateau, 0 on |s| >= support."""

    plateau: float
    support: float

    def __post_init__(self):
        if not 0 < self.plateau < self.support:
            raise DomainError(
                f"need 0 < plateau < support, got ({self.plateau}, {self.support})"
            )

    def profile(self, s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(chi, chi', chi'') at the points s."""
        s = np.asarray(s, dtype=float)
        width = self.support - self.plateau
        u = (np.abs(s) - self.plateau) / width
        f, fp, fpp = _bump(u)
        sign = np.sign(s)
        return f, fp * sign / width, fpp / width**2

    def __call__(self, s) -> np.ndarray:
        return self.profile(s)[0]


DEFAULT_WINDOW = CutoffWindow(plateau=1.6, support=3.2)


@dataclass(frozen=True)
class GaussianEnvelope:
    """E_h(s) = c chi(s - x) exp(-(s-x)^2 / (2 h^{2 beta})), ||E_h|| = 1.

    The constant c is fixed numerically by the unit-norm condition; sigma
    = h^beta is the envelope width.  Derivatives up to second order are
    analytic (product rule on chi and the Gaussian).
    """

    h: float
    beta: float
    center: float = 0.0
    window: CutoffWindow = DEFAULT_WINDOW
    _c: float = dataclass_field(init=False, repr=False)

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError(f"h must be positive, got {self.h}")
        if not 0.0 < self.beta < 0.5:
            raise DomainError(f"envelope exponent beta must lie in (0, 1/2), got {self.beta}")
        u = np.linspace(-self.window.support, self.window.support, 65537)
        chi = self.window(u)
        g = np.exp(-(u * u) / (2.0 * self.sigma**2))
        norm_sq = np.trapezoid((chi * g) ** 2, u)
        object.__setattr__(self, "_c", 1.0 / math.sqrt(norm_sq))

    @property
    def sigma(self) -> float:
        return self.h**self.beta

    def derivatives(self, s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(E, E', E'') at the points s."""
        u = np.asarray(s, dtype=float) - self.center
        chi, chip, chipp = self.window.profile(u)
        inv_s2 = 1.0 / self.sigma**2
        g = np.exp(-0.5 * u * u * inv_s2)
        gp = -u * inv_s2 * g
        gpp = (u * u * inv_s2 - 1.0) * inv_s2 * g
        e = self._c * chi * g
        ep = self._c * (chip * g + chi * gp)
        epp = self._c * (chipp * g + 2.0 * chip * gp + chi * gpp)
        return e, ep, epp

    def __call__(self, s) -> np.ndarray:
        return self.derivatives(s)[0]


@dataclass(frozen=True)
class EnvelopeReport:
    """Sampled envelope plus the weighted-norm report of the h-scaling law."""

    h: float
    beta: float
    sigma: float
    s_grid: np.ndarray
    values: np.ndarray
    norms: dict[int, float]   # m -> ||s^m E_h||
    dnorms: dict[int, float]  # m -> ||s^m E_h'||


def gaussian_envelope(
    h: float,
    beta: float,
    s_grid: np.ndarray,
    window: CutoffWindow = DEFAULT_WINDOW,
    max_moment: int = 3,
) -> EnvelopeReport:
    """Sample the normalized envelope and report its moment norms.

    The norms ||s^m E_h|| scale like h^{beta m} and ||s^m E_h'|| like
    h^{beta (m-1)}; they are measured by quadrature on a dense internal
    grid, independent of the possibly coarse s_grid.
    """
    env = GaussianEnvelope(h=h, beta=beta, window=window)
    s_grid = np.asarray(s_grid, dtype=float)
    u = np.linspace(-window.support, window.support, 65537)
    e, ep, _ = env.derivatives(u)
    norms = {}
    dnorms = {}
    for m in range(max_moment + 1):
        norms[m] = float(np.sqrt(np.trapezoid((u**m * e) ** 2, u)))
        dnorms[m] = float(np.sqrt(np.trapezoid((u**m * ep) ** 2, u)))
    return EnvelopeReport(
        h=h,
        beta=beta,
        sigma=env.sigma,
        s_grid=s_grid,
        values=env(s_grid),
        norms=norms,
        dnorms=dnorms,
    )


def cutoff_exponent(beta: float) -> float:
    """Residual exponent gamma(beta) = min(1 + beta, 3/2 - 3 beta).

    Maximized at beta = 1/8 where gamma = 9/8; the unscaled operator
    residual order is then 1 + 9/8 = 17/8.
    """
    if not 0.0 < beta < 0.5:
        raise DomainError(f"beta must lie in (0, 1/2), got {beta}")
    return min(1.0 + beta, 1.5 - 3.0 * beta)


@dataclass
class QuasimodeBundle:
    """Grid samples of a trial state with its candidate eigenvalue.

    values lives on the interior nodes of the grid (the unknowns of the
    discretized operator).  residual is filled in by the operator module
    once the state has been measured.
    """

    values: np.ndarray
    lambda_h: float
    h: float
    beta: float
    k: int
    center: float
    sigma: float
    grid: "GridSpec"  # noqa: F821  (operator.GridSpec; no import cycle)
    mass_loss: float
    truncated: bool
    residual: float | None = None


def assemble_trial_state(
    modes: Order2Quasimode,
    h: float,
    beta: float,
    x: float,
    grid,
    metric,
    window: CutoffWindow = DEFAULT_WINDOW,
    transverse_fraction: float = 0.8,
    orders: tuple[int, ...] = (0, 1, 2),
) -> QuasimodeBundle:
    """Sample Phi = |g|^{-1/4} h^{-1/4} [phi0 + h^{1/2} phi1 + h phi2](s, t/sqrt(h)).

    The longitudinal profile chi0 is the normalized Gaussian envelope
    E_h centered at x; a fixed smooth transverse cutoff supported in
    |t| <= transverse_fraction * t_halfwidth keeps the state away from
    the Dirichlet boundary.  The candidate eigenvalue is
    lambda(h) = h (lambda0 + h lambda2).

    orders selects which phi_j enter (e.g. (0,) forces the bare
    oscillator state for diagnostic bounds).
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    band = metric.band
    T = band.t_halfwidth
    if not 0 < transverse_fraction <= 1:
        raise DomainError("transverse_fraction must lie in (0, 1]")
    if grid.t_min < -T or grid.t_max > T:
        raise GridMismatchError("grid leaves the metric band in t")
    # the rescaled oscillator must fit under the transverse cutoff
    extent = math.sqrt(h * (2 * modes.k + 5) / modes.b0)
    if extent > transverse_fraction * T:
        raise DomainError(
            f"h = {h} too large: transverse scale {extent:.3f} exceeds the "
            f"cutoff halfwidth {transverse_fraction * T:.3f}"
        )

    env = GaussianEnvelope(h=h, beta=beta, center=x, window=window)
    s = grid.s_interior
    t = grid.t_interior
    e_derivs = env.derivatives(s)  # (E, E', E'')

    weights = {0: 1.0, 1: math.sqrt(h), 2: h}
    phis = {0: modes.phi0, 1: modes.phi1, 2: modes.phi2}
    max_mode = max(max(phis[j].max_mode for j in orders), modes.k)
    basis = OscillatorBasis(b0=modes.b0, max_index=max_mode)
    psi = basis.evaluate_all(t / math.sqrt(h))  # (max_mode+1, nt)

    values = np.zeros((s.size, t.size), dtype=complex)
    for d in range(MAX_DERIVATIVE):
        coeffs = np.zeros(max_mode + 1, dtype=complex)
        for j in orders:
            for (m, dd), c in phis[j].items():
                if dd == d:
                    coeffs[m] += weights[j] * c
        if not np.any(coeffs):
            continue
        transverse = coeffs @ psi  # (nt,)
        values += np.outer(e_derivs[d], transverse)

    theta = CutoffWindow(
        plateau=0.5 * transverse_fraction * T, support=transverse_fraction * T
    )
    values *= theta(t)[None, :]
    ss, tt = np.meshgrid(s, t, indexing="ij")
    values *= metric.coeff(ss, tt) ** -0.25
    values *= h**-0.25

    # longitudinal mass beyond the grid; exactly zero when the compactly
    # supported envelope fits inside
    reach = min(x - grid.s_min, grid.s_max - x)
    truncated = window.support > reach
    tail = math.erfc(reach / env.sigma) if truncated else 0.0
    mass_loss = tail if tail > 1e-12 else 0.0

    lam = h * (modes.lambda0 + h * modes.lambda2)
    return QuasimodeBundle(
        values=values,
        lambda_h=lam,
        h=h,
        beta=beta,
        k=modes.k,
        center=x,
        sigma=env.sigma,
        grid=grid,
        mass_loss=mass_loss,
        truncated=truncated,
    )
