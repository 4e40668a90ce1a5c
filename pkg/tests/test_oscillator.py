"""Oscillator algebra, resolvent, quasimode construction, envelope."""

import math
from dataclasses import dataclass

import numpy as np
import pytest
from scipy.special import roots_hermite

from magwell import (
    ConstructionError,
    DomainError,
    SolvabilityError,
)
from magwell.oscillator import (
    CutoffWindow,
    GaussianEnvelope,
    ModeExpansion,
    OscillatorBasis,
    apply_ds,
    apply_l0,
    apply_l1,
    apply_l2,
    apply_t1,
    assemble_trial_state,
    build_order2_quasimode,
    cutoff_exponent,
    gaussian_envelope,
    hermite_functions,
    moment_table,
    oscillator_resolvent_solve,
)


def gh_moment(k: int, b0: float, p: int, q: int, order: int = 80) -> float:
    """Independent quadrature oracle for <t1^p psi_{k+q}, psi_k>.

    Substituting x = sqrt(b0) t1 reduces the coupling to
    b0^{-p/2} * integral of x^p h_{k+q}(x) h_k(x) dx, which Gauss-Hermite
    quadrature (weight e^{-x^2}) integrates exactly once the Gaussian
    carried by the Hermite functions is folded into the weights.
    """
    if k + q < 0:
        return 0.0
    x, w = roots_hermite(order)
    vals = hermite_functions(x, max(k, k + q))
    f = x**p * vals[k + q] * vals[k] * np.exp(x * x)
    return float(b0 ** (-p / 2) * np.sum(w * f))


class TestBasis:
    def test_hermite_orthonormality(self):
        x, w = roots_hermite(64)
        vals = hermite_functions(x, 12)
        gram = (vals * w * np.exp(x * x)) @ vals.T
        assert np.max(np.abs(gram - np.eye(13))) < 1e-10

    def test_scaled_basis_orthonormality(self):
        b0 = 2.7
        x, w = roots_hermite(64)
        t1 = x / math.sqrt(b0)
        vals = OscillatorBasis(b0=b0, max_index=10).evaluate_all(t1)
        # dt1 = dx / sqrt(b0)
        gram = (vals * w * np.exp(x * x) / math.sqrt(b0)) @ vals.T
        assert np.max(np.abs(gram - np.eye(11))) < 1e-10

    @pytest.mark.parametrize("b0", [1.0, 2.3])
    def test_l0_eigenrelation(self, b0):
        # eighth-order central second difference on a dense grid
        t1 = np.linspace(-9.0, 9.0, 3601)
        dt = t1[1] - t1[0]
        stencil = np.array(
            [-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]
        )
        basis = OscillatorBasis(b0=b0, max_index=6)
        vals = basis.evaluate_all(t1)
        for m in range(7):
            psi = vals[m]
            d2 = sum(c * np.roll(psi, -j) for j, c in zip(range(-4, 5), stencil)) / dt**2
            lhs = -d2 + b0**2 * t1**2 * psi
            resid = lhs - (2 * m + 1) * b0 * psi
            interior = slice(4, -4)
            rel = np.linalg.norm(resid[interior]) / np.linalg.norm(lhs[interior])
            assert rel < 1e-8

    def test_basis_validation(self):
        with pytest.raises(DomainError):
            OscillatorBasis(b0=0.0, max_index=3)
        with pytest.raises(DomainError):
            OscillatorBasis(b0=1.0, max_index=-1)
        with pytest.raises(DomainError):
            OscillatorBasis(b0=1.0, max_index=3).evaluate(7, np.zeros(3))


class TestMomentTable:
    def test_against_quadrature(self):
        for b0 in (1.0, 0.37, 2.5):
            for k in range(7):
                for p in range(5):
                    for q in range(-4, 5):
                        got = moment_table(k, b0, p, q)
                        want = gh_moment(k, b0, p, q)
                        assert abs(got - want) < 1e-10, (k, b0, p, q)

    def test_parity_and_range_zeros(self):
        assert moment_table(3, 1.7, 3, 2) == 0.0  # p + q odd
        assert moment_table(3, 1.7, 1, 3) == 0.0  # |q| > p
        assert moment_table(0, 1.7, 2, -2) == 0.0  # k + q < 0
        assert moment_table(2, 0.9, 0, 0) == 1.0

    @pytest.mark.parametrize("k", [0, 1, 2, 5])
    @pytest.mark.parametrize("b0", [1.0, 3.1])
    def test_known_diagonals(self, k, b0):
        assert moment_table(k, b0, 2, 0) == pytest.approx((2 * k + 1) / (2 * b0), rel=1e-13)
        assert moment_table(k, b0, 4, 0) == pytest.approx(
            3 * (2 * k * k + 2 * k + 1) / (4 * b0**2), rel=1e-13
        )

    def test_validation(self):
        with pytest.raises(DomainError):
            moment_table(-1, 1.0, 2, 0)
        with pytest.raises(DomainError):
            moment_table(0, -1.0, 2, 0)
        with pytest.raises(DomainError):
            moment_table(0, 1.0, -2, 0)


class TestResolvent:
    def test_two_step_shift(self):
        k, b0 = 2, 1.3
        rhs = ModeExpansion({(k + 2, 0): 1.0})
        out = oscillator_resolvent_solve(rhs, k, b0)
        assert dict(out.items()) == {(k + 2, 0): pytest.approx(1.0 / (4 * b0))}

    def test_kernel_component_rejected(self):
        rhs = ModeExpansion({(3, 0): 1.0, (5, 0): 0.2})
        with pytest.raises(SolvabilityError):
            oscillator_resolvent_solve(rhs, 3, 1.0)

    def test_derivative_profile_passthrough(self):
        k, b0 = 2, 0.8
        rhs = ModeExpansion({(k - 1, 1): 1.0})
        out = oscillator_resolvent_solve(rhs, k, b0)
        assert dict(out.items()) == {(k - 1, 1): pytest.approx(-1.0 / (2 * b0))}

    def test_inverts_shifted_l0(self):
        k, b0 = 1, 1.9
        rhs = ModeExpansion({(0, 1): 0.3 - 1j, (4, 0): 2.0, (2, 2): 0.5j})
        u = oscillator_resolvent_solve(rhs, k, b0)
        back = apply_l0(u, b0) - u.scaled((2 * k + 1) * b0)
        assert back.isclose(rhs, tol=1e-13)


def reference_phi1(k: int, b0: float, a1: float) -> dict:
    """First corrector, transcribed from its closed-form display.

    The display is written in the unnormalized basis
    psi_m = pi^{-1/4} b0^{1/2} H_m(sqrt(b0) t1) e^{-b0 t1^2 / 2} with the
    whole quasimode scaled by ||psi_k||; converting to the orthonormal
    basis multiplies the psi_m coefficient by
    ||psi_m|| / ||psi_k|| = sqrt(2^{m-k} m! / k!).
    """
    pref = 1.0 / (2.0 * math.sqrt(b0))
    terms: dict[tuple[int, int], complex] = {(k + 1, 1): 1j * pref}
    if k >= 1:
        terms[(k - 1, 1)] = -2j * k * pref
    bracket = {
        k + 3: 1.0 / 48.0,
        k + 1: 3.0 * (k + 1) / 8.0,
        k - 1: -0.75 * k * k,
        k - 3: -k * (k - 1) * (k - 2) / 6.0,
    }
    for m, c in bracket.items():
        if m >= 0 and c != 0.0 and a1 != 0.0:
            terms[(m, 0)] = terms.get((m, 0), 0.0) + a1 * pref * c

    def ratio(m):
        return math.sqrt(2.0 ** (m - k) * math.factorial(m) / math.factorial(k))

    return {key: c * ratio(key[0]) for key, c in terms.items()}


class TestOrder2Construction:
    def test_lambda2_pinned_values(self):
        qm = build_order2_quasimode(0, 1.0, 0.0, 0.0, 2.0)
        assert qm.lambda0 == pytest.approx(1.0)
        assert qm.lambda2 == pytest.approx(0.5, abs=1e-14)
        qm = build_order2_quasimode(1, 1.0, 0.0, 1.0, 2.0)
        assert qm.lambda0 == pytest.approx(3.0)
        assert qm.lambda2 == pytest.approx(0.5, abs=1e-14)  # 2.5 - 2*1

    def test_flat_phi1_single_term(self):
        b0 = 1.7
        qm = build_order2_quasimode(0, b0, 0.0, 0.0, 2.0)
        terms = dict(qm.phi1.items())
        assert set(terms) == {(1, 1)}
        assert terms[(1, 1)] == pytest.approx(1j / math.sqrt(2 * b0))

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_phi1_matches_reference_display(self, k):
        rng = np.random.default_rng(11 + k)
        b0 = float(rng.uniform(0.5, 3.0))
        a1 = float(rng.uniform(-1.5, 1.5))
        qm = build_order2_quasimode(k, b0, a1, 0.3, 1.8)
        want = reference_phi1(k, b0, a1)
        got = dict(qm.phi1.items())
        assert set(got) == set(want)
        for key in want:
            assert got[key] == pytest.approx(want[key], abs=1e-12), key

    def test_kernel_residual_random_tuples(self):
        rng = np.random.default_rng(404)
        for _ in range(20):
            k = int(rng.integers(0, 5))
            b0 = float(rng.uniform(0.4, 3.0))
            a1 = float(rng.uniform(-1.2, 1.2))
            a2 = float(rng.uniform(-1.0, 1.0))
            beta2 = float(rng.uniform(0.3, 4.0))
            qm = build_order2_quasimode(k, b0, a1, a2, beta2)
            assert qm.kernel_residual <= 1e-12

    def test_formal_eigen_equation_order_by_order(self):
        # coefficients of h^0, h^{1/2}, h^1 in (L0 + rh L1 + h L2 - lam) phi
        k, b0, a1, a2, beta2 = 2, 1.4, 0.7, -0.4, 2.2
        qm = build_order2_quasimode(k, b0, a1, a2, beta2)
        lam0 = qm.lambda0
        zero = ModeExpansion({})
        o0 = apply_l0(qm.phi0, b0) - qm.phi0.scaled(lam0)
        o1 = apply_l0(qm.phi1, b0) - qm.phi1.scaled(lam0) + apply_l1(qm.phi0, b0, a1)
        o2 = (
            apply_l0(qm.phi2, b0)
            - qm.phi2.scaled(lam0)
            + apply_l1(qm.phi1, b0, a1)
            + apply_l2(qm.phi0, b0, a1, a2, beta2)
            - qm.phi0.scaled(qm.lambda2)
        )
        assert o0.isclose(zero, tol=1e-13)
        assert o1.isclose(zero, tol=1e-13)
        assert o2.isclose(zero, tol=1e-12)

    def test_validation(self):
        with pytest.raises(DomainError):
            build_order2_quasimode(-1, 1.0, 0.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            build_order2_quasimode(0, 1.0, 0.0, 0.0, -1.0)
        with pytest.raises(DomainError):
            build_order2_quasimode(0, -2.0, 0.0, 0.0, 1.0)


class TestModeExpansion:
    def test_key_validation(self):
        with pytest.raises(DomainError):
            ModeExpansion({(-1, 0): 1.0})
        with pytest.raises(DomainError):
            ModeExpansion({(0, 4): 1.0})
        with pytest.raises(DomainError):
            ModeExpansion({(0, 0): float("nan")})

    def test_algebra_drops_exact_zeros(self):
        a = ModeExpansion({(0, 0): 1.0, (2, 1): 0.5})
        b = a - a
        assert len(b) == 0
        c = apply_ds(a)
        assert set(c) == {(0, 1), (2, 2)}

    def test_t1_ladder_matches_moment(self):
        b0 = 1.3
        start = ModeExpansion({(3, 0): 1.0})
        out = apply_t1(start, b0, 2)
        assert out.get((3, 0)).real == pytest.approx(moment_table(3, b0, 2, 0))
        assert out.get((5, 0)).real == pytest.approx(moment_table(3, b0, 2, 2))


class TestEnvelope:
    def test_unit_norm(self):
        env = GaussianEnvelope(h=0.05, beta=0.125)
        u = np.linspace(-3.2, 3.2, 20001)
        norm = np.sqrt(np.trapezoid(env(u) ** 2, u))
        assert norm == pytest.approx(1.0, abs=1e-6)

    def test_compact_support_and_plateau(self):
        win = CutoffWindow(plateau=1.0, support=2.0)
        env = GaussianEnvelope(h=0.05, beta=0.125, window=win)
        vals = env(np.array([2.0, 2.5, -2.1]))
        assert np.all(vals == 0.0)
        e, ep, epp = env.derivatives(np.array([0.3, -0.5]))
        g = np.exp(-np.array([0.3, -0.5]) ** 2 / (2 * env.sigma**2))
        assert e == pytest.approx(env._c * g)

    def test_derivatives_match_finite_differences(self):
        env = GaussianEnvelope(h=0.02, beta=0.2)
        s = np.linspace(-3.0, 3.0, 11)
        d = 1e-5
        e, ep, epp = env.derivatives(s)
        fd1 = (env(s + d) - env(s - d)) / (2 * d)
        fd2 = (env(s + d) - 2 * e + env(s - d)) / d**2
        assert np.max(np.abs(ep - fd1)) < 1e-5
        assert np.max(np.abs(epp - fd2)) < 1e-3

    def test_profile_continuous_across_plateau_edge(self):
        # points a hair past the plateau must still read 1, not drop to 0;
        # a grid node landing there once poisoned finite differences
        win = CutoffWindow(plateau=1.6, support=3.2)
        s = np.linspace(1.598, 1.612, 2001)  # straddles plateau * (1 + 2e-3)
        f, fp, fpp = win.profile(s)
        assert f.min() > 0.999999
        assert not np.any(f == 0.0)
        assert np.max(np.abs(np.diff(f))) < 1e-12
        e_probe = win.profile(np.array([1.6028]))
        assert e_probe[0][0] == pytest.approx(1.0, abs=1e-12)
        assert e_probe[1][0] == 0.0 and e_probe[2][0] == 0.0

    def test_moment_norm_scaling(self):
        beta = 0.125
        hs = np.geomspace(0.01, 0.12, 7)
        reports = [gaussian_envelope(h, beta, np.array([0.0])) for h in hs]
        logs = np.log(hs)
        for m, want in [(1, beta), (2, 2 * beta)]:
            slope = np.polyfit(logs, [math.log(r.norms[m]) for r in reports], 1)[0]
            assert slope == pytest.approx(want, rel=0.05)
        # derivative norms scale like h^{beta (m-1)}
        slope0 = np.polyfit(logs, [math.log(r.dnorms[0]) for r in reports], 1)[0]
        assert slope0 == pytest.approx(-beta, rel=0.05)
        slope1 = np.polyfit(logs, [math.log(r.dnorms[1]) for r in reports], 1)[0]
        assert abs(slope1) < 0.02
        slope2 = np.polyfit(logs, [math.log(r.dnorms[2]) for r in reports], 1)[0]
        assert slope2 == pytest.approx(beta, rel=0.05)
        for r in reports:
            assert r.norms[0] == pytest.approx(1.0, abs=1e-6)

    def test_cutoff_exponent(self):
        assert cutoff_exponent(0.125) == pytest.approx(9.0 / 8.0)
        assert cutoff_exponent(0.25) == pytest.approx(0.75)
        assert cutoff_exponent(1e-9) == pytest.approx(1.0, abs=1e-6)
        with pytest.raises(DomainError):
            cutoff_exponent(0.0)
        with pytest.raises(DomainError):
            cutoff_exponent(0.5)

    def test_beta_domain(self):
        with pytest.raises(DomainError):
            GaussianEnvelope(h=0.1, beta=0.6)
        with pytest.raises(DomainError):
            GaussianEnvelope(h=-0.1, beta=0.125)


@dataclass(frozen=True)
class _BoxGrid:
    """Minimal stand-in exposing the node layout the assembler reads."""

    s_min: float
    s_max: float
    t_min: float
    t_max: float
    ns: int
    nt: int

    @property
    def s_interior(self):
        return np.linspace(self.s_min, self.s_max, self.ns + 2)[1:-1]

    @property
    def t_interior(self):
        return np.linspace(self.t_min, self.t_max, self.nt + 2)[1:-1]


class TestTrialState:
    def _grid(self, ns=321, nt=641):
        return _BoxGrid(s_min=-4.0, s_max=4.0, t_min=-2.0, t_max=2.0, ns=ns, nt=nt)

    def test_candidate_eigenvalue_field(self):
        from magwell.geometry import flat_metric

        qm = build_order2_quasimode(0, 1.0, 0.0, 0.0, 2.0)
        bundle = assemble_trial_state(qm, h=0.1, beta=0.125, x=0.0, grid=self._grid(),
                                      metric=flat_metric())
        # h (lambda0 + h lambda2) = 0.1 (1 + 0.1 * 0.5)
        assert bundle.lambda_h == pytest.approx(0.105)
        assert bundle.mass_loss == 0.0
        assert not bundle.truncated

    def test_unit_mass(self):
        from magwell.geometry import flat_metric

        qm = build_order2_quasimode(0, 1.0, 0.0, 0.0, 2.0)
        grid = self._grid()
        bundle = assemble_trial_state(qm, h=0.01, beta=0.125, x=0.0, grid=grid,
                                      metric=flat_metric())
        ds = np.diff(grid.s_interior)[0]
        dt = np.diff(grid.t_interior)[0]
        mass = np.sum(np.abs(bundle.values) ** 2) * ds * dt
        assert mass == pytest.approx(1.0, abs=0.05)

    def test_mass_loss_reported_when_truncated(self):
        from magwell.geometry import flat_metric

        qm = build_order2_quasimode(0, 1.0, 0.0, 0.0, 2.0)
        narrow = _BoxGrid(s_min=-0.6, s_max=0.6, t_min=-2.0, t_max=2.0, ns=61, nt=321)
        bundle = assemble_trial_state(qm, h=0.05, beta=0.125, x=0.0, grid=narrow,
                                      metric=flat_metric())
        assert bundle.truncated
        assert bundle.mass_loss > 1e-4

    def test_oscillator_must_fit_in_band(self):
        from magwell.geometry import flat_metric

        qm = build_order2_quasimode(0, 1.0, 0.0, 0.0, 2.0)
        with pytest.raises(DomainError):
            assemble_trial_state(qm, h=1.5, beta=0.125, x=0.0, grid=self._grid(),
                                 metric=flat_metric())
