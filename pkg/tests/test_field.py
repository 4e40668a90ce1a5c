"""Field profiles, well extraction, gauge potential.

Hand-derived oracles:

    parabolic(1, 2) flat:        beta2 = 2, mu0 = 2, V_0 = 1/2, V_1 = 5/2
    miniwell(1, 2, 2) flat:      beta2(s) = 2 + s^2, x0 = 0, V_0(0) = 1/2,
                                 delta_0 = mu2/(4 b0) = 1/2, mu2 = 2
    parabolic(1, 2) on sphere:   V_0 = 1/2 (R enters only for k >= 1),
                                 V_1 = 5/2 + R = 9/2
    A0 for b=1+t^2 flat:         -(t + t^3/3)
    A0 for b=1 on circle rho=2:  -(t + t^2/4)
"""

from __future__ import annotations

import numpy as np
import pytest

from magwell.errors import (
    DegeneracyViolationError,
    DegenerateMiniwellError,
    DomainError,
    NotAWellError,
    OutOfBandError,
)
from magwell.field import (
    FieldProfile,
    extract_well,
    field_from_csv,
    field_from_expression,
    gauge_potential,
    miniwell_field,
    parabolic_field,
    uniform_field,
    validate_quadratic_well,
)
from magwell.geometry import (
    Band,
    circle_metric,
    curve_coefficients,
    flat_metric,
    sphere_equator_metric,
)


def flat_geo():
    return curve_coefficients(flat_metric())


def test_b0_detection():
    assert parabolic_field(1.0, 2.0).b0 == pytest.approx(1.0)
    assert miniwell_field(0.5, 2.0, 2.0).b0 == pytest.approx(0.5)
    assert uniform_field(3.0).b0 == pytest.approx(3.0)


def test_parabolic_well_extraction():
    well = extract_well(parabolic_field(1.0, 2.0), flat_geo(), ks=())
    s = np.linspace(-3, 3, 11)
    assert np.allclose(well.beta2(s), 2.0, atol=1e-9)
    assert well.mu0 == pytest.approx(2.0, abs=1e-9)
    assert well.b0 == pytest.approx(1.0)


def test_miniwell_extraction():
    well = extract_well(miniwell_field(1.0, 2.0, 2.0), flat_geo(), ks=(0, 1))
    s = np.linspace(-2, 2, 9)
    assert np.allclose(well.beta2(s), 2.0 + s**2, atol=1e-8)
    assert well.mu0 == pytest.approx(2.0, abs=1e-7)
    w0 = well.wells[0]
    assert w0.x0 == pytest.approx(0.0, abs=1e-6)
    assert w0.Vk_min == pytest.approx(0.5, abs=1e-8)
    assert w0.delta_k == pytest.approx(0.5, abs=1e-5)
    assert w0.mu2 == pytest.approx(2.0, abs=1e-4)
    # V_1 = 5 beta2 / 4 on the flat background
    w1 = well.wells[1]
    assert w1.Vk_min == pytest.approx(2.5, abs=1e-7)
    assert np.allclose(w1.Vk(s), 1.25 * (2.0 + s**2), atol=1e-7)


def test_curvature_enters_only_above_k0():
    metric = sphere_equator_metric()
    band = metric.band
    geo = curve_coefficients(metric)
    fld = parabolic_field(1.0, 2.0, band=band)
    well = extract_well(fld, geo, ks=())
    s = np.linspace(-3, 3, 7)

    def V(k):
        return (2 * k * k + 2 * k + 1) * well.beta2(s) / 4 + 0.5 * (k * k + k) * geo.R(s)

    assert np.allclose(V(0), 0.5, atol=1e-7)
    assert np.allclose(V(1), 4.5, atol=1e-5)  # 5/2 from beta2 plus R = 2


def test_uniform_field_has_no_well():
    with pytest.raises(DegeneracyViolationError):
        extract_well(uniform_field(1.0), flat_geo())


def test_not_critical_on_curve():
    fld = FieldProfile(
        b=lambda s, t: (1.0 + t + t**2) * np.ones(np.broadcast(s, t).shape),
        band=Band(-4, 4, 2),
    )
    with pytest.raises(NotAWellError):
        extract_well(fld, flat_geo())


def test_min_not_constant_on_curve():
    fld = FieldProfile(
        b=lambda s, t: 1.0 + 0.05 * s**2 + t**2 * np.ones(np.broadcast(s, t).shape),
        band=Band(-4, 4, 2),
    )
    with pytest.raises(NotAWellError):
        extract_well(fld, flat_geo())


def test_degenerate_miniwell_rejected():
    # translation-invariant V_0 has no isolated minimum
    with pytest.raises(DegenerateMiniwellError):
        extract_well(parabolic_field(1.0, 2.0), flat_geo(), ks=(0,))


def test_negative_field_rejected():
    fld = FieldProfile(
        b=lambda s, t: (1.0 - t**2) * np.ones(np.broadcast(s, t).shape),
        band=Band(-1, 1, 1.5),
    )
    with pytest.raises(DomainError):
        fld.intensity(0.0, 1.2)


def test_quadratic_well_report():
    ok = validate_quadratic_well(parabolic_field(1.0, 2.0), C=2.0, halfwidth=0.5)
    assert ok.holds and ok.violation is None

    quartic = FieldProfile(
        b=lambda s, t: (1.0 + t**4) * np.ones(np.broadcast(s, t).shape),
        band=Band(-4, 4, 2),
    )
    bad = validate_quadratic_well(quartic, C=10.0)
    assert not bad.holds
    s_v, t_v, b_v = bad.violation
    # quartic growth fails the lower bound near the curve
    assert abs(t_v) < 0.5
    assert b_v == pytest.approx(1.0 + t_v**4)

    with pytest.raises(DomainError):
        validate_quadratic_well(parabolic_field(1.0, 2.0), C=0.5)


def test_gauge_potential_closed_forms():
    flat = flat_metric()
    A0 = gauge_potential(parabolic_field(1.0, 2.0), flat)
    t = np.linspace(-1.5, 1.5, 21)
    s = np.zeros_like(t)
    assert np.allclose(A0(s, t), -(t + t**3 / 3), atol=1e-13)

    circ = circle_metric(2.0)
    A0c = gauge_potential(uniform_field(1.0, band=circ.band), circ)
    t = np.linspace(-0.4, 0.4, 9)
    assert np.allclose(A0c(np.zeros_like(t), t), -(t + t**2 / 4), atol=1e-13)

    # A0 vanishes on the curve
    assert np.allclose(A0(np.linspace(-3, 3, 5), np.zeros(5)), 0.0)


def test_gauge_potential_taylor_expansion():
    # A0 = -b0 t - a1 b0 t^2 / 4 - (beta2 + b0(a2 - a1^2/4)) t^3 / 6 + O(t^4)
    metric = circle_metric(2.0)
    geo = curve_coefficients(metric)
    fld = parabolic_field(1.0, 3.0, band=metric.band)
    A0 = gauge_potential(fld, metric)
    b0 = fld.b0
    s = np.zeros(1)
    a1 = geo.a1(s)[0]
    a2 = geo.a2(s)[0]
    for t in (0.01, -0.02, 0.05):
        taylor = -b0 * t - 0.25 * a1 * b0 * t**2 - (3.0 + b0 * (a2 - a1**2 / 4)) * t**3 / 6
        assert abs(A0(0.0, t) - taylor) < 2.0 * abs(t) ** 4


def test_gauge_scalar_matches_vectorized():
    metric = sphere_equator_metric()
    fld = miniwell_field(1.0, 2.0, 2.0, band=metric.band)
    A0 = gauge_potential(fld, metric)
    rng = np.random.default_rng(3)
    for _ in range(10):
        s = rng.uniform(-3, 3)
        t = rng.uniform(-1.1, 1.1)
        assert A0(s, t) == pytest.approx(A0.scalar(s, t), abs=1e-12)


def test_gauge_domain_checks():
    A0 = gauge_potential(parabolic_field(1.0, 2.0), flat_metric())
    with pytest.raises(OutOfBandError):
        A0(0.0, 2.5)


def test_field_from_expression():
    fld = field_from_expression("1 + (2 + s**2) * t**2 / 2", Band(-4, 4, 2))
    ss = np.linspace(-2, 2, 5)
    tt = np.linspace(-1, 1, 5)
    assert np.allclose(fld.intensity(ss, tt), 1 + (2 + ss**2) * tt**2 / 2)
    well = extract_well(fld, flat_geo(), ks=(0,))
    assert well.wells[0].mu2 == pytest.approx(2.0, abs=1e-4)
    with pytest.raises(Exception):
        field_from_expression("1 + q * t**2", Band(-1, 1, 1))


def test_field_from_csv(tmp_path):
    s_nodes = np.linspace(-2.0, 2.0, 61)
    t_nodes = np.linspace(-1.0, 1.0, 61)
    lines = ["s,t,b"]
    for s in s_nodes:
        for t in t_nodes:
            lines.append(f"{s:.17g},{t:.17g},{1.0 + t * t:.17g}")
    path = tmp_path / "field.csv"
    path.write_text("\n".join(lines) + "\n")
    fld = field_from_csv(path)
    assert fld.b0 == pytest.approx(1.0, abs=1e-9)
    well = extract_well(fld, flat_geo())
    assert well.mu0 == pytest.approx(2.0, abs=1e-3)
