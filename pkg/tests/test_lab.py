"""Sweep driver, fitting, and gap-counting tests.

Frozen reference values:
  - fit on {(0.05, 0.05125), (0.1, 0.105)} with powers {1, 2}: the 2x2
    system gives c1 = 1, c2 = 0.5 exactly (solved by hand).
  - value = h^2 exactly: log-log slope 2 with zero standard error.
  - value = 5 h^{17/8}: slope 17/8 = 2.125.
  - gaps of {1, 2, 2.1, 3} in [0, 4] at min width 0.5: (1,2) and (2.1,3).
  - h^2-window at (h=0.1, k=0, b0=1, m0=0.5, M0=0.75): [0.105, 0.1075];
    at (h=0.05, k=1, b0=1, m1=4.5, M1=6): [0.16125, 0.165].
"""

import math

import numpy as np
import pytest

from magwell.errors import ConfigError, DomainError, IllConditionedFitError
from magwell.lab import (
    ExperimentConfig,
    FitReport,
    SweepRecord,
    build_scenario,
    config_hash,
    count_gaps,
    default_config_text,
    default_min_gap,
    exponent_fit,
    fit_powers,
    interval_for_band,
    parse_config,
    read_sweep_csv,
    run_sweep,
    write_sweep_csv,
)
from magwell.modelspectra import groundstate_two_term


class TestConfig:
    def test_defaults_parse_back(self):
        text = default_config_text()
        cfg = parse_config(text)
        assert cfg == ExperimentConfig()

    def test_parse_overrides(self):
        cfg = parse_config(
            """
            [field]
            kind = miniwell
            mu0 = 2.0
            mu2 = 2.0
            [sweep]
            h = 0.1, 0.05, 0.2
            m = 3
            [envelope]
            measure_residual = true
            """
        )
        assert cfg.field_kind == "miniwell"
        assert cfg.h_values == (0.2, 0.1, 0.05)  # sorted descending
        assert cfg.m == 3
        assert cfg.measure_residual is True

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("[nope]\nx = 1\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("[sweep]\nbogus = 1\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("[sweep]\nm = three\n")

    def test_invalid_settings_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(h_values=(0.1, -0.1))
        with pytest.raises(ConfigError):
            ExperimentConfig(m=0)
        with pytest.raises(ConfigError):
            ExperimentConfig(beta=0.5)
        with pytest.raises(ConfigError):
            ExperimentConfig(workers=0)

    def test_hash_tracks_content(self):
        a = ExperimentConfig()
        b = ExperimentConfig(m=3)
        assert config_hash(a) == config_hash(ExperimentConfig())
        assert config_hash(a) != config_hash(b)

    def test_build_scenario_kinds(self):
        field, metric, gauge = build_scenario(ExperimentConfig())
        assert field.b0 == 1.0
        assert metric.coeff(0.0, 0.0) == pytest.approx(1.0)
        with pytest.raises(ConfigError):
            build_scenario(ExperimentConfig(field_kind="weird"))
        with pytest.raises(ConfigError):
            build_scenario(ExperimentConfig(metric_kind="weird"))
        with pytest.raises(ConfigError):
            build_scenario(ExperimentConfig(field_kind="expression", expr=""))


class TestFitPowers:
    def test_two_point_groundstate_model(self):
        report = fit_powers([(0.05, 0.05125), (0.1, 0.105)], powers=(1, 2))
        assert report.coefficient(1.0) == pytest.approx(1.0, abs=1e-12)
        assert report.coefficient(2.0) == pytest.approx(0.5, abs=1e-12)
        assert report.rss == pytest.approx(0.0, abs=1e-24)

    def test_single_power_exact(self):
        report = fit_powers([(0.1, 0.3), (0.2, 0.6), (0.4, 1.2)], powers=(1,))
        assert report.coefficient(1.0) == pytest.approx(3.0, abs=1e-14)
        assert report.rss == pytest.approx(0.0, abs=1e-28)

    def test_recovers_exact_model(self):
        hs = (0.02, 0.03, 0.05, 0.07, 0.1, 0.12)
        pairs = [(h, groundstate_two_term(h, 1.0, 2.0).value) for h in hs]
        report = fit_powers(pairs, powers=(1, 2))
        assert report.coefficient(1.0) == pytest.approx(1.0, abs=1e-12)
        assert report.coefficient(2.0) == pytest.approx(0.5, abs=1e-10)

    def test_too_few_distinct_h(self):
        with pytest.raises(IllConditionedFitError):
            fit_powers([(0.1, 1.0), (0.1, 1.0)], powers=(1, 2))

    def test_clustered_h_rejected(self):
        pairs = [(0.1 + i * 1e-13, 0.1) for i in range(4)]
        with pytest.raises(IllConditionedFitError):
            fit_powers(pairs, powers=(1, 2, 2.5))

    def test_validation(self):
        with pytest.raises(DomainError):
            fit_powers([(-0.1, 1.0), (0.2, 1.0)], powers=(1,))
        with pytest.raises(DomainError):
            fit_powers([(0.1, 1.0)], powers=())
        report = fit_powers([(0.1, 0.01), (0.2, 0.04), (0.3, 0.09)], powers=(2,))
        with pytest.raises(DomainError):
            report.coefficient(1.0)


class TestExponentFit:
    def test_quadratic_exact(self):
        pairs = [(h, h**2) for h in (0.02, 0.05, 0.1, 0.2)]
        report = exponent_fit(pairs)
        assert report.slope == pytest.approx(2.0, abs=1e-12)
        assert report.stderr == pytest.approx(0.0, abs=1e-12)

    def test_seventeen_eighths(self):
        pairs = [(h, 5 * h ** (17 / 8)) for h in (0.02, 0.04, 0.08, 0.16)]
        report = exponent_fit(pairs)
        assert report.slope == pytest.approx(2.125, abs=1e-12)
        # intercept recovers the prefactor
        assert math.exp(report.coefficients[0]) == pytest.approx(5.0, rel=1e-10)

    def test_validation(self):
        with pytest.raises(DomainError):
            exponent_fit([(0.1, 1.0), (0.2, 2.0)])
        with pytest.raises(DomainError):
            exponent_fit([(0.1, 1.0), (0.2, -2.0), (0.3, 1.0)])
        with pytest.raises(IllConditionedFitError):
            exponent_fit([(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)])


class TestCountGaps:
    def test_enumerated_example(self):
        count, gaps = count_gaps([1.0, 2.0, 2.1, 3.0], (0.0, 4.0), 0.5)
        assert count == 2
        assert gaps == [(1.0, 2.0), (2.1, 3.0)]

    def test_single_eigenvalue(self):
        count, gaps = count_gaps([1.5], (0.0, 4.0), 0.5)
        assert count == 0 and gaps == []

    def test_endpoint_must_be_inside(self):
        # only 1.5 lies in [1, 2]: no pair, no gap
        count, _ = count_gaps([0.5, 1.5], (1.0, 2.0), 0.1)
        assert count == 0

    def test_union_monotonicity_sub_delta_shift(self):
        # shifts smaller than the gap threshold can split off only
        # sub-threshold slivers, so the union never counts more gaps;
        # larger shifts CAN split one wide gap into several countable
        # ones ({0,1} u {0.5,1.5} has 3 gaps at delta=0.03 versus 1)
        rng = np.random.default_rng(12)
        delta = 0.03
        for _ in range(25):
            spec = np.sort(rng.uniform(0.0, 1.0, size=12))
            shift = rng.uniform(0.0, delta)
            union = np.sort(np.concatenate([spec, spec + shift]))
            base, _ = count_gaps(spec, (0.0, 1.5), delta)
            merged, _ = count_gaps(union, (0.0, 1.5), delta)
            assert merged <= base

    def test_union_gaps_nest_inside_copy_gaps(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            spec = np.sort(rng.uniform(0.0, 1.0, size=10))
            shift = rng.uniform(0.0, 0.4)
            union = np.sort(np.concatenate([spec, spec + shift]))
            _, merged = count_gaps(union, (0.0, 1.5), 0.02)
            for lo, hi in merged:
                assert not np.any((spec > lo) & (spec < hi))
                assert not np.any((spec + shift > lo) & (spec + shift < hi))

    def test_validation(self):
        with pytest.raises(DomainError):
            count_gaps([1.0, 2.0], (3.0, 1.0), 0.5)
        with pytest.raises(DomainError):
            count_gaps([1.0, 2.0], (0.0, 4.0), 0.0)
        with pytest.raises(DomainError):
            count_gaps([2.0, 1.0], (0.0, 4.0), 0.5)

    def test_default_min_gap(self):
        assert default_min_gap(1e-8, 0.1) == pytest.approx(3e-9)


class TestIntervalForBand:
    def test_k0_example(self):
        lo, hi = interval_for_band(0.1, 0, 1.0, 0.5, 0.75)
        assert lo == pytest.approx(0.105, abs=1e-15)
        assert hi == pytest.approx(0.1075, abs=1e-15)

    def test_k1_example(self):
        lo, hi = interval_for_band(0.05, 1, 1.0, 4.5, 6.0)
        assert lo == pytest.approx(0.16125, abs=1e-15)
        assert hi == pytest.approx(0.165, abs=1e-15)

    def test_degenerate_width(self):
        lo, hi = interval_for_band(0.1, 0, 1.0, 0.5, 0.5)
        assert lo == hi

    def test_validation(self):
        with pytest.raises(DomainError):
            interval_for_band(0.1, 0, 1.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            interval_for_band(-0.1, 0, 1.0, 0.5, 0.75)
        with pytest.raises(DomainError):
            interval_for_band(0.1, -1, 1.0, 0.5, 0.75)


class TestSweep:
    def _landau_config(self, tmp_path, **kw):
        settings = dict(
            scenario="landau",
            field_kind="uniform",
            b0=1.0,
            box_s_min=-3.0, box_s_max=3.0, box_t_min=-1.5, box_t_max=1.5,
            h_values=(0.1,),
            m=1,
            tol=2e-3,
            output=str(tmp_path / "sweep.csv"),
        )
        settings.update(kw)
        return ExperimentConfig(**settings)

    def test_flat_landau_single_h(self, tmp_path):
        config = self._landau_config(tmp_path)
        records = run_sweep(config)
        assert len(records) == 1
        rec = records[0]
        assert rec.ok
        assert rec.eigenvalues[0] == pytest.approx(0.1, rel=0.01)
        assert rec.iterations > 0 and rec.seconds > 0

    def test_empty_h_list(self, tmp_path):
        config = self._landau_config(tmp_path, h_values=())
        assert run_sweep(config) == []

    def test_resume_skips_completed(self, tmp_path):
        config = self._landau_config(tmp_path)
        first = run_sweep(config)
        second = run_sweep(config)
        assert [r.eigenvalues for r in second] == [r.eigenvalues for r in first]
        # resumed records carry the stored timing, proving no re-solve
        assert second[0].seconds == first[0].seconds

    def test_changed_config_invalidates_resume(self, tmp_path):
        config = self._landau_config(tmp_path)
        run_sweep(config)
        changed = self._landau_config(tmp_path, seed=1)
        records = run_sweep(changed)
        assert records[0].ok

    def test_error_recorded_and_sweep_continues(self, tmp_path):
        # second h is unresolvable within the configured budget: the grid
        # cannot resolve the magnetic length with min_points that small
        config = ExperimentConfig(
            field_kind="uniform",
            h_values=(0.1, 0.00001),
            m=1,
            tol=2e-3,
            factor=8,
            box_s_min=-3.0, box_s_max=3.0, box_t_min=-1.5, box_t_max=1.5,
            output=str(tmp_path / "sweep.csv"),
        )
        records = run_sweep(config)
        by_h = {r.h: r for r in records}
        assert by_h[0.1].ok
        failed = by_h[0.00001]
        assert not failed.ok and failed.error
        # failed rows stay out of the CSV
        stored = read_sweep_csv(config.output)
        assert [r.h for r in stored] == [0.1]

    def test_csv_roundtrip(self, tmp_path):
        records = [
            SweepRecord(h=0.1, eigenvalues=(0.10012, 0.30045), residual=0.0123,
                        iterations=37, seconds=1.5),
            SweepRecord(h=0.05, eigenvalues=(0.05003, 0.15021), residual=None,
                        iterations=21, seconds=0.75),
        ]
        path = tmp_path / "records.csv"
        write_sweep_csv(records, 2, path)
        assert read_sweep_csv(path) == records

    def test_measured_residual_lands_in_csv(self, tmp_path):
        config = ExperimentConfig(
            field_kind="parabolic", b0=1.0, beta2=2.0,
            h_values=(0.1,), m=1, tol=1e-8,
            measure_residual=True, beta=0.125, k=0,
            box_s_min=-3.0, box_s_max=3.0, box_t_min=-1.2, box_t_max=1.2,
            output=str(tmp_path / "sweep.csv"),
        )
        records = run_sweep(config)
        assert records[0].ok
        assert records[0].residual is not None
        assert 0 < records[0].residual < 0.05
        stored = read_sweep_csv(config.output)
        assert stored[0].residual == records[0].residual
