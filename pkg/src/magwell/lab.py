"""Experiment driver: configured h-sweeps, power-law fits, gap counting.

A sweep solves the lowest eigenpairs of one scenario per h value,
optionally measures the residual of the order-2 quasimode at the same h,
and appends one CSV row per completed h.  Sweeps are resumable: a state
sidecar records the config hash and the finished h values, so rerunning
a completed sweep performs no solves.  Fitting utilities estimate the
coefficients c_p of value ~ sum c_p h^p and log-log slopes of positive
quantities; gap counting works on sorted spectra within an interval.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, IllConditionedFitError
from .field import (
    field_from_expression,
    gauge_potential,
    miniwell_field,
    parabolic_field,
    uniform_field,
)
from .geometry import (
    Band,
    circle_metric,
    flat_metric,
    horocycle_metric,
    sphere_equator_metric,
)
from .operator import GridSpec, assemble, lowest_eigenpairs, residual_norm
from .oscillator import assemble_trial_state, build_order2_quasimode

FIT_POWERS = (1.0, 2.0, 2.5)
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "groundstate"
    field_kind: str = "parabolic"
    b0: float = 1.0
    beta2: float = 2.0
    mu0: float = 2.0
    mu2: float = 2.0
    expr: str = ""
    metric_kind: str = "flat"
    rho: float = 1.0
    s_min: float = -4.0
    s_max: float = 4.0
    t_halfwidth: float = 2.0
    box_s_min: float = -3.0
    box_s_max: float = 3.0
    box_t_min: float = -1.2
    box_t_max: float = 1.2
    factor: int = 8
    min_points: int = 16
    h_values: tuple = (0.1, 0.07, 0.05, 0.03)
    m: int = 2
    workers: int = 1
    output: str = "sweep.csv"
    tol: float = 1e-8
    seed: int = 0
    maxiter: int = 40
    beta: float = 0.125
    k: int = 0
    j: int = 0
    center: float = 0.0
    measure_residual: bool = False

    def __post_init__(self):
        hs = tuple(sorted(set(float(h) for h in self.h_values), reverse=True))
        if any(h <= 0 for h in hs):
            raise ConfigError(f"h values must be positive, got {self.h_values}")
        object.__setattr__(self, "h_values", hs)
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.k < 0 or self.j < 0:
            raise ConfigError("band index k and ladder index j must be >= 0")
        if not (0.0 < self.beta < 0.5):
            raise ConfigError(f"envelope beta must lie in (0, 1/2), got {self.beta}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not self.tol > 0:
            raise ConfigError(f"solver tol must be positive, got {self.tol}")


# INI layout: section -> {key: config field}
_SCHEMA = {
    "field": {"kind": "field_kind", "b0": "b0", "beta2": "beta2",
              "mu0": "mu0", "mu2": "mu2", "expr": "expr"},
    "metric": {"kind": "metric_kind", "rho": "rho", "s_min": "s_min",
               "s_max": "s_max", "t_halfwidth": "t_halfwidth"},
    "grid": {"s_min": "box_s_min", "s_max": "box_s_max", "t_min": "box_t_min",
             "t_max": "box_t_max", "factor": "factor", "min_points": "min_points"},
    "sweep": {"scenario": "scenario", "h": "h_values", "m": "m",
              "workers": "workers", "output": "output"},
    "solver": {"tol": "tol", "seed": "seed", "maxiter": "maxiter"},
    "envelope": {"beta": "beta", "k": "k", "j": "j", "center": "center",
                 "measure_residual": "measure_residual"},
}

_FIELD_TYPES = {f.name: f.type for f in dataclass_fields(ExperimentConfig)}


def _convert(field_name: str, raw: str):
    kind = _FIELD_TYPES[field_name]
    raw = raw.strip()
    try:
        if field_name == "h_values":
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1", "on"):
                return True
            if raw.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {field_name}: {raw!r}") from exc


def parse_config(source) -> ExperimentConfig:
    """Read an ExperimentConfig from an INI file path or INI text."""
    import configparser

    parser = configparser.ConfigParser()
    text = source
    if isinstance(source, (str, Path)) and "\n" not in str(source) and Path(source).exists():
        text = Path(source).read_text(encoding="utf-8")
    try:
        parser.read_string(str(text))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    overrides = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            name = _SCHEMA[section][key]
            overrides[name] = _convert(name, raw)
    return ExperimentConfig(**overrides)


def default_config_text() -> str:
    """All settings with their defaults, in parseable INI form."""
    cfg = ExperimentConfig()
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key, name in keys.items():
            value = getattr(cfg, name)
            if name == "h_values":
                value = ", ".join(f"{h:g}" for h in value)
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def config_hash(config: ExperimentConfig) -> str:
    payload = repr(tuple(
        (f.name, getattr(config, f.name)) for f in dataclass_fields(config)
    ))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_scenario(config: ExperimentConfig):
    """(field, metric, gauge) for the configured scenario."""
    if config.metric_kind == "flat":
        metric = flat_metric(Band(config.s_min, config.s_max, config.t_halfwidth))
    elif config.metric_kind == "circle":
        metric = circle_metric(config.rho, t_halfwidth=config.t_halfwidth)
    elif config.metric_kind == "sphere":
        metric = sphere_equator_metric(t_halfwidth=config.t_halfwidth)
    elif config.metric_kind == "horocycle":
        metric = horocycle_metric(t_halfwidth=config.t_halfwidth)
    else:
        raise ConfigError(f"unknown metric kind {config.metric_kind!r}")

    band = metric.band
    if config.field_kind == "uniform":
        field = uniform_field(config.b0, band=band)
    elif config.field_kind == "parabolic":
        field = parabolic_field(config.b0, config.beta2, band=band)
    elif config.field_kind == "miniwell":
        field = miniwell_field(config.b0, config.mu0, config.mu2, band=band)
    elif config.field_kind == "expression":
        if not config.expr:
            raise ConfigError("field kind 'expression' needs a nonempty expr")
        field = field_from_expression(config.expr, band)
    else:
        raise ConfigError(f"unknown field kind {config.field_kind!r}")
    return field, metric, gauge_potential(field, metric)


@dataclass(frozen=True)
class SweepRecord:
    h: float
    eigenvalues: tuple
    residual: float | None
    iterations: int
    seconds: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _quasimode_coefficients(config: ExperimentConfig):
    """Frozen transverse data of the configured fields at the well point.

    The catalog scenarios are flat-metric with explicit beta2(s), so the
    curvature coefficients vanish and beta2 at the center is closed form.
    """
    if config.metric_kind != "flat":
        raise ConfigError("quasimode residual path supports flat metrics only")
    if config.field_kind == "parabolic":
        beta2 = config.beta2
    elif config.field_kind == "miniwell":
        beta2 = config.mu0 + 0.5 * config.mu2 * config.center**2
    else:
        raise ConfigError(
            f"no transverse well data for field kind {config.field_kind!r}"
        )
    return build_order2_quasimode(
        k=config.k, b0=config.b0, a1_at_x=0.0, a2_at_x=0.0, beta2_at_x=beta2
    )


def _run_single(config: ExperimentConfig, h: float) -> SweepRecord:
    start = time.perf_counter()
    try:
        field, metric, gauge = build_scenario(config)
        grid = GridSpec.for_box(
            config.box_s_min, config.box_s_max, config.box_t_min,
            config.box_t_max, h, field.b0,
            factor=config.factor, min_points=config.min_points,
        )
        op = assemble(h, field, metric, gauge, grid)
        result = lowest_eigenpairs(
            op, config.m, tol=config.tol, seed=config.seed, maxiter=config.maxiter
        )
        residual = None
        if config.measure_residual:
            qm = _quasimode_coefficients(config)
            bundle = assemble_trial_state(
                qm, h=h, beta=config.beta, x=config.center, grid=grid, metric=metric
            )
            residual = residual_norm(op, bundle)
        return SweepRecord(
            h=h,
            eigenvalues=tuple(float(v) for v in result.eigenvalues),
            residual=residual,
            iterations=result.iterations,
            seconds=time.perf_counter() - start,
        )
    except Exception as exc:  # per-h failures must not kill the sweep
        return SweepRecord(
            h=h, eigenvalues=(), residual=None, iterations=0,
            seconds=time.perf_counter() - start,
            error=f"{type(exc).__name__}: {exc}",
        )


def _sweep_header(m: int) -> list[str]:
    return ["h"] + [f"lambda{i}" for i in range(m)] + ["residual", "iters", "seconds"]


def _record_row(rec: SweepRecord, m: int) -> list[str]:
    vals = [f"{rec.h:.17g}"]
    vals += [f"{v:.17g}" for v in rec.eigenvalues[:m]]
    vals += [""] * (m - len(rec.eigenvalues))
    vals.append("" if rec.residual is None else f"{rec.residual:.17g}")
    vals.append(str(rec.iterations))
    vals.append(f"{rec.seconds:.17g}")
    return vals


def write_sweep_csv(records, m: int, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(_sweep_header(m))
        for rec in records:
            if rec.ok:
                writer.writerow(_record_row(rec, m))


def read_sweep_csv(path) -> list[SweepRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header[0] != "h":
            raise ConfigError(f"{path}: not a sweep CSV")
        lam_cols = [i for i, name in enumerate(header) if name.startswith("lambda")]
        res_col = header.index("residual")
        it_col = header.index("iters")
        sec_col = header.index("seconds")
        records = []
        for row in reader:
            if not row:
                continue
            records.append(SweepRecord(
                h=float(row[0]),
                eigenvalues=tuple(float(row[i]) for i in lam_cols if row[i] != ""),
                residual=float(row[res_col]) if row[res_col] != "" else None,
                iterations=int(row[it_col]),
                seconds=float(row[sec_col]),
            ))
    return records


def run_sweep(config: ExperimentConfig, log=None) -> list[SweepRecord]:
    """Solve every configured h, resuming from a matching partial run.

    Worker threads only compute; the aggregator alone appends CSV rows
    and updates the sidecar state, in configured (descending h) order.
    Failed h values are returned with their error string and are retried
    on the next run.  MAGWELL_WORKERS overrides config.workers.
    """
    out = Path(config.output)
    state_path = out.with_name(out.name + ".state")
    digest = config_hash(config)

    done: dict[float, SweepRecord] = {}
    if out.exists() and state_path.exists():
        try:
            state = json.loads(state_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            state = {}
        if state.get("config") == digest:
            for rec in read_sweep_csv(out):
                if rec.h in config.h_values:
                    done[rec.h] = rec

    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv([done[h] for h in config.h_values if h in done], config.m, out)
    state_path.write_text(
        json.dumps({"config": digest, "completed": sorted(done)}), encoding="utf-8"
    )

    pending = [h for h in config.h_values if h not in done]
    workers = int(os.environ.get("MAGWELL_WORKERS", config.workers))
    results: dict[float, SweepRecord] = {}
    if pending:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            futures = {h: pool.submit(_run_single, config, h) for h in pending}
            for h in pending:
                results[h] = futures[h].result()

    records = []
    with open(out, "a", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        for h in config.h_values:
            rec = done.get(h) or results[h]
            records.append(rec)
            if rec.ok and h not in done:
                writer.writerow(_record_row(rec, config.m))
                f.flush()
                done[rec.h] = rec
                state_path.write_text(
                    json.dumps({"config": digest, "completed": sorted(done)}),
                    encoding="utf-8",
                )
            if log is not None:
                status = "ok" if rec.ok else f"failed: {rec.error}"
                lam0 = f" lambda0={rec.eigenvalues[0]:.8g}" if rec.eigenvalues else ""
                log(f"h={h:g}: {status}{lam0} ({rec.seconds:.2f}s)")
    return records


@dataclass(frozen=True)
class FitReport:
    """Coefficients of value ~ sum c_p h^p, or a log-log exponent fit."""

    powers: tuple
    coefficients: tuple
    rss: float
    slope: float | None = None
    stderr: float | None = None

    def coefficient(self, power: float) -> float:
        for p, c in zip(self.powers, self.coefficients):
            if p == power:
                return c
        raise DomainError(f"power {power} not in fit basis {self.powers}")


def fit_powers(pairs, powers) -> FitReport:
    """Least squares for value ~ sum_p c_p h^p over the given powers.

    Column-scaled normal equations; near-collinear h samples (condition
    number past 1e12) abort instead of returning garbage coefficients.
    """
    powers = tuple(float(p) for p in powers)
    if not powers:
        raise DomainError("need at least one power to fit")
    pts = [(float(h), float(v)) for h, v in pairs]
    if any(h <= 0 for h, _ in pts):
        raise DomainError("h values must be positive")
    hs = np.array([h for h, _ in pts])
    vals = np.array([v for _, v in pts])
    if len(set(hs.tolist())) < len(powers):
        raise IllConditionedFitError(
            f"{len(powers)}-power fit needs at least {len(powers)} distinct h"
        )
    X = np.column_stack([hs**p for p in powers])
    scale = np.linalg.norm(X, axis=0)
    Xs = X / scale
    G = Xs.T @ Xs
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise IllConditionedFitError(
            f"normal equations condition {cond:.3g} exceeds {CONDITION_LIMIT:g}; "
            "h values too clustered for the requested powers"
        )
    coef = np.linalg.solve(G, Xs.T @ vals) / scale
    rss = float(np.sum((X @ coef - vals) ** 2))
    return FitReport(powers=powers, coefficients=tuple(coef), rss=rss)


def exponent_fit(pairs) -> FitReport:
    """Log-log OLS slope and its standard error for positive samples."""
    pts = [(float(h), float(v)) for h, v in pairs]
    if len(pts) < 3:
        raise DomainError(f"exponent fit needs >= 3 samples, got {len(pts)}")
    if any(h <= 0 or v <= 0 for h, v in pts):
        raise DomainError("exponent fit needs positive h and positive values")
    x = np.log([h for h, _ in pts])
    y = np.log([v for _, v in pts])
    if np.ptp(x) == 0:
        raise IllConditionedFitError("all h values identical")
    xc = x - x.mean()
    slope = float(np.dot(xc, y) / np.dot(xc, xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    rss = float(np.dot(resid, resid))
    dof = len(pts) - 2
    stderr = math.sqrt(rss / dof / float(np.dot(xc, xc))) if dof > 0 else 0.0
    return FitReport(
        powers=(), coefficients=(intercept,), rss=rss, slope=slope, stderr=stderr
    )


@dataclass(frozen=True)
class GapReport:
    count: int
    gaps: tuple
    min_gap: float

    def __iter__(self):
        return iter((self.count, list(self.gaps)))


def default_min_gap(tol: float, lam_scale: float) -> float:
    """3x the solver tolerance at the eigenvalue scale; floors gap noise."""
    return 3.0 * tol * abs(lam_scale)


def count_gaps(eigenvalues, interval, min_gap: float) -> GapReport:
    """Spectral gaps of width >= min_gap with both endpoints inside interval."""
    alpha, beta = (float(interval[0]), float(interval[1]))
    if alpha >= beta:
        raise DomainError(f"empty interval [{alpha}, {beta}]")
    if not min_gap > 0:
        raise DomainError(f"min_gap must be positive, got {min_gap}")
    lam = [float(v) for v in eigenvalues]
    if any(b < a for a, b in zip(lam, lam[1:])):
        raise DomainError("eigenvalues must be sorted ascending")
    inside = [v for v in lam if alpha <= v <= beta]
    gaps = [
        (a, b) for a, b in zip(inside, inside[1:]) if b - a >= min_gap
    ]
    return GapReport(count=len(gaps), gaps=tuple(gaps), min_gap=float(min_gap))


def interval_for_band(h: float, k: int, b0: float, m_k: float, M_k: float):
    """The h^2-window [(2k+1)hb0 + h^2 m_k, (2k+1)hb0 + h^2 M_k]."""
    if not (h > 0 and b0 > 0):
        raise DomainError("h and b0 must be positive")
    if k < 0:
        raise DomainError(f"band index k must be >= 0, got {k}")
    if m_k > M_k:
        raise DomainError(f"expected m_k <= M_k, got {m_k} > {M_k}")
    base = (2 * k + 1) * h * b0
    return (base + h**2 * m_k, base + h**2 * M_k)
