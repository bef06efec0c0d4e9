"""End-to-end scenario execution and report emission.

Pipeline: ingest -> distribution tables -> chain ensemble -> per-realisation
energy tables -> equilibrium at every sweep point -> ensemble aggregation.
Energy tables are built once per realisation and reused across sweep points,
since cost parameters cannot affect the physics. Failures are re-raised
tagged with the stage they occurred in.
"""
from __future__ import annotations

import contextlib
import json
import logging
import platform
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ScenarioConfig
from .dist import (BinSpec, assert_ergodic, build_demand_conditional,
                   build_joint_wind_table, merge_sparse_bins)
from .errors import StageError, WindGameError
from .game import CostParams, profit_surfaces, stackelberg
from .gibbs import SamplerTables, StatsReport, convergence_stats, run_ensemble
from .ingest import JointSeries, align_series, load_series_csv, normalize_demand
from .sim import PowerCurve, StrategyGrid, build_energy_tables, default_power_curve, \
    fit_sigmoid, load_curve_points

log = logging.getLogger("windgame")

EQUILIBRIUM_FIELDS = ("p_n1", "p_n2", "pi1", "pi2")
STAT_ORDER = ("mean", "min", "max")


@dataclass(frozen=True)
class ScenarioResult:
    """Aggregated equilibria per sweep point plus diagnostics and metadata."""

    sweep_parameter: str
    sweep_fracs: list[float]
    per_realisation: np.ndarray  # (sweep, realisation, 4): p_n1, p_n2, pi1, pi2
    aggregates: np.ndarray       # (sweep, 3, 4): mean, min, max
    stats: StatsReport
    metadata: dict


@contextlib.contextmanager
def _stage(name: str, timing: dict):
    log.info("stage %s: start", name)
    start = time.perf_counter()
    try:
        yield
    except WindGameError as exc:
        raise StageError(name, exc) from exc
    elapsed = time.perf_counter() - start
    timing[name] = round(elapsed, 3)
    log.info("stage %s: done in %.2fs", name, elapsed)


def ingest_joint_series(config: ScenarioConfig) -> JointSeries:
    """Load, clean, normalize and align the three configured series."""
    w1, rep1 = load_series_csv(config.wind1.path,
                               {"timestamp": config.wind1.time_col,
                                "value": config.wind1.value_col}, label="wind1")
    w2, rep2 = load_series_csv(config.wind2.path,
                               {"timestamp": config.wind2.time_col,
                                "value": config.wind2.value_col}, label="wind2")
    demand, rep3 = load_series_csv(config.demand.path,
                                   {"timestamp": config.demand.time_col,
                                    "value": config.demand.value_col}, label="demand")
    for report in (rep1, rep2, rep3):
        log.info("%s", report.summary())
    demand = normalize_demand(demand, config.demand_target_mean)
    series = align_series(w1, w2, demand)
    log.info("aligned joint series: %d records", len(series))
    return series


def build_tables(series: JointSeries, config: ScenarioConfig) -> SamplerTables:
    """Bin, merge and connectivity-check the empirical distributions."""
    wind_width = config.wind_bin_width
    spec1 = BinSpec.covering(float(series.w1.min()), float(series.w1.max()), wind_width)
    spec2 = BinSpec.covering(float(series.w2.min()), float(series.w2.max()), wind_width)
    joint = merge_sparse_bins(build_joint_wind_table(series, spec1, spec2),
                              config.min_count)
    assert_ergodic(joint)

    mean_lo = (float(series.w1.min()) + float(series.w2.min())) / 2.0
    mean_hi = (float(series.w1.max()) + float(series.w2.max())) / 2.0
    mean_spec = BinSpec.covering(mean_lo, mean_hi, wind_width)
    demand_spec = BinSpec.covering(float(series.p_d.min()), float(series.p_d.max()),
                                   config.demand_bin_width)
    demand = build_demand_conditional(series, mean_spec, demand_spec, config.min_count)
    log.info("joint table %dx%d, demand conditional %d rows",
             joint.n_rows, joint.n_cols, demand.n_rows)
    return SamplerTables(joint=joint, demand=demand)


def resolve_power_curve(config: ScenarioConfig) -> PowerCurve:
    if config.curve_alpha is not None:
        return PowerCurve(alpha=config.curve_alpha, beta=config.curve_beta)
    if config.curve_points is not None:
        return fit_sigmoid(load_curve_points(config.curve_points))
    return default_power_curve()


def _swept_costs(base: CostParams, parameter: str, frac: float) -> CostParams:
    return replace(base, **{parameter: frac * base.p_g})


def run_scenario(config: ScenarioConfig, workers: int = 1) -> ScenarioResult:
    """Execute the full pipeline for one scenario sweep."""
    timing: dict = {}
    with _stage("ingest", timing):
        series = ingest_joint_series(config)
    with _stage("tables", timing):
        tables = build_tables(series, config)
    with _stage("sample", timing):
        realisations = run_ensemble(config.chain, tables, workers=workers)
        stats = convergence_stats(realisations, series) \
            if config.chain.realisations >= 2 else None
    with _stage("curve", timing):
        curve = resolve_power_curve(config)
    with _stage("game", timing):
        grid = StrategyGrid(step=config.grid_step, p_n_max=config.grid_max)
        sweep_fracs = config.sweep.values()
        per_real = np.empty((len(sweep_fracs), len(realisations), 4))
        for r_idx, realisation in enumerate(realisations):
            energies = build_energy_tables(realisation, curve, grid)
            for s_idx, frac in enumerate(sweep_fracs):
                costs = _swept_costs(config.costs, config.sweep.parameter, frac)
                eq = stackelberg(profit_surfaces(energies, costs), grid)
                per_real[s_idx, r_idx] = (eq.p_n1_star, eq.p_n2_star,
                                          eq.pi1_star, eq.pi2_star)
            log.info("realisation %d/%d solved across %d sweep points",
                     r_idx + 1, len(realisations), len(sweep_fracs))
        aggregates = np.stack([per_real.mean(axis=1),
                               per_real.min(axis=1),
                               per_real.max(axis=1)], axis=1)

    metadata = {
        "seed": config.chain.seed,
        "n": config.chain.n,
        "realisations": config.chain.realisations,
        "burn_in_fraction": config.chain.burn_in_fraction,
        "grid_step_mw": config.grid_step,
        "grid_max_mw": config.grid_max,
        "min_count": config.min_count,
        "wind_bin_width_ms": config.wind_bin_width,
        "demand_bin_width_mw": config.demand_bin_width,
        "sweep_parameter": config.sweep.parameter,
        "costs": {"p_g": config.costs.p_g, "p_t": config.costs.p_t,
                  "c_g1": config.costs.c_g1, "c_g2": config.costs.c_g2,
                  "c_t": config.costs.c_t},
        "power_curve": {"alpha": curve.alpha, "beta": curve.beta},
        "records": len(series),
        "versions": {"windgame": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "timing_s": timing,
    }
    return ScenarioResult(sweep_parameter=config.sweep.parameter,
                          sweep_fracs=sweep_fracs,
                          per_realisation=per_real,
                          aggregates=aggregates,
                          stats=stats,
                          metadata=metadata)


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_report(result: ScenarioResult, out_dir: str | Path) -> list[Path]:
    """Write equilibria.csv, per_realisation.csv, convergence.csv and run.json.

    Float cells use shortest round-trip formatting, so identical results
    serialize to identical bytes.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("report", WindGameError(f"cannot create {out_dir}: {exc}"))

    paths = []

    path = out_dir / "equilibria.csv"
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write("sweep_value,stat,p_n1,p_n2,pi1,pi2\n")
        for s_idx, frac in enumerate(result.sweep_fracs):
            for stat_idx, stat in enumerate(STAT_ORDER):
                row = result.aggregates[s_idx, stat_idx]
                handle.write(",".join([_fmt(frac), stat] + [_fmt(v) for v in row]) + "\n")
    paths.append(path)

    path = out_dir / "per_realisation.csv"
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write("sweep_value,realisation,p_n1,p_n2,pi1,pi2\n")
        for s_idx, frac in enumerate(result.sweep_fracs):
            for r_idx in range(result.per_realisation.shape[1]):
                row = result.per_realisation[s_idx, r_idx]
                handle.write(",".join([_fmt(frac), str(r_idx)]
                                      + [_fmt(v) for v in row]) + "\n")
    paths.append(path)

    path = out_dir / "convergence.csv"
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write("variable,mean,sigma,wci95,max_err_pct,historic_mean\n")
        if result.stats is not None:
            for v in result.stats.rows():
                handle.write(",".join([v.name, _fmt(v.mean), _fmt(v.sigma), _fmt(v.wci),
                                       _fmt(v.max_err_pct), _fmt(v.historic_mean)]) + "\n")
    paths.append(path)

    path = out_dir / "run.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(result.metadata, handle, indent=2, sort_keys=True)
        handle.write("\n")
    paths.append(path)

    return paths
