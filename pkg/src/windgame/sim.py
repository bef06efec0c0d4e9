"""Wind-to-power conversion and generation/curtailment aggregation.

Wind speed maps to per-unit output through a sigmoid power curve; a
realisation then yields, for every capacity pair on the strategy grid, the
total energy each player generates and the share each loses to curtailment
under proportional ("common access") sharing.

All tensor entries are accumulated in timestep order with plain double
adds, so they are bit-for-bit reproducible by a literal per-timestep loop:
e_g[k]   += (x[t] * grid[k]) * dt
e_c[i,j] += pc_i(x1[t] * grid[i], x2[t] * grid[j], p_d[t]) * dt
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import FitError, WindGameError
from .gibbs import Realisation

log = logging.getLogger("windgame")

_E82_FIXTURE = "enercon_e82_power_curve.csv"


@dataclass(frozen=True)
class PowerCurve:
    """Sigmoid power curve: per-unit output = 1 / (1 + exp(-alpha (w - beta)))."""

    alpha: float
    beta: float
    fit_residual: float | None = None

    def __post_init__(self):
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise WindGameError(
                f"power curve parameters must be positive, got "
                f"alpha={self.alpha}, beta={self.beta}")


@dataclass(frozen=True)
class StrategyGrid:
    """Discrete capacity choices 0, step, 2*step, ..., p_n_max (MW)."""

    step: float
    p_n_max: float
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.step <= 0.0:
            raise WindGameError(f"grid step must be positive, got {self.step}")
        if self.p_n_max < 0.0:
            raise WindGameError(f"p_n_max must be nonnegative, got {self.p_n_max}")
        n = round(self.p_n_max / self.step)
        if abs(n * self.step - self.p_n_max) > 1e-9 * max(1.0, self.p_n_max):
            raise WindGameError(
                f"p_n_max {self.p_n_max} is not an integer multiple of step {self.step}")
        object.__setattr__(self, "values", np.arange(n + 1, dtype=np.float64) * self.step)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class PerUnitSeries:
    """Per-unit outputs of both players plus demand, per retained sample."""

    x1: np.ndarray
    x2: np.ndarray
    p_d: np.ndarray

    def __post_init__(self):
        if not (len(self.x1) == len(self.x2) == len(self.p_d)):
            raise WindGameError("per-unit series must have equal lengths")
        for name in ("x1", "x2"):
            arr = getattr(self, name)
            if np.any(arr < 0.0) or np.any(arr > 1.0):
                raise WindGameError(f"{name} must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.p_d)


@dataclass(frozen=True)
class EnergyTables:
    """Aggregate generation (1-D) and curtailment (2-D) over the grid, MWh.

    e_g1[i] is player 1's total generation at capacity grid[i]; e_c1[i, j]
    the energy player 1 loses to curtailment when the capacity pair is
    (grid[i], grid[j]). Generation is linear in own capacity; curtailment
    couples both players.
    """

    e_g1: np.ndarray
    e_g2: np.ndarray
    e_c1: np.ndarray
    e_c2: np.ndarray
    grid: StrategyGrid
    timestep_hours: float = 1.0


def per_unit_output(w, curve: PowerCurve):
    """Per-unit power at wind speed ``w`` (scalar or array), in (0, 1)."""
    return 1.0 / (1.0 + np.exp(-curve.alpha * (np.asarray(w, dtype=np.float64) - curve.beta)))


def fit_sigmoid(points: list[tuple[float, float]],
                alpha_range: tuple[float, float] = (0.02, 5.0),
                beta_range: tuple[float, float] | None = None,
                rounds: int = 10, resolution: int = 25) -> PowerCurve:
    """Least-squares sigmoid fit by iteratively refined grid search.

    ``points`` are (wind m/s, per-unit output) pairs with outputs in [0, 1].
    Each round evaluates the residual on a resolution x resolution grid and
    shrinks the search window around the best cell. The summed squared
    residual of the winning parameters is stored on the returned curve.
    """
    if len(points) < 3:
        raise FitError(f"need at least 3 points to fit, got {len(points)}")
    winds = np.array([p[0] for p in points], dtype=np.float64)
    outputs = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(outputs < 0.0) or np.any(outputs > 1.0):
        raise FitError("per-unit outputs must lie in [0, 1]")
    if np.ptp(outputs) == 0.0:
        raise FitError("outputs are constant; sigmoid parameters are unidentifiable")

    if beta_range is None:
        span = max(float(np.ptp(winds)), 1.0)
        beta_range = (max(1e-6, float(winds.min()) - 0.5 * span),
                      float(winds.max()) + 0.5 * span)

    a_lo, a_hi = alpha_range
    b_lo, b_hi = beta_range
    best_a = best_b = best_sse = None
    for _ in range(rounds):
        alphas = np.linspace(a_lo, a_hi, resolution)
        betas = np.linspace(b_lo, b_hi, resolution)
        pred = 1.0 / (1.0 + np.exp(-alphas[:, None, None]
                                   * (winds[None, None, :] - betas[None, :, None])))
        sse = ((pred - outputs[None, None, :]) ** 2).sum(axis=2)
        ia, ib = np.unravel_index(int(np.argmin(sse)), sse.shape)
        best_a, best_b, best_sse = float(alphas[ia]), float(betas[ib]), float(sse[ia, ib])
        a_step = (a_hi - a_lo) / (resolution - 1)
        b_step = (b_hi - b_lo) / (resolution - 1)
        a_lo, a_hi = max(alpha_range[0], best_a - a_step), best_a + a_step
        b_lo, b_hi = max(1e-6, best_b - b_step), best_b + b_step
    return PowerCurve(alpha=best_a, beta=best_b, fit_residual=best_sse)


def load_curve_points(path: str | Path) -> list[tuple[float, float]]:
    """Read (wind_ms, output_pu) pairs from a headed CSV."""
    path = Path(path)
    if not path.is_file():
        raise FitError(f"power-curve file not found: {path}")
    points = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"wind_ms", "output_pu"} <= set(reader.fieldnames):
            raise FitError(f"{path} must have columns wind_ms, output_pu; "
                           f"found {reader.fieldnames}")
        for row in reader:
            points.append((float(row["wind_ms"]), float(row["output_pu"])))
    if not points:
        raise FitError(f"{path} contains no data rows")
    return points


_DEFAULT_CURVE: PowerCurve | None = None


def default_power_curve() -> PowerCurve:
    """Curve fitted to the bundled 2.05 MW turbine manufacturer data."""
    global _DEFAULT_CURVE
    if _DEFAULT_CURVE is None:
        ref = resources.files("windgame").joinpath("data").joinpath(_E82_FIXTURE)
        with resources.as_file(ref) as path:
            _DEFAULT_CURVE = fit_sigmoid(load_curve_points(path))
    return _DEFAULT_CURVE


def dump_energy_tables_csv(tables: EnergyTables, curtailment_path: str | Path,
                           generation_path: str | Path) -> None:
    """Write curtailment cells as (i, j, e_c1, e_c2) and generation as 1-D rows."""
    cells = len(tables.grid) ** 2
    if cells > 10**6:
        log.warning("dumping %d curtailment cells; expect a large file", cells)
    with open(curtailment_path, "w", newline="", encoding="utf-8") as handle:
        handle.write("i,j,e_c1,e_c2\n")
        for i in range(len(tables.grid)):
            for j in range(len(tables.grid)):
                handle.write(f"{i},{j},{float(tables.e_c1[i, j])!r},"
                             f"{float(tables.e_c2[i, j])!r}\n")
    with open(generation_path, "w", newline="", encoding="utf-8") as handle:
        handle.write("i,p_n,e_g1,e_g2\n")
        for i, capacity in enumerate(tables.grid.values):
            handle.write(f"{i},{float(capacity)!r},{float(tables.e_g1[i])!r},"
                         f"{float(tables.e_g2[i])!r}\n")


def curtailment_timestep(p_g1: float, p_g2: float, p_d: float) -> tuple[float, float]:
    """Curtailed power of each player at one instant, shared in proportion
    to output.

    Total curtailment is the generation surplus over demand, floored at
    zero; the two shares sum to that total exactly and each is bounded by
    the player's own output.
    """
    total_gen = p_g1 + p_g2
    surplus = total_gen - p_d
    if surplus < 0.0 or total_gen <= 0.0:
        return (0.0, 0.0)
    p_c1 = surplus * (p_g1 / total_gen)
    return (p_c1, surplus - p_c1)


def per_unit_series(realisation: Realisation, curve: PowerCurve) -> PerUnitSeries:
    """Map a realisation's winds through the power curve."""
    return PerUnitSeries(x1=per_unit_output(realisation.w1, curve),
                         x2=per_unit_output(realisation.w2, curve),
                         p_d=np.asarray(realisation.p_d, dtype=np.float64))


def build_energy_tables(realisation: Realisation | PerUnitSeries, curve: PowerCurve,
                        grid: StrategyGrid, timestep_hours: float = 1.0) -> EnergyTables:
    """Accumulate generation and curtailment over all timesteps and capacity
    pairs.

    Matches the literal loop documented in the module header: timesteps are
    accumulated in order with plain double-precision adds, vectorized over
    the grid, so results are bit-identical to the scalar triple loop.
    """
    series = realisation if isinstance(realisation, PerUnitSeries) \
        else per_unit_series(realisation, curve)
    if len(series) == 0:
        raise WindGameError("realisation is empty")
    values = grid.values
    k = len(values)
    dt = timestep_hours

    e_g1 = np.zeros(k)
    e_g2 = np.zeros(k)
    e_c1 = np.zeros((k, k))
    e_c2 = np.zeros((k, k))

    x1 = series.x1
    x2 = series.x2
    p_d = series.p_d
    with np.errstate(divide="ignore", invalid="ignore"):
        for t in range(len(series)):
            g1 = x1[t] * values
            g2 = x2[t] * values
            e_g1 += g1 * dt
            e_g2 += g2 * dt
            total = g1[:, None] + g2[None, :]
            surplus = total - p_d[t]
            np.maximum(surplus, 0.0, out=surplus)
            share1 = np.where(total > 0.0, g1[:, None] / total, 0.0)
            pc1 = surplus * share1
            e_c1 += pc1 * dt
            e_c2 += (surplus - pc1) * dt
    return EnergyTables(e_g1=e_g1, e_g2=e_g2, e_c1=e_c1, e_c2=e_c2,
                        grid=grid, timestep_hours=timestep_hours)
