"""Power curve, curtailment sharing, and energy-tensor aggregation."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windgame import (ChainConfig, FitError, PowerCurve, StrategyGrid,
                      WindGameError, build_energy_tables, curtailment_timestep,
                      default_power_curve, fit_sigmoid, load_curve_points,
                      per_unit_output, per_unit_series, run_chain)
from windgame.sim import PerUnitSeries


def brute_force_energy_tables(x1, x2, p_d, grid_values, dt=1.0):
    """Literal per-timestep loop; the canonical summation order."""
    k = len(grid_values)
    n = len(x1)
    e_g1 = np.zeros(k)
    e_g2 = np.zeros(k)
    e_c1 = np.zeros((k, k))
    e_c2 = np.zeros((k, k))
    for a in range(k):
        acc1 = 0.0
        acc2 = 0.0
        for t in range(n):
            acc1 += (x1[t] * grid_values[a]) * dt
            acc2 += (x2[t] * grid_values[a]) * dt
        e_g1[a] = acc1
        e_g2[a] = acc2
    for a in range(k):
        for b in range(k):
            c1 = 0.0
            c2 = 0.0
            for t in range(n):
                g1 = x1[t] * grid_values[a]
                g2 = x2[t] * grid_values[b]
                total = g1 + g2
                surplus = total - p_d[t]
                if surplus < 0.0:
                    surplus = 0.0
                if total > 0.0:
                    pc1 = surplus * (g1 / total)
                    pc2 = surplus - pc1
                else:
                    pc1 = 0.0
                    pc2 = 0.0
                c1 += pc1 * dt
                c2 += pc2 * dt
            e_c1[a, b] = c1
            e_c2[a, b] = c2
    return e_g1, e_g2, e_c1, e_c2


def random_per_unit(n, seed=0):
    rng = np.random.default_rng(seed)
    return PerUnitSeries(x1=rng.uniform(0.0, 1.0, n),
                         x2=rng.uniform(0.0, 1.0, n),
                         p_d=rng.uniform(40.0, 160.0, n))


class TestPerUnitOutput:
    def test_midpoint_is_half(self):
        curve = PowerCurve(alpha=0.8, beta=9.0)
        assert per_unit_output(9.0, curve) == pytest.approx(0.5, abs=1e-12)

    def test_closed_form_point(self):
        curve = PowerCurve(alpha=0.8, beta=9.0)
        w = 9.0 + 10.0 / 0.8
        assert per_unit_output(w, curve) == pytest.approx(1.0 / (1.0 + math.exp(-10.0)), rel=1e-12)

    def test_strictly_increasing(self):
        curve = PowerCurve(alpha=0.5, beta=10.0)
        winds = np.linspace(0.0, 30.0, 200)
        outputs = per_unit_output(winds, curve)
        assert np.all(np.diff(outputs) > 0.0)
        assert np.all((outputs > 0.0) & (outputs < 1.0))

    def test_default_curve_tracks_fixture_points(self):
        from importlib import resources
        curve = default_power_curve()
        ref = resources.files("windgame").joinpath("data/enercon_e82_power_curve.csv")
        with resources.as_file(ref) as path:
            points = load_curve_points(path)
        sse = sum((per_unit_output(w, curve) - y) ** 2 for w, y in points)
        assert sse == pytest.approx(curve.fit_residual, rel=1e-9)
        # residual is small relative to the 25 fitted points
        assert curve.fit_residual < 0.01


class TestFitSigmoid:
    def test_round_trip_exact_points(self):
        truth = PowerCurve(alpha=0.8, beta=9.0)
        points = [(w, float(per_unit_output(w, truth))) for w in np.linspace(1.0, 20.0, 15)]
        fitted = fit_sigmoid(points)
        assert fitted.alpha == pytest.approx(0.8, abs=1e-3)
        assert fitted.beta == pytest.approx(9.0, abs=1e-3)
        assert fitted.fit_residual < 1e-8

    def test_step_data_puts_midpoint_near_step(self):
        points = [(float(w), 0.0 if w < 9 else 1.0) for w in range(19)]
        fitted = fit_sigmoid(points)
        # brute-force oracle over a coarse parameter grid
        best = None
        winds = np.array([p[0] for p in points])
        outs = np.array([p[1] for p in points])
        for alpha in np.linspace(0.1, 5.0, 60):
            for beta in np.linspace(1.0, 18.0, 120):
                pred = 1.0 / (1.0 + np.exp(-alpha * (winds - beta)))
                sse = float(((pred - outs) ** 2).sum())
                if best is None or sse < best[0]:
                    best = (sse, alpha, beta)
        assert fitted.fit_residual <= best[0] + 1e-9
        assert abs(fitted.beta - 9.0) <= 1.0

    def test_symmetric_noise_recovers_midpoint(self):
        truth = PowerCurve(alpha=0.9, beta=8.0)
        rng = np.random.default_rng(123)
        recovered = []
        for _ in range(10):
            winds = np.linspace(1.0, 18.0, 18)
            noise = rng.uniform(-0.01, 0.01, len(winds))
            outputs = np.clip(per_unit_output(winds, truth) + noise, 0.0, 1.0)
            fitted = fit_sigmoid(list(zip(winds, outputs)))
            recovered.append(fitted.beta)
        assert all(abs(b - 8.0) <= 0.2 for b in recovered)

    def test_degenerate_points_rejected(self):
        with pytest.raises(FitError, match="constant"):
            fit_sigmoid([(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)])
        with pytest.raises(FitError, match="at least 3"):
            fit_sigmoid([(1.0, 0.1), (2.0, 0.9)])
        with pytest.raises(FitError, match=r"\[0, 1\]"):
            fit_sigmoid([(1.0, 0.1), (2.0, 0.5), (3.0, 1.5)])


class TestCurtailmentTimestep:
    def test_no_curtailment_when_demand_covers(self):
        assert curtailment_timestep(10.0, 10.0, 30.0) == (0.0, 0.0)

    def test_proportional_split(self):
        assert curtailment_timestep(60.0, 40.0, 80.0) == (12.0, 8.0)

    def test_zero_generation(self):
        assert curtailment_timestep(0.0, 0.0, 50.0) == (0.0, 0.0)

    @staticmethod
    def _power(value: float) -> float:
        # keep magnitudes physical; sub-nanowatt outputs only probe IEEE edges
        return 0.0 if value < 1e-9 else value

    @settings(max_examples=300)
    @given(st.floats(min_value=0.0, max_value=1e6),
           st.floats(min_value=0.0, max_value=1e6),
           st.floats(min_value=0.0, max_value=1e6))
    def test_share_properties(self, g1, g2, pd):
        g1, g2, pd = self._power(g1), self._power(g2), self._power(pd)
        c1, c2 = curtailment_timestep(g1, g2, pd)
        total = max(0.0, g1 + g2 - pd)
        assert c1 + c2 == pytest.approx(total, rel=1e-15, abs=0.0)
        # the exact-sum construction can overshoot a bound by an ulp of the surplus
        slack = 2.0 * np.spacing(max(total, 1.0e-12))
        assert 0.0 <= c1 <= g1 + slack
        assert 0.0 <= c2 <= g2 + slack
        if g1 > 0.0 and g2 > 0.0 and total > 0.0:
            # equal curtailed fraction for both players, cross-multiplied to
            # avoid dividing by a vanishing output
            assert abs(c1 * g2 - c2 * g1) <= 8.0 * np.spacing(total) * max(g1, g2)


class TestStrategyGrid:
    def test_values_span_zero_to_max(self):
        grid = StrategyGrid(step=0.5, p_n_max=500.5)
        assert len(grid) == 1002
        assert grid.values[0] == 0.0
        assert grid.values[-1] == 500.5

    def test_non_integral_max_rejected(self):
        with pytest.raises(WindGameError, match="multiple"):
            StrategyGrid(step=0.4, p_n_max=1.0)


class TestBuildEnergyTables:
    def test_zero_capacity_grid_all_zero(self):
        series = random_per_unit(50)
        grid = StrategyGrid(step=1.0, p_n_max=1.0)
        tables = build_energy_tables(series, default_power_curve(), grid)
        assert tables.e_g1[0] == 0.0 and tables.e_g2[0] == 0.0
        assert np.all(tables.e_c1[0, 0] == 0.0)

    def test_small_case_matches_brute_force_exactly(self):
        series = random_per_unit(5, seed=1)
        grid = StrategyGrid(step=50.0, p_n_max=100.0)
        tables = build_energy_tables(series, default_power_curve(), grid)
        e_g1, e_g2, e_c1, e_c2 = brute_force_energy_tables(
            series.x1, series.x2, series.p_d, grid.values)
        assert np.array_equal(tables.e_g1, e_g1)
        assert np.array_equal(tables.e_g2, e_g2)
        assert np.array_equal(tables.e_c1, e_c1)
        assert np.array_equal(tables.e_c2, e_c2)

    def test_generation_linear_in_capacity(self):
        series = random_per_unit(64, seed=2)
        grid = StrategyGrid(step=10.0, p_n_max=100.0)
        tables = build_energy_tables(series, default_power_curve(), grid)
        # grid[2k] = 2 * grid[k]; scaling by two is exact in floats
        assert tables.e_g1[4] == 2.0 * tables.e_g1[2]
        assert tables.e_g2[10] == 2.0 * tables.e_g2[5]

    def test_boundary_rows_are_zero(self):
        series = random_per_unit(40, seed=3)
        grid = StrategyGrid(step=20.0, p_n_max=100.0)
        tables = build_energy_tables(series, default_power_curve(), grid)
        assert np.all(tables.e_c1[0, :] == 0.0)
        assert np.all(tables.e_c2[:, 0] == 0.0)

    def test_monotone_in_both_capacities(self):
        series = random_per_unit(128, seed=4)
        grid = StrategyGrid(step=10.0, p_n_max=100.0)
        tables = build_energy_tables(series, default_power_curve(), grid)
        assert np.all(np.diff(tables.e_c1, axis=0) >= 0.0)
        assert np.all(np.diff(tables.e_c1, axis=1) >= 0.0)
        assert np.all(np.diff(tables.e_c2, axis=0) >= 0.0)
        assert np.all(np.diff(tables.e_c2, axis=1) >= 0.0)

    def test_energy_conservation_per_cell(self):
        series = random_per_unit(100, seed=5)
        grid = StrategyGrid(step=25.0, p_n_max=100.0)
        tables = build_energy_tables(series, default_power_curve(), grid)
        for a in range(len(grid)):
            for b in range(len(grid)):
                delivered = (tables.e_g1[a] - tables.e_c1[a, b]
                             + tables.e_g2[b] - tables.e_c2[a, b])
                absorbed = sum(min(series.x1[t] * grid.values[a]
                                   + series.x2[t] * grid.values[b], series.p_d[t])
                               for t in range(len(series)))
                assert delivered == pytest.approx(absorbed, rel=1e-12)

    def test_curtailment_bounded_by_generation(self):
        series = random_per_unit(80, seed=6)
        grid = StrategyGrid(step=10.0, p_n_max=100.0)
        tables = build_energy_tables(series, default_power_curve(), grid)
        total_c = tables.e_c1 + tables.e_c2
        total_g = tables.e_g1[:, None] + tables.e_g2[None, :]
        assert np.all(total_c <= total_g + 1e-9)

    def test_accepts_realisation_input(self, synthetic_tables):
        real = run_chain(ChainConfig(n=100, realisations=1, seed=3), synthetic_tables, 0)
        grid = StrategyGrid(step=50.0, p_n_max=100.0)
        curve = default_power_curve()
        from_real = build_energy_tables(real, curve, grid)
        from_series = build_energy_tables(per_unit_series(real, curve), curve, grid)
        assert np.array_equal(from_real.e_c1, from_series.e_c1)

    def test_empty_realisation_rejected(self):
        with pytest.raises(WindGameError, match="empty"):
            build_energy_tables(PerUnitSeries(x1=np.array([]), x2=np.array([]),
                                              p_d=np.array([])),
                                default_power_curve(), StrategyGrid(step=1.0, p_n_max=2.0))

    def test_dump_energy_tables_csv(self, tmp_path):
        from windgame import dump_energy_tables_csv
        series = random_per_unit(10, seed=9)
        grid = StrategyGrid(step=50.0, p_n_max=100.0)
        tables = build_energy_tables(series, default_power_curve(), grid)
        curt = tmp_path / "curtailment.csv"
        gen = tmp_path / "generation.csv"
        dump_energy_tables_csv(tables, curt, gen)
        rows = curt.read_text().strip().splitlines()
        assert rows[0] == "i,j,e_c1,e_c2"
        assert len(rows) == 1 + 9
        cell = rows[-1].split(",")
        assert float(cell[2]) == tables.e_c1[2, 2]
        gen_rows = gen.read_text().strip().splitlines()
        assert gen_rows[0] == "i,p_n,e_g1,e_g2"
        assert float(gen_rows[-1].split(",")[2]) == tables.e_g1[2]
