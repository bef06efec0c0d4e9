"""CSV loading, demand normalization, and timestamp alignment."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from windgame import IngestError, TimeSeries, align_series, load_series_csv, normalize_demand

COLMAP = {"timestamp": "timestamp", "value": "wind_speed_ms"}


def write(tmp_path, text, name="series.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def hourly(n, start="2015-01-01T00:00:00"):
    return (np.datetime64(start, "s") + np.arange(n) * np.timedelta64(3600, "s"))


class TestLoadSeriesCsv:
    def test_well_formed_three_rows_sorted(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\n"
                               "2015-01-01T02:00:00,7.5\n"
                               "2015-01-01T00:00:00,5.0\n"
                               "2015-01-01T01:00:00,6.0\n")
        series, report = load_series_csv(path, COLMAP)
        assert len(series) == 3
        assert list(series.values) == [5.0, 6.0, 7.5]
        assert np.all(np.diff(series.timestamps) > np.timedelta64(0, "s"))
        assert report.rows_kept == 3 and report.dropped_total == 0

    def test_blank_cell_dropped_and_reported(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\n"
                               "2015-01-01T00:00:00,5.0\n"
                               "2015-01-01T01:00:00,\n"
                               "2015-01-01T02:00:00,6.0\n")
        series, report = load_series_csv(path, COLMAP)
        assert len(series) == 2
        assert report.dropped_missing == 1
        assert "1 missing" in report.summary()

    def test_duplicate_timestamp_keeps_first(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\n"
                               "2015-01-01T00:00:00,5.0\n"
                               "2015-01-01T01:00:00,6.0\n"
                               "2015-01-01T01:00:00,9.9\n")
        series, report = load_series_csv(path, COLMAP)
        assert len(series) == 2
        assert series.values[1] == 6.0  # first occurrence wins
        assert report.dropped_duplicate == 1

    def test_unparseable_rows_dropped(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\n"
                               "not-a-date,5.0\n"
                               "2015-01-01T01:00:00,not-a-number\n"
                               "2015-01-01T02:00:00,6.0\n")
        series, report = load_series_csv(path, COLMAP)
        assert len(series) == 1
        assert report.dropped_unparseable == 2

    def test_negative_sentinel_dropped_as_invalid(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\n"
                               "2015-01-01T00:00:00,-999.0\n"
                               "2015-01-01T01:00:00,6.0\n")
        series, report = load_series_csv(path, COLMAP)
        assert len(series) == 1
        assert report.dropped_invalid == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError, match="file not found"):
            load_series_csv(tmp_path / "absent.csv", COLMAP)

    def test_missing_column(self, tmp_path):
        path = write(tmp_path, "timestamp,other\n2015-01-01T00:00:00,5.0\n")
        with pytest.raises(IngestError, match="wind_speed_ms"):
            load_series_csv(path, COLMAP)

    def test_zero_valid_rows(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\nbad,bad\n")
        with pytest.raises(IngestError, match="no valid rows"):
            load_series_csv(path, COLMAP)

    def test_sub_hourly_rejected(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\n"
                               "2015-01-01T00:00:00,5.0\n"
                               "2015-01-01T00:30:00,5.5\n")
        with pytest.raises(IngestError, match="sub-hourly"):
            load_series_csv(path, COLMAP)

    def test_incomplete_column_map_rejected(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\n2015-01-01T00:00:00,5.0\n")
        with pytest.raises(IngestError, match="column_map"):
            load_series_csv(path, {"timestamp": "timestamp"})

    def test_loading_deterministic(self, tmp_path):
        path = write(tmp_path, "timestamp,wind_speed_ms\n"
                               "2015-01-01T00:00:00,5.0\n"
                               "2015-01-01T01:00:00,6.25\n")
        first, _ = load_series_csv(path, COLMAP)
        second, _ = load_series_csv(path, COLMAP)
        assert np.array_equal(first.timestamps, second.timestamps)
        assert np.array_equal(first.values, second.values)


class TestNormalizeDemand:
    def test_constant_series_to_published_mean(self):
        series = TimeSeries(hourly(3), np.array([50.0, 50.0, 50.0]), "demand")
        out = normalize_demand(series, 108.1830)
        assert np.allclose(out.values, 108.1830, rtol=0, atol=1e-12)

    def test_target_equal_to_current_mean_is_identity(self):
        series = TimeSeries(hourly(4), np.array([10.0, 20.0, 30.0, 40.0]), "demand")
        out = normalize_demand(series, series.mean())
        assert np.allclose(out.values, series.values, rtol=1e-15)

    def test_linear_scaling(self):
        series = TimeSeries(hourly(2), np.array([10.0, 30.0]), "demand")
        out = normalize_demand(series, 40.0)
        assert list(out.values) == [20.0, 60.0]

    def test_zero_mean_rejected(self):
        series = TimeSeries(hourly(2), np.array([0.0, 0.0]), "demand")
        with pytest.raises(IngestError, match="mean"):
            normalize_demand(series, 50.0)

    def test_bad_target_rejected(self):
        series = TimeSeries(hourly(2), np.array([1.0, 2.0]), "demand")
        with pytest.raises(IngestError, match="target"):
            normalize_demand(series, 0.0)

    @given(st.lists(st.floats(min_value=0.1, max_value=1e5), min_size=1, max_size=30),
           st.floats(min_value=0.1, max_value=1e5))
    def test_idempotent_at_same_target(self, values, target):
        series = TimeSeries(hourly(len(values)), np.array(values), "demand")
        once = normalize_demand(series, target)
        twice = normalize_demand(once, target)
        assert once.mean() == pytest.approx(target, rel=1e-9)
        assert np.allclose(twice.values, once.values, rtol=1e-9)


class TestAlignSeries:
    def test_full_overlap(self):
        ts = hourly(5)
        w1 = TimeSeries(ts, np.arange(5) + 1.0, "w1")
        w2 = TimeSeries(ts, np.arange(5) + 2.0, "w2")
        demand = TimeSeries(ts, np.arange(5) + 100.0, "demand")
        joint = align_series(w1, w2, demand)
        assert len(joint) == 5

    def test_shorter_record_restricts_output(self):
        # wind archives start years before the demand record
        w1 = TimeSeries(hourly(48, "2006-01-01T00:00:00"), np.full(48, 8.0), "w1")
        w2 = TimeSeries(hourly(48, "2006-01-01T00:00:00"), np.full(48, 9.0), "w2")
        demand = TimeSeries(hourly(24, "2006-01-02T00:00:00"), np.full(24, 100.0), "demand")
        joint = align_series(w1, w2, demand)
        assert len(joint) == 24
        assert joint.timestamps[0] == np.datetime64("2006-01-02T00:00:00", "s")

    def test_disjoint_errors_with_coverage(self):
        w1 = TimeSeries(hourly(3, "2006-01-01T00:00:00"), np.full(3, 8.0), "w1")
        w2 = TimeSeries(hourly(3, "2006-01-01T00:00:00"), np.full(3, 9.0), "w2")
        demand = TimeSeries(hourly(3, "2010-01-01T00:00:00"), np.full(3, 100.0), "demand")
        with pytest.raises(IngestError, match="no common timestamps.*2006.*2010"):
            align_series(w1, w2, demand)

    def test_fields_equal_source_values_exactly(self):
        ts = hourly(10)
        rng = np.random.default_rng(3)
        w1 = TimeSeries(ts, rng.uniform(0, 20, 10), "w1")
        w2 = TimeSeries(ts[2:8], rng.uniform(0, 20, 6), "w2")
        demand = TimeSeries(ts[4:], rng.uniform(50, 150, 6), "demand")
        joint = align_series(w1, w2, demand)
        assert len(joint) == 4  # hours 4..7
        assert len(joint) <= min(len(w1), len(w2), len(demand))
        for k, stamp in enumerate(joint.timestamps):
            assert joint.w1[k] == w1.values[list(w1.timestamps).index(stamp)]
            assert joint.w2[k] == w2.values[list(w2.timestamps).index(stamp)]
            assert joint.p_d[k] == demand.values[list(demand.timestamps).index(stamp)]


class TestTimeSeriesInvariants:
    def test_rejects_unsorted(self):
        ts = hourly(3)[::-1].copy()
        with pytest.raises(IngestError, match="strictly increasing"):
            TimeSeries(ts, np.ones(3), "x")

    def test_rejects_negative_values(self):
        with pytest.raises(IngestError, match="nonnegative"):
            TimeSeries(hourly(2), np.array([1.0, -0.5]), "x")

    def test_rejects_nonfinite(self):
        with pytest.raises(IngestError, match="finite"):
            TimeSeries(hourly(2), np.array([1.0, np.nan]), "x")
