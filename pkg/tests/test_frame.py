import datetime as dt

import numpy as np
import pytest

from marketlab.errors import (
    AlignmentError,
    DegenerateColumnError,
    SplitError,
    WindowError,
)
from marketlab.frame import (
    AlignedFrame,
    align,
    apply_scaler,
    fit_scaler,
    invert_scaler,
    make_supervised_windows,
    split_by_date,
)

from .conftest import make_frame, make_series

D0 = dt.date(2020, 1, 1)


class TestAlign:
    def test_identical_dates_keep_everything(self):
        a = make_series("A", D0, [10, 11, 12])
        b = make_series("B", D0, [20, 21, 22])
        frame = align([a, b])
        assert len(frame) == 3
        assert frame.dates == a.dates

    def test_intersection_of_shifted_ranges(self):
        a = make_series("A", D0, [10, 11, 12])  # d1 d2 d3
        b = make_series("B", D0 + dt.timedelta(days=1), [20, 21, 22])  # d2 d3 d4
        frame = align([a, b])
        assert frame.dates == (D0 + dt.timedelta(days=1), D0 + dt.timedelta(days=2))
        assert list(frame.column("A.close")) == [11, 12]

    def test_three_series_match_brute_force_intersection(self):
        a = make_series("A", D0, range(10, 30))
        b = make_series("B", D0 + dt.timedelta(days=3), range(50, 75))
        c = make_series("C", D0 + dt.timedelta(days=5), range(80, 92))
        expected = set(a.dates) & set(b.dates) & set(c.dates)
        frame = align([a, b, c])
        assert set(frame.dates) == expected
        assert len(frame) == len(expected)

    def test_column_naming_and_order(self):
        frame = align([make_series("BP", D0, [1, 2], volume=True)])
        assert frame.column_names == ("BP.open", "BP.high", "BP.low", "BP.close", "BP.volume")

    def test_empty_intersection_errors(self):
        a = make_series("A", D0, [1, 2])
        b = make_series("B", D0 + dt.timedelta(days=10), [1, 2])
        with pytest.raises(AlignmentError, match="no common dates"):
            align([a, b])

    def test_alignment_commutative_in_dates(self):
        a = make_series("A", D0, range(10, 22))
        b = make_series("B", D0 + dt.timedelta(days=4), range(30, 45))
        assert align([a, b]).dates == align([b, a]).dates


class TestSplit:
    def test_counts(self):
        frame = make_frame(D0, {"X.close": list(range(1, 11))})
        train, test = split_by_date(
            frame,
            train_last=D0 + dt.timedelta(days=6),
            test_first=D0 + dt.timedelta(days=7),
            test_last=D0 + dt.timedelta(days=9),
        )
        assert len(train) == 7
        assert len(test) == 3
        assert set(train.dates).isdisjoint(test.dates)

    def test_reference_date_ranges(self):
        # spans the documented default windows: training up to 2020-07-19,
        # test from 2020-07-20 through 2021-07-15
        start = dt.date(2009, 8, 14)
        n = (dt.date(2021, 7, 15) - start).days + 1
        frame = make_frame(start, {"X.close": [float(i + 1) for i in range(n)]})
        train, test = split_by_date(
            frame, dt.date(2020, 7, 19), dt.date(2020, 7, 20), dt.date(2021, 7, 15)
        )
        assert train.dates[0] == start
        assert train.dates[-1] == dt.date(2020, 7, 19)
        assert test.dates[0] == dt.date(2020, 7, 20)
        assert test.dates[-1] == dt.date(2021, 7, 15)

    def test_misordered_bounds_error(self):
        frame = make_frame(D0, {"X.close": [1.0, 2.0, 3.0]})
        with pytest.raises(SplitError):
            split_by_date(frame, D0 + dt.timedelta(days=2), D0, D0 + dt.timedelta(days=1))

    def test_empty_partition_error(self):
        frame = make_frame(D0, {"X.close": [1.0, 2.0, 3.0]})
        with pytest.raises(SplitError, match="no dates"):
            split_by_date(
                frame,
                D0 - dt.timedelta(days=1),
                D0,
                D0 + dt.timedelta(days=1),
            )


class TestScaler:
    def test_affine_map(self):
        frame = make_frame(D0, {"x": [2.0, 4.0, 6.0]})
        params = fit_scaler(frame)
        scaled = apply_scaler(frame, params)
        assert list(scaled.column("x")) == [0.0, 0.5, 1.0]

    def test_round_trip_error_below_1e12(self):
        rng = np.random.default_rng(3)
        values = rng.uniform(5.0, 500.0, 64)
        frame = make_frame(D0, {"x": list(values)})
        params = fit_scaler(frame)
        back = invert_scaler(apply_scaler(frame, params).column("x"), "x", params)
        rel = np.max(np.abs(back - values) / np.abs(values))
        assert rel < 1e-12

    def test_out_of_range_extrapolates_unclipped(self):
        train = make_frame(D0, {"x": [10.0, 20.0]})
        params = fit_scaler(train)
        # oracle: the affine map extended past the fitted range
        value = 25.0
        expected = (value - 10.0) / (20.0 - 10.0)
        later = make_frame(D0 + dt.timedelta(days=5), {"x": [value]})
        scaled = apply_scaler(later, params)
        assert scaled.column("x")[0] == pytest.approx(expected, abs=1e-15)
        assert scaled.column("x")[0] > 1.0

    def test_degenerate_column_flagged_then_rejected(self):
        frame = make_frame(D0, {"flat": [3.0, 3.0, 3.0]})
        params = fit_scaler(frame)
        assert "flat" in params.degenerate
        with pytest.raises(DegenerateColumnError, match="flat"):
            apply_scaler(frame, params)
        with pytest.raises(DegenerateColumnError, match="flat"):
            invert_scaler(np.asarray([0.5]), "flat", params)


class TestWindows:
    def test_single_sample_shape(self):
        cols = {f"c{k}": [float(i + k) for i in range(41)] for k in range(6)}
        frame = make_frame(D0, cols)
        tensors = make_supervised_windows(frame, list(cols), "c0", lookback=40)
        assert tensors.inputs.shape == (1, 40, 6)
        assert tensors.targets.shape == (1,)

    def test_sample_indexing(self):
        frame = make_frame(D0, {"x": [float(i) for i in range(10)]})
        tensors = make_supervised_windows(frame, ["x"], "x", lookback=3)
        assert len(tensors) == 7
        assert tensors.targets[0] == 3.0  # targets date index 3
        assert list(tensors.inputs[0][:, 0]) == [0.0, 1.0, 2.0]
        assert tensors.sample_dates[0] == D0 + dt.timedelta(days=3)

    def test_ramp_targets_equal_tail_slice(self):
        values = [float(i * i % 97 + 1) for i in range(30)]
        frame = make_frame(D0, {"x": values})
        lookback = 7
        tensors = make_supervised_windows(frame, ["x"], "x", lookback)
        assert list(tensors.targets) == values[lookback:]  # direct slicing oracle

    def test_lookback_too_large(self):
        frame = make_frame(D0, {"x": [1.0, 2.0, 3.0]})
        with pytest.raises(WindowError):
            make_supervised_windows(frame, ["x"], "x", lookback=3)

    def test_inputs_cover_preceding_dates(self):
        frame = make_frame(D0, {"x": [float(i) for i in range(12)], "y": [float(2 * i) for i in range(12)]})
        tensors = make_supervised_windows(frame, ["x", "y"], "y", lookback=4)
        for i in range(len(tensors)):
            assert tensors.inputs[i, -1, 0] == float(i + 3)  # feature 0 right before target
            assert tensors.targets[i] == 2.0 * (i + 4)


class TestFrameCsv:
    def test_round_trip(self, market7):
        again = AlignedFrame.from_csv(market7.to_csv())
        assert again.dates == market7.dates
        for name in market7.column_names:
            assert np.array_equal(again.column(name), market7.column(name))
