import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from simobs.errors import AlignmentError, FormatError, ParameterError
from simobs.timeseries import (
    ByteSeries,
    NormalizedSeries,
    TimedEvent,
    align,
    bin_events,
    min_max_normalize,
    read_series_csv,
    write_series_csv,
)


def make_series(values, start=0.0, step=1.0):
    return ByteSeries(start, step, np.array(values, dtype=np.int64))


class TestBinEvents:
    def test_direct_bucket_sums(self):
        events = [TimedEvent(0.1, 100), TimedEvent(0.9, 50), TimedEvent(1.5, 200)]
        series = bin_events(events, 0.0, 1.0, 2)
        assert series.values.tolist() == [150, 200]

    def test_empty_events(self):
        series = bin_events([], 0.0, 1.0, 3)
        assert series.values.tolist() == [0, 0, 0]

    def test_uniform_events_conserved(self):
        rng = np.random.default_rng(7)
        events = [TimedEvent(float(t), 1) for t in rng.uniform(0, 60, 1000)]
        series = bin_events(events, 0.0, 1.0, 60)
        assert int(series.values.sum()) == 1000

    def test_out_of_window_dropped(self):
        events = [TimedEvent(-0.5, 10), TimedEvent(5.0, 20), TimedEvent(2.0, 7)]
        series = bin_events(events, 0.0, 1.0, 5)
        assert int(series.values.sum()) == 7

    def test_right_edge_goes_to_next_bin(self):
        series = bin_events([TimedEvent(1.0, 5)], 0.0, 1.0, 3)
        assert series.values.tolist() == [0, 5, 0]

    def test_bad_parameters(self):
        with pytest.raises(ParameterError):
            bin_events([], 0.0, 0.0, 3)
        with pytest.raises(ParameterError):
            bin_events([], 0.0, 1.0, 0)

    @given(
        st.lists(
            st.tuples(st.floats(-10, 70), st.integers(0, 10_000)),
            max_size=200,
        )
    )
    def test_conservation_property(self, raw):
        events = [TimedEvent(t, b) for t, b in raw]
        series = bin_events(events, 0.0, 1.0, 60)
        in_window = sum(b for t, b in raw if 0 <= np.floor(t) < 60)
        assert int(series.values.sum()) == in_window


class TestNormalize:
    def test_linear_scaling(self):
        out = min_max_normalize(make_series([0, 5, 10]))
        assert out.values.tolist() == [0.0, 0.5, 1.0]
        assert not out.degenerate

    def test_constant_series(self):
        out = min_max_normalize(make_series([7, 7, 7]))
        assert out.values.tolist() == [0.0, 0.0, 0.0]
        assert out.degenerate

    def test_interior_extremes(self):
        out = min_max_normalize(make_series([3, 1, 2]))
        assert out.values.tolist() == [1.0, 0.0, 0.5]

    @given(st.lists(st.integers(0, 10**9), min_size=2, max_size=80))
    def test_idempotent_on_non_degenerate(self, values):
        first = min_max_normalize(make_series(values))
        again = min_max_normalize(first.values)
        if first.degenerate:
            assert again.values.tolist() == first.values.tolist()
        else:
            assert np.allclose(again.values, first.values, atol=1e-12)

    @given(
        st.lists(st.integers(0, 10**6), min_size=2, max_size=60),
        st.integers(1, 50),
        st.integers(0, 10**6),
    )
    def test_scale_shift_invariant(self, values, alpha, beta):
        base = min_max_normalize(make_series(values))
        mapped = min_max_normalize(make_series([alpha * v + beta for v in values]))
        assert mapped.degenerate == base.degenerate
        assert np.allclose(mapped.values, base.values, atol=1e-9)

    def test_range_validation(self):
        with pytest.raises(ParameterError):
            NormalizedSeries(np.array([0.5, 1.2]))


class TestAlign:
    def test_identical_windows_unchanged(self):
        a = make_series(range(60))
        b = make_series(range(60))
        out_a, out_b = align(a, b)
        assert out_a.values.tolist() == a.values.tolist()
        assert out_b.values.tolist() == b.values.tolist()

    def test_offset_overlap(self):
        a = make_series(range(60), start=0.0)
        b = make_series(range(60), start=10.0)
        out_a, out_b = align(a, b)
        assert len(out_a) == len(out_b) == 50
        assert out_a.start_time == 10.0
        assert out_a.values.tolist() == list(range(10, 60))
        assert out_b.values.tolist() == list(range(0, 50))

    def test_disjoint_windows(self):
        a = make_series(range(30), start=0.0)
        b = make_series(range(30), start=40.0)
        with pytest.raises(AlignmentError):
            align(a, b)

    def test_step_mismatch(self):
        with pytest.raises(ParameterError):
            align(make_series([1, 2], step=1.0), make_series([1, 2], step=2.0))

    def test_sub_step_skew_ignored(self):
        a = make_series(range(20), start=0.0)
        b = make_series(range(20), start=5.3)
        out_a, out_b = align(a, b)
        assert len(out_a) == 15
        assert out_a.values.tolist() == list(range(5, 20))

    @given(
        st.integers(0, 50),
        st.integers(0, 50),
        st.integers(1, 40),
        st.integers(1, 40),
    )
    def test_commutative_window(self, start_a, start_b, len_a, len_b):
        a = make_series(range(len_a), start=float(start_a))
        b = make_series(range(len_b), start=float(start_b))
        try:
            out_a, out_b = align(a, b)
        except AlignmentError:
            with pytest.raises(AlignmentError):
                align(b, a)
            return
        swapped_b, swapped_a = align(b, a)
        assert out_a.values.tolist() == swapped_a.values.tolist()
        assert out_b.values.tolist() == swapped_b.values.tolist()
        assert out_a.start_time == swapped_a.start_time
        assert len(out_a) == len(out_b) >= 1


class TestSeriesValidation:
    def test_negative_values_rejected(self):
        with pytest.raises(ParameterError):
            make_series([1, -2, 3])

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            make_series([])

    def test_values_frozen(self):
        series = make_series([1, 2, 3])
        with pytest.raises(ValueError):
            series.values[0] = 9


class TestCsvRoundTrip:
    def test_round_trip_exact(self):
        series = make_series([0, 12345678901, 17], start=1700000000.25, step=1.0)
        buf = io.StringIO()
        write_series_csv(series, buf)
        back = read_series_csv(io.StringIO(buf.getvalue()))
        assert back.start_time == series.start_time
        assert back.step == series.step
        assert back.values.tolist() == series.values.tolist()

    def test_layout(self):
        buf = io.StringIO()
        write_series_csv(make_series([5, 6]), buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "start_time,step"
        assert lines[2] == "index,bytes"
        assert lines[3] == "0,5"
        assert lines[4] == "1,6"

    def test_reject_garbage(self):
        with pytest.raises(FormatError):
            read_series_csv(io.StringIO("not,a\nseries,file\n"))
