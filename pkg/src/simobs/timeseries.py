"""Byte-count time series: binning, min-max scaling, window alignment.

Every device trace and every reference recording is reduced to the same
shape here: a vector of byte counts over fixed wall-clock steps.  All
types are immutable values and all operations are pure functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import AlignmentError, FormatError, ParameterError

DEFAULT_STEP = 1.0
DEFAULT_WINDOW = 60


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimedEvent:
    """A timestamped byte count (one packet, one video sample, ...)."""

    timestamp: float
    byte_count: int

    def __post_init__(self):
        if self.byte_count < 0:
            raise ParameterError(f"byte_count must be >= 0, got {self.byte_count}")


@dataclass(frozen=True, eq=False)
class ByteSeries:
    """Byte counts per fixed time step over an aligned wall-clock window.

    ``values[i]`` covers ``[start_time + i*step, start_time + (i+1)*step)``.
    """

    start_time: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        if self.step <= 0:
            raise ParameterError(f"step must be > 0, got {self.step}")
        vals = np.asarray(self.values, dtype=np.int64)
        if vals.ndim != 1 or vals.size < 1:
            raise ParameterError("values must be a non-empty 1-d sequence")
        if (vals < 0).any():
            raise ParameterError("byte counts must be non-negative")
        object.__setattr__(self, "values", _frozen(vals))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ByteSeries):
            return NotImplemented
        return (
            self.start_time == other.start_time
            and self.step == other.step
            and np.array_equal(self.values, other.values)
        )

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def end_time(self) -> float:
        return self.start_time + len(self) * self.step

    def prefix(self, n_steps: int) -> "ByteSeries":
        """First ``n_steps`` steps as a new series."""
        if not 1 <= n_steps <= len(self):
            raise ParameterError(f"prefix length {n_steps} outside 1..{len(self)}")
        return ByteSeries(self.start_time, self.step, self.values[:n_steps])


@dataclass(frozen=True, eq=False)
class NormalizedSeries:
    """A series rescaled into [0, 1].

    ``degenerate`` marks a constant source, which maps to all zeros
    instead of erroring so downstream measures still get a value.
    """

    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size < 1:
            raise ParameterError("values must be a non-empty 1-d sequence")
        if (vals < 0).any() or (vals > 1).any():
            raise ParameterError("normalized values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(vals))

    def __eq__(self, other) -> bool:
        if not isinstance(other, NormalizedSeries):
            return NotImplemented
        return self.degenerate == other.degenerate and np.array_equal(self.values, other.values)

    def __len__(self) -> int:
        return int(self.values.size)


def bin_events(
    events: Iterable[TimedEvent],
    start_time: float,
    step: float,
    n_steps: int,
) -> ByteSeries:
    """Sum event byte counts into ``n_steps`` half-open bins.

    Events outside ``[start_time, start_time + n_steps*step)`` are dropped;
    input order does not matter.
    """
    if step <= 0:
        raise ParameterError(f"step must be > 0, got {step}")
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    bins = np.zeros(n_steps, dtype=np.int64)
    for ev in events:
        idx = math.floor((ev.timestamp - start_time) / step)
        if 0 <= idx < n_steps:
            bins[idx] += ev.byte_count
    return ByteSeries(start_time, step, bins)


def min_max_normalize(series: ByteSeries | Sequence[float] | np.ndarray) -> NormalizedSeries:
    """Rescale a series into [0, 1]; constant input becomes all zeros."""
    vals = np.asarray(series.values if isinstance(series, ByteSeries) else series, dtype=np.float64)
    if vals.ndim != 1 or vals.size < 1:
        raise ParameterError("series must be a non-empty 1-d sequence")
    lo = vals.min()
    hi = vals.max()
    if hi == lo:
        return NormalizedSeries(np.zeros_like(vals), degenerate=True)
    return NormalizedSeries((vals - lo) / (hi - lo), degenerate=False)


def align(a: ByteSeries, b: ByteSeries) -> tuple[ByteSeries, ByteSeries]:
    """Truncate both series to their overlapping window, in whole steps.

    The later series' step grid wins; sub-step skew between the two grids
    is ignored (irrelevant at the 1 s steps this pipeline runs on).
    """
    if a.step != b.step:
        raise ParameterError(f"step mismatch: {a.step} vs {b.step}")
    step = a.step
    a_is_later = a.start_time >= b.start_time
    later, earlier = (a, b) if a_is_later else (b, a)
    skip = round((later.start_time - earlier.start_time) / step)
    if skip >= len(earlier):
        raise AlignmentError(
            f"no overlap: [{earlier.start_time}, {earlier.end_time}) ends before "
            f"[{later.start_time}, {later.end_time}) begins"
        )
    n = min(len(later), len(earlier) - skip)
    later_out = ByteSeries(later.start_time, step, later.values[:n])
    earlier_out = ByteSeries(earlier.start_time + skip * step, step, earlier.values[skip : skip + n])
    return (later_out, earlier_out) if a_is_later else (earlier_out, later_out)


# ---------------------------------------------------------------------------
# CSV round trip: two preamble lines (start_time,step header + values), then
# one index,bytes row per step with exact integer bytes.
# ---------------------------------------------------------------------------

def write_series_csv(series: ByteSeries, out: TextIO) -> None:
    out.write("start_time,step\n")
    out.write(f"{series.start_time!r},{series.step!r}\n")
    out.write("index,bytes\n")
    for i, v in enumerate(series.values):
        out.write(f"{i},{int(v)}\n")


def read_series_csv(inp: TextIO) -> ByteSeries:
    lines = [ln.strip() for ln in inp if ln.strip()]
    if len(lines) < 4 or lines[0] != "start_time,step" or lines[2] != "index,bytes":
        raise FormatError("not a byte-series CSV (expected start_time,step / index,bytes headers)")
    try:
        start_s, step_s = lines[1].split(",")
        start_time, step = float(start_s), float(step_s)
        values = []
        for ln in lines[3:]:
            idx_s, bytes_s = ln.split(",")
            if int(idx_s) != len(values):
                raise FormatError(f"non-contiguous index {idx_s} in byte-series CSV")
            values.append(int(bytes_s))
    except ValueError as exc:
        raise FormatError(f"malformed byte-series CSV row: {exc}") from exc
    return ByteSeries(start_time, step, np.array(values, dtype=np.int64))
