"""ISO base-media (MP4) sample-table parsing for the reference recording.

Only what the byte-rate feature needs is read: per-track sample sizes
(stsz), decode deltas (stts), timescale (mdhd) and handler (hdlr).
Chunk offsets, codecs and presentation offsets are irrelevant here.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Sequence

import numpy as np

from .errors import NoVideoTrackError, ParameterError, StructureError, TruncationError
from .timeseries import ByteSeries

VIDEO_HANDLER = "vide"

# Parser sanity bound: refuse sample tables larger than any plausible
# recording before allocating for them (fuzzed counts are 32-bit).
MAX_SAMPLES = 50_000_000


@dataclass(frozen=True)
class TrackSampleTable:
    """Sample sizes and decode deltas of one track."""

    timescale: int
    sample_sizes: tuple[int, ...]
    sample_deltas: tuple[tuple[int, int], ...]  # (count, delta_ticks) runs
    handler: str

    def __post_init__(self):
        if self.timescale <= 0:
            raise StructureError("track timescale must be > 0")
        if sum(count for count, _ in self.sample_deltas) != len(self.sample_sizes):
            raise StructureError(
                "stts delta count does not match stsz sample count "
                f"({sum(c for c, _ in self.sample_deltas)} vs {len(self.sample_sizes)})"
            )

    @property
    def sample_count(self) -> int:
        return len(self.sample_sizes)

    def decode_times(self) -> np.ndarray:
        """Per-sample decode timestamps in seconds."""
        deltas = np.concatenate(
            [np.full(count, delta, dtype=np.int64) for count, delta in self.sample_deltas]
        ) if self.sample_deltas else np.zeros(0, dtype=np.int64)
        times = np.zeros(len(deltas), dtype=np.int64)
        times[1:] = np.cumsum(deltas[:-1])
        return times / self.timescale


def _boxes(data: bytes, start: int, end: int, depth: int = 0) -> Iterator[tuple[str, int, int]]:
    """Yield (type, body_start, body_end) for each box in data[start:end]."""
    if depth > 16:
        raise StructureError("box nesting deeper than 16 levels")
    offset = start
    while offset < end:
        if offset + 8 > end:
            raise TruncationError(f"box header truncated at byte {offset}", offset=offset)
        (size,) = struct.unpack_from(">I", data, offset)
        box_type = data[offset + 4 : offset + 8].decode("latin-1")
        body_start = offset + 8
        if size == 1:
            if offset + 16 > end:
                raise TruncationError(f"64-bit box size truncated at byte {offset}", offset=offset)
            (size,) = struct.unpack_from(">Q", data, offset + 8)
            if size < 16:
                raise StructureError(f"box {box_type!r} has impossible 64-bit size {size}")
            body_start = offset + 16
        elif size == 0:
            size = end - offset  # box runs to the end of its container
        elif size < 8:
            raise StructureError(f"box {box_type!r} has impossible size {size}")
        if offset + size > end:
            raise TruncationError(
                f"box {box_type!r} of size {size} at byte {offset} overruns container", offset=offset
            )
        yield box_type, body_start, offset + size
        offset += size


def _find(data: bytes, start: int, end: int, box_type: str, depth: int) -> tuple[int, int] | None:
    for name, body_start, body_end in _boxes(data, start, end, depth):
        if name == box_type:
            return body_start, body_end
    return None


def _require(data: bytes, start: int, end: int, box_type: str, depth: int) -> tuple[int, int]:
    found = _find(data, start, end, box_type, depth)
    if found is None:
        raise StructureError(f"required box {box_type!r} not found")
    return found


def _read_u32(data: bytes, offset: int, end: int, what: str) -> int:
    if offset + 4 > end:
        raise TruncationError(f"{what} truncated at byte {offset}", offset=offset)
    return struct.unpack_from(">I", data, offset)[0]


def parse_mp4(source: BinaryIO | bytes) -> list[TrackSampleTable]:
    """Parse every track's sample table from an MP4/MOV byte stream."""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    data = bytes(data)

    moov_span = None
    for name, body_start, body_end in _boxes(data, 0, len(data)):
        if name == "moof":
            raise StructureError("fragmented MP4 (moof) is not supported")
        if name == "moov" and moov_span is None:
            moov_span = (body_start, body_end)
    if moov_span is None:
        raise StructureError("required box 'moov' not found")

    tables = []
    for name, trak_start, trak_end in _boxes(data, *moov_span, depth=1):
        if name != "trak":
            continue
        tables.append(_parse_trak(data, trak_start, trak_end))
    if not tables:
        raise StructureError("moov contains no 'trak' boxes")
    return tables


def _parse_trak(data: bytes, start: int, end: int) -> TrackSampleTable:
    mdia = _require(data, start, end, "mdia", depth=2)
    mdhd = _require(data, *mdia, "mdhd", depth=3)
    hdlr = _require(data, *mdia, "hdlr", depth=3)
    minf = _require(data, *mdia, "minf", depth=3)
    stbl = _require(data, *minf, "stbl", depth=4)
    stts = _require(data, *stbl, "stts", depth=5)
    stsz = _require(data, *stbl, "stsz", depth=5)

    timescale = _parse_mdhd(data, *mdhd)
    handler = _parse_hdlr(data, *hdlr)
    deltas = _parse_stts(data, *stts)
    total = sum(count for count, _ in deltas)
    if total > MAX_SAMPLES:
        raise StructureError(f"stts claims {total} samples, beyond the {MAX_SAMPLES} parser limit")
    sizes = _parse_stsz(data, *stsz, expected_count=total)
    return TrackSampleTable(timescale=timescale, sample_sizes=sizes, sample_deltas=deltas, handler=handler)


def _parse_mdhd(data: bytes, start: int, end: int) -> int:
    if start + 4 > end:
        raise TruncationError(f"mdhd header truncated at byte {start}", offset=start)
    version = data[start]
    # v0: 4+4 byte creation/modification times; v1: 8+8.
    ts_offset = start + 4 + (16 if version == 1 else 8)
    return _read_u32(data, ts_offset, end, "mdhd timescale")


def _parse_hdlr(data: bytes, start: int, end: int) -> str:
    if start + 12 > end:
        raise TruncationError(f"hdlr box truncated at byte {start}", offset=start)
    return data[start + 8 : start + 12].decode("latin-1")


def _parse_stts(data: bytes, start: int, end: int) -> tuple[tuple[int, int], ...]:
    entry_count = _read_u32(data, start + 4, end, "stts entry count")
    needed = start + 8 + entry_count * 8
    if needed > end:
        raise TruncationError(f"stts claims {entry_count} entries but box ends early", offset=start)
    return tuple(
        struct.unpack_from(">II", data, start + 8 + i * 8) for i in range(entry_count)
    )


def _parse_stsz(data: bytes, start: int, end: int, expected_count: int) -> tuple[int, ...]:
    uniform_size = _read_u32(data, start + 4, end, "stsz sample size")
    sample_count = _read_u32(data, start + 8, end, "stsz sample count")
    if uniform_size != 0:
        if sample_count != expected_count:
            raise StructureError(
                f"stsz sample count {sample_count} does not match stts total {expected_count}"
            )
        return (uniform_size,) * sample_count
    needed = start + 12 + sample_count * 4
    if needed > end:
        raise TruncationError(f"stsz claims {sample_count} entries but box ends early", offset=start)
    return tuple(
        struct.unpack_from(">I", data, start + 12 + i * 4)[0] for i in range(sample_count)
    )


def video_byte_series(tables: Sequence[TrackSampleTable], step: float = 1.0) -> ByteSeries:
    """Bytes per time step of the first video track, media-relative.

    Each sample's bytes land in the bin of its decode time; the series
    starts at media time zero and runs through the last sample's bin.
    """
    if step <= 0:
        raise ParameterError(f"step must be > 0, got {step}")
    video = next((t for t in tables if t.handler == VIDEO_HANDLER), None)
    if video is None:
        raise NoVideoTrackError("no track with handler 'vide'")
    if video.sample_count == 0:
        raise StructureError("video track has no samples")
    times = video.decode_times()
    indices = np.floor(times / step).astype(np.int64)
    n_steps = int(indices[-1]) + 1
    bins = np.zeros(n_steps, dtype=np.int64)
    np.add.at(bins, indices, np.asarray(video.sample_sizes, dtype=np.int64))
    return ByteSeries(start_time=0.0, step=step, values=bins)
