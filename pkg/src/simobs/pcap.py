"""Classic pcap parsing and per-device byte series extraction.

Offline .pcap files only (both magics, both byte orders, link types 1
and 127).  Each frame is attributed to its transmitting device (source
MAC for Ethernet, Address 2 of 802.11 data frames behind radiotap) and
the frames of each device are binned into a ByteSeries.
"""
from __future__ import annotations

import ipaddress
import json
import struct
from dataclasses import dataclass
from enum import IntEnum
from io import BytesIO
from typing import BinaryIO, Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import (
    FormatError,
    MalformedFrameError,
    ParameterError,
    TruncationError,
    UnsupportedLinkTypeError,
)
from .timeseries import ByteSeries, TimedEvent, bin_events

MAGIC_MICROS = 0xA1B2C3D4
MAGIC_NANOS = 0xA1B23C4D
PCAPNG_MAGIC = 0x0A0D0D0A

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_IPV6 = 0x86DD


class LinkType(IntEnum):
    ETHERNET = 1
    IEEE80211_RADIOTAP = 127


@dataclass(frozen=True, order=True)
class DeviceId:
    """A transmitting device, keyed by MAC or IP address."""

    kind: str  # "mac", "ipv4" or "ipv6"
    value: str

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PacketRecord:
    """One captured frame as stored in the pcap file."""

    timestamp: float
    on_wire_len: int
    captured_len: int
    link_type: LinkType
    payload: bytes


@dataclass(frozen=True)
class DeviceStream:
    """The binned byte series of one device, with its frame count."""

    device_id: DeviceId
    series: ByteSeries
    frame_count: int


def read_pcap(source: BinaryIO | bytes) -> Iterator[PacketRecord]:
    """Yield PacketRecords from a classic pcap byte stream, in file order."""
    stream = BytesIO(source) if isinstance(source, (bytes, bytearray)) else source
    head = stream.read(GLOBAL_HEADER_LEN)
    if len(head) < 4:
        raise FormatError("not a pcap file: shorter than a magic number")
    (magic_le,) = struct.unpack("<I", head[:4])
    (magic_be,) = struct.unpack(">I", head[:4])
    if magic_le == PCAPNG_MAGIC:
        raise FormatError("pcapng input is not supported; convert to classic pcap first")
    if magic_le in (MAGIC_MICROS, MAGIC_NANOS):
        order, magic = "<", magic_le
    elif magic_be in (MAGIC_MICROS, MAGIC_NANOS):
        order, magic = ">", magic_be
    else:
        raise FormatError(f"unknown pcap magic 0x{magic_le:08x}")
    if len(head) < GLOBAL_HEADER_LEN:
        raise TruncationError("pcap global header truncated", offset=0)
    frac_divisor = 1e6 if magic == MAGIC_MICROS else 1e9
    _vmaj, _vmin, _zone, _sigfigs, _snaplen, network = struct.unpack(order + "HHiIII", head[4:])
    try:
        link_type = LinkType(network)
    except ValueError:
        raise UnsupportedLinkTypeError(network) from None

    offset = GLOBAL_HEADER_LEN
    while True:
        header = stream.read(RECORD_HEADER_LEN)
        if not header:
            return
        if len(header) < RECORD_HEADER_LEN:
            raise TruncationError(f"record header truncated at byte {offset}", offset=offset)
        ts_sec, ts_frac, incl_len, orig_len = struct.unpack(order + "IIII", header)
        if incl_len > orig_len:
            raise FormatError(
                f"record at byte {offset} claims captured length {incl_len} > on-wire length {orig_len}"
            )
        payload = stream.read(incl_len)
        if len(payload) < incl_len:
            raise TruncationError(f"record payload truncated at byte {offset}", offset=offset)
        yield PacketRecord(
            timestamp=ts_sec + ts_frac / frac_divisor,
            on_wire_len=orig_len,
            captured_len=incl_len,
            link_type=link_type,
            payload=payload,
        )
        offset += RECORD_HEADER_LEN + incl_len


def _mac_str(raw: bytes) -> str:
    return ":".join(f"{b:02x}" for b in raw)


def radiotap_header_len(record: PacketRecord) -> int:
    """Length of the radiotap pseudo-header, 0 for non-radiotap links."""
    if record.link_type is not LinkType.IEEE80211_RADIOTAP:
        return 0
    if len(record.payload) < 4:
        raise MalformedFrameError("frame too short for a radiotap header")
    (length,) = struct.unpack_from("<H", record.payload, 2)
    if length < 8 or length > len(record.payload):
        raise MalformedFrameError(f"radiotap header length {length} exceeds frame")
    return length


def transmitter_of(
    record: PacketRecord,
    group_by: str = "mac",
    include_non_data: bool = False,
) -> DeviceId | None:
    """The transmitting device of a frame, or None if unattributable.

    For radiotap captures only 802.11 data frames are attributed unless
    ``include_non_data`` is set; ACK/CTS control frames carry no
    transmitter address and always map to None.  ``group_by="ip"`` reads
    the source IP of Ethernet IPv4/IPv6 frames and skips everything else.
    """
    if group_by not in ("mac", "ip"):
        raise ParameterError(f"group_by must be 'mac' or 'ip', got {group_by!r}")
    if record.link_type is LinkType.ETHERNET:
        if group_by == "ip":
            return _ethernet_source_ip(record.payload)
        if len(record.payload) < 12:
            raise MalformedFrameError("ethernet frame shorter than its address fields")
        return DeviceId("mac", _mac_str(record.payload[6:12]))

    # Radiotap-wrapped 802.11. IP grouping is not attempted here: frame
    # bodies are typically encrypted, which is the whole point of the
    # monitor-mode path.
    if group_by == "ip":
        return None
    rt_len = radiotap_header_len(record)
    dot11 = record.payload[rt_len:]
    if len(dot11) < 2:
        raise MalformedFrameError("802.11 header shorter than frame control")
    fc0 = dot11[0]
    ftype = (fc0 >> 2) & 0b11
    subtype = fc0 >> 4
    if ftype == 1 and subtype in (12, 13):  # CTS / ACK: no Address 2
        return None
    if ftype != 2 and not include_non_data:
        return None
    if len(dot11) < 16:
        raise MalformedFrameError("802.11 frame shorter than its Address 2 field")
    return DeviceId("mac", _mac_str(dot11[10:16]))


def _ethernet_source_ip(payload: bytes) -> DeviceId | None:
    if len(payload) < 14:
        raise MalformedFrameError("ethernet frame shorter than its header")
    (ethertype,) = struct.unpack_from(">H", payload, 12)
    if ethertype == ETHERTYPE_IPV4:
        if len(payload) < 14 + 20:
            raise MalformedFrameError("IPv4 header truncated")
        return DeviceId("ipv4", str(ipaddress.IPv4Address(payload[26:30])))
    if ethertype == ETHERTYPE_IPV6:
        if len(payload) < 14 + 40:
            raise MalformedFrameError("IPv6 header truncated")
        return DeviceId("ipv6", str(ipaddress.IPv6Address(payload[22:38])))
    return None  # non-IP ethertype: skip


def extract_device_series(
    records: Iterable[PacketRecord],
    start: float,
    step: float,
    n_steps: int,
    byte_basis: str = "transmitted",
    group_by: str = "mac",
    include_non_data: bool = False,
    counters: dict | None = None,
) -> list[DeviceStream]:
    """Group frames by transmitter and bin each device's bytes.

    ``byte_basis="transmitted"`` (default) counts on-wire bytes minus the
    radiotap pseudo-header, which is capture metadata and never crossed
    the air; ``"on_wire"`` counts the stored on-wire length as is.
    Malformed frames are skipped.  Devices come back in ascending id order.

    Pass a dict as ``counters`` to receive drop accounting: frames and
    bytes that were malformed, unattributable, or outside the window.
    Binned bytes plus dropped bytes add up to the byte basis of all input
    records.
    """
    if byte_basis not in ("transmitted", "on_wire"):
        raise ParameterError(f"byte_basis must be 'transmitted' or 'on_wire', got {byte_basis!r}")
    drops = {"malformed": 0, "unattributed": 0, "out_of_window": 0, "dropped_bytes": 0}
    per_device: dict[DeviceId, list[TimedEvent]] = {}
    for record in records:
        size = record.on_wire_len
        try:
            device = transmitter_of(record, group_by=group_by, include_non_data=include_non_data)
            if byte_basis == "transmitted":
                size -= radiotap_header_len(record)
        except MalformedFrameError:
            drops["malformed"] += 1
            drops["dropped_bytes"] += size
            continue
        if device is None:
            drops["unattributed"] += 1
            drops["dropped_bytes"] += size
            continue
        per_device.setdefault(device, []).append(TimedEvent(record.timestamp, max(size, 0)))

    end = start + n_steps * step
    streams = []
    for device in sorted(per_device):
        events = per_device[device]
        in_window = [ev for ev in events if start <= ev.timestamp < end]
        out_of_window = len(events) - len(in_window)
        if out_of_window:
            drops["out_of_window"] += out_of_window
            drops["dropped_bytes"] += sum(ev.byte_count for ev in events) - sum(
                ev.byte_count for ev in in_window
            )
        if not in_window:
            continue
        series = bin_events(in_window, start, step, n_steps)
        streams.append(DeviceStream(device_id=device, series=series, frame_count=len(in_window)))
    if counters is not None:
        counters.update(drops)
    return streams


# ---------------------------------------------------------------------------
# Device-set serialization: a start_time,step preamble, a header row of
# device ids, then one row per step with one column per device.
# ---------------------------------------------------------------------------

def write_devices_csv(streams: Sequence[DeviceStream], out: TextIO) -> None:
    if not streams:
        raise ParameterError("no device streams to write")
    first = streams[0].series
    for ds in streams:
        if len(ds.series) != len(first) or ds.series.step != first.step:
            raise ParameterError("device streams must share one window to serialize together")
    out.write("start_time,step\n")
    out.write(f"{first.start_time!r},{first.step!r}\n")
    out.write(",".join(str(ds.device_id) for ds in streams) + "\n")
    for i in range(len(first)):
        out.write(",".join(str(int(ds.series.values[i])) for ds in streams) + "\n")


def read_devices_csv(inp: TextIO) -> list[DeviceStream]:
    """Inverse of write_devices_csv.

    The CSV does not carry frame counts, so restored streams report a
    placeholder frame_count of 1.
    """
    lines = [ln.strip() for ln in inp if ln.strip()]
    if len(lines) < 4 or lines[0] != "start_time,step":
        raise FormatError("not a device-set CSV (expected start_time,step preamble)")
    start_s, step_s = lines[1].split(",")
    start_time, step = float(start_s), float(step_s)
    ids = lines[2].split(",")
    columns: list[list[int]] = [[] for _ in ids]
    for ln in lines[3:]:
        cells = ln.split(",")
        if len(cells) != len(ids):
            raise FormatError(f"row width {len(cells)} != device count {len(ids)}")
        for col, cell in zip(columns, cells):
            col.append(int(cell))
    streams = []
    for device_id, col in zip(ids, columns):
        kind = "mac" if ":" in device_id and len(device_id) == 17 else ("ipv6" if ":" in device_id else "ipv4")
        series = ByteSeries(start_time, step, np.array(col, dtype=np.int64))
        streams.append(DeviceStream(DeviceId(kind, device_id), series, frame_count=1))
    return streams


def write_devices_json(streams: Sequence[DeviceStream], out: TextIO) -> None:
    payload = {
        "start_time": streams[0].series.start_time if streams else 0.0,
        "step": streams[0].series.step if streams else 1.0,
        "devices": [
            {
                "device_id": str(ds.device_id),
                "kind": ds.device_id.kind,
                "frame_count": ds.frame_count,
                "values": [int(v) for v in ds.series.values],
            }
            for ds in streams
        ],
    }
    json.dump(payload, out, indent=2, sort_keys=True)
    out.write("\n")
