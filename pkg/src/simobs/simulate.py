"""Synthetic labeled datasets: scene motion, camera traffic, background
devices, and pcap output.

Cameras here follow the interframe-compression shape: a motion-driven
byte rate on top of an idle floor, periodic full-frame spikes, noise,
optional transmit delay and store-then-burst behavior.  Background
devices model streaming, browsing and bulk downloads that must not be
mistaken for cameras watching the scene.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence, TextIO

import numpy as np

from .errors import ParameterError
from .pcap import DeviceId, LinkType
from .timeseries import ByteSeries, TimedEvent, bin_events

MTU = 1500
MIN_FRAME = 64  # nonzero step emissions are padded to the physical minimum

ACTIVITY_RESOLUTION = 0.1
ACTIVITY_PROFILES = ("still", "walking", "burst", "mixed")
BACKGROUND_KINDS = ("cbr", "vbr_stream", "browsing", "download")


def derive_seed(root_seed: int, *scope: object) -> int:
    """Stable per-device sub-seed: adding devices never reshuffles others."""
    text = ":".join([str(root_seed), *map(str, scope)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass(frozen=True, eq=False)
class ActivitySignal:
    """Scene motion magnitude in [0, 1] at sub-step resolution."""

    resolution: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if self.resolution <= 0:
            raise ParameterError("resolution must be > 0")
        if (vals < 0).any() or (vals > 1).any():
            raise ParameterError("activity values must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ActivitySignal):
            return NotImplemented
        return self.resolution == other.resolution and np.array_equal(self.values, other.values)

    def per_step_means(self, step: float) -> np.ndarray:
        per = max(1, round(step / self.resolution))
        n_steps = len(self.values) // per
        return self.values[: n_steps * per].reshape(n_steps, per).mean(axis=1)


@dataclass(frozen=True)
class CameraModel:
    """Byte-rate behavior of one streaming camera."""

    idle_bytes_per_step: float = 50_000.0
    motion_gain: float = 400_000.0  # bytes per unit activity per step
    iframe_period: int = 10  # steps between full-frame spikes
    iframe_bytes: float = 50_000.0
    noise_std: float = 3_000.0
    delay: float = 0.0  # seconds between capture and transmission
    burst_accumulate: bool = False
    release_threshold: float = 400_000.0
    observed_fraction: float = 1.0  # share of the scene this camera sees

    def __post_init__(self):
        if min(self.idle_bytes_per_step, self.motion_gain, self.iframe_bytes, self.noise_std) < 0:
            raise ParameterError("byte quantities must be >= 0")
        if self.iframe_period < 1:
            raise ParameterError("iframe_period must be >= 1")
        if not 0.0 <= self.observed_fraction <= 1.0:
            raise ParameterError("observed_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class SimScenario:
    duration: int  # steps
    seed: int
    reference: CameraModel
    spies: tuple[CameraModel, ...] = ()
    background: tuple[tuple[str, Mapping], ...] = ()
    tags: frozenset[str] = frozenset()
    step: float = 1.0
    activity_profile: str = "walking"

    def __post_init__(self):
        if self.duration < 2:
            raise ParameterError("duration must be >= 2 steps")
        if self.activity_profile not in ACTIVITY_PROFILES:
            raise ParameterError(f"unknown activity profile {self.activity_profile!r}")
        if not self.spies and not self.background:
            raise ParameterError("scenario needs at least one device")


@dataclass(frozen=True)
class LabeledTrace:
    """One simulated device: its events, binned stream and ground truth."""

    device_id: DeviceId
    kind: str
    spying: bool
    events: tuple[TimedEvent, ...]
    series: ByteSeries


@dataclass(frozen=True)
class SimDataset:
    reference_series: ByteSeries
    traces: tuple[LabeledTrace, ...]
    manifest: dict


# ---------------------------------------------------------------------------
# Scene activity
# ---------------------------------------------------------------------------

def gen_activity(
    profile: str,
    duration: int,
    seed: int,
    step: float = 1.0,
    resolution: float = ACTIVITY_RESOLUTION,
) -> ActivitySignal:
    """Deterministic scene-motion signal for ``duration`` steps."""
    if duration < 1:
        raise ParameterError("duration must be >= 1")
    if profile not in ACTIVITY_PROFILES:
        raise ParameterError(f"unknown activity profile {profile!r}")
    per = max(1, round(step / resolution))
    n = duration * per
    rng = np.random.default_rng(seed)
    if profile == "still":
        values = rng.uniform(0.0, 0.02, n)
    elif profile == "walking":
        values = _walking(rng, n)
    elif profile == "burst":
        values = _burst(rng, n, resolution)
    else:  # mixed: a few segments of the basic profiles
        segments = []
        remaining = n
        while remaining > 0:
            length = min(remaining, int(rng.integers(n // 6 + 1, n // 2 + 2)))
            kind = str(rng.choice(["still", "walking", "burst"]))
            sub = gen_activity(kind, 1, int(rng.integers(0, 2**32)), step=length * resolution,
                               resolution=resolution)
            segments.append(sub.values[:length])
            remaining -= length
        values = np.concatenate(segments)[:n]
    return ActivitySignal(resolution=resolution, values=np.clip(values, 0.0, 1.0))


def _walking(rng: np.random.Generator, n: int) -> np.ndarray:
    # Reflected random walk in [0.2, 0.8], lightly smoothed.
    lo, hi = 0.2, 0.8
    width = hi - lo
    raw = rng.uniform(lo + 0.1, hi - 0.1) + np.cumsum(rng.normal(0.0, 0.08, n))
    z = np.mod(raw - lo, 2 * width)
    folded = lo + width - np.abs(z - width)
    kernel = np.ones(12) / 12
    return np.convolve(folded, kernel, mode="same")


def _burst(rng: np.random.Generator, n: int, resolution: float) -> np.ndarray:
    values = np.zeros(n)
    t = float(rng.exponential(5.0))
    horizon = n * resolution
    while t < horizon:
        length = rng.uniform(0.5, 2.0)
        magnitude = rng.uniform(0.5, 1.0)
        i0 = int(t / resolution)
        i1 = min(n, int((t + length) / resolution) + 1)
        values[i0:i1] = np.maximum(values[i0:i1], magnitude)
        t += length + float(rng.exponential(6.0))
    return values


# ---------------------------------------------------------------------------
# Device traffic
# ---------------------------------------------------------------------------

def packetize(step_bytes: Sequence[int], step: float, delay: float = 0.0) -> list[TimedEvent]:
    """Spread each step's bytes over MTU-sized events within the step.

    Nonzero emissions are padded to the 64-byte minimum frame; packets
    sit at evenly spaced sub-step offsets, shifted by ``delay``.
    """
    events = []
    for i, total in enumerate(step_bytes):
        total = int(total)
        if total <= 0:
            continue
        total = max(total, MIN_FRAME)
        n_pkts = math.ceil(total / MTU)
        base, extra = divmod(total, n_pkts)
        for j in range(n_pkts):
            size = base + (1 if j < extra else 0)
            timestamp = (i + (j + 0.5) / n_pkts) * step + delay
            events.append(TimedEvent(timestamp, size))
    return events


def camera_traffic(
    activity: ActivitySignal,
    model: CameraModel,
    step: float,
    seed: int,
) -> list[TimedEvent]:
    """Packet events a camera with this model produces for the scene."""
    act = activity.per_step_means(step) * model.observed_fraction
    n_steps = len(act)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, model.noise_std, n_steps) if model.noise_std > 0 else np.zeros(n_steps)
    step_bytes = np.zeros(n_steps, dtype=np.int64)
    buffered = 0.0
    for i in range(n_steps):
        produced = model.idle_bytes_per_step + model.motion_gain * act[i] + noise[i]
        if i % model.iframe_period == 0:
            produced += model.iframe_bytes
        produced = max(0.0, produced)
        if model.burst_accumulate:
            buffered += produced
            if buffered >= model.release_threshold:
                step_bytes[i] = round(buffered)
                buffered = 0.0
        else:
            step_bytes[i] = round(produced)
    return packetize(step_bytes, step, model.delay)


def background_traffic(
    kind: str,
    parameters: Mapping,
    duration: int,
    seed: int,
    step: float = 1.0,
) -> list[TimedEvent]:
    """Packet events for one non-camera (or non-spying camera) device."""
    params = dict(parameters)
    rng = np.random.default_rng(seed)
    if kind == "cbr":
        return _cbr(params, duration, rng, step)
    if kind == "vbr_stream":
        return _vbr_stream(params, duration, seed, step)
    if kind == "browsing":
        return _browsing(params, duration, rng, step)
    if kind == "download":
        return _download(params, duration, rng, step)
    raise ParameterError(f"unknown background kind {kind!r}")


def _cbr(params: dict, duration: int, rng: np.random.Generator, step: float) -> list[TimedEvent]:
    base = float(params.get("bytes_per_step", 300_000.0))
    jitter = float(params.get("jitter", 0.0))
    surge_period = int(params.get("surge_period", 0))
    surge_factor = float(params.get("surge_factor", 0.0))
    step_bytes = np.full(duration, base)
    if jitter > 0:
        step_bytes += rng.laplace(0.0, jitter, duration)
    if surge_period > 0:
        surge_at = np.arange(duration) % surge_period == surge_period - 1
        step_bytes += np.where(surge_at, base * surge_factor, 0.0)
    return packetize(np.maximum(0, np.round(step_bytes)).astype(np.int64), step)


def _vbr_stream(params: dict, duration: int, seed: int, step: float) -> list[TimedEvent]:
    profile = str(params.get("profile", "walking"))
    model = CameraModel(
        idle_bytes_per_step=float(params.get("idle_bytes_per_step", 40_000.0)),
        motion_gain=float(params.get("motion_gain", 350_000.0)),
        iframe_period=int(params.get("iframe_period", 10)),
        iframe_bytes=float(params.get("iframe_bytes", 100_000.0)),
        noise_std=float(params.get("noise_std", 10_000.0)),
    )
    # Its own scene: seed-derived, independent of the observed one.
    activity = gen_activity(profile, duration, derive_seed(seed, "vbr-activity"), step=step)
    return camera_traffic(activity, model, step, derive_seed(seed, "vbr-camera"))


def _browsing(params: dict, duration: int, rng: np.random.Generator, step: float) -> list[TimedEvent]:
    burst_mean = float(params.get("burst_bytes", 400_000.0))
    off_mean = float(params.get("off_mean", 6.0))
    step_bytes = np.zeros(duration, dtype=np.int64)
    t = float(rng.exponential(off_mean))
    horizon = duration * step
    while t < horizon:
        # Heavy-tailed page/asset fetch spread over a short on-period.
        total = burst_mean * float(rng.pareto(1.5) + 0.25)
        total = min(total, 30 * burst_mean)
        length = rng.uniform(0.3, 1.5)
        i0 = int(t / step)
        i1 = min(duration, int((t + length) / step) + 1)
        share = np.ones(i1 - i0) / (i1 - i0)
        step_bytes[i0:i1] += np.round(total * share).astype(np.int64)
        t += length + float(rng.exponential(off_mean))
    return packetize(step_bytes, step)


def _download(params: dict, duration: int, rng: np.random.Generator, step: float) -> list[TimedEvent]:
    rate = float(params.get("bytes_per_step", 2_000_000.0))
    ramp = max(1, int(params.get("ramp_steps", 5)))
    jitter = float(params.get("jitter", rate * 0.01))
    ramp_curve = np.minimum(1.0, (np.arange(duration) + 1) / ramp)
    step_bytes = rate * ramp_curve + (rng.laplace(0.0, jitter, duration) if jitter > 0 else 0.0)
    return packetize(np.maximum(0, np.round(step_bytes)).astype(np.int64), step)


# ---------------------------------------------------------------------------
# Scenario rendering
# ---------------------------------------------------------------------------

def _device_mac(group: int, index: int) -> DeviceId:
    return DeviceId("mac", f"02:00:00:00:{group:02x}:{index + 1:02x}")


def render_scenario(scenario: SimScenario) -> SimDataset:
    """Generate the labeled dataset one scenario describes.

    All randomness flows from the scenario seed through per-device
    sub-seeds, so datasets are byte-identical across runs and adding a
    device never changes the others.
    """
    step = scenario.step
    duration = scenario.duration
    scene = gen_activity(
        scenario.activity_profile, duration, derive_seed(scenario.seed, "scene"), step=step
    )
    reference_events = camera_traffic(
        scene, scenario.reference, step, derive_seed(scenario.seed, "reference")
    )
    reference_series = bin_events(reference_events, 0.0, step, duration)

    traces = []
    for i, spy_model in enumerate(scenario.spies):
        events = camera_traffic(scene, spy_model, step, derive_seed(scenario.seed, "spy", i))
        traces.append(
            LabeledTrace(
                device_id=_device_mac(1, i),
                kind="spy_camera",
                spying=True,
                events=tuple(events),
                series=bin_events(events, 0.0, step, duration),
            )
        )
    for i, (kind, params) in enumerate(scenario.background):
        events = background_traffic(
            kind, params, duration, derive_seed(scenario.seed, "background", i), step=step
        )
        traces.append(
            LabeledTrace(
                device_id=_device_mac(2, i),
                kind=kind,
                spying=False,
                events=tuple(events),
                series=bin_events(events, 0.0, step, duration),
            )
        )
    traces.sort(key=lambda tr: tr.device_id)

    manifest = {
        "scenario": scenario_to_dict(scenario),
        "devices": [
            {"device_id": str(tr.device_id), "kind": tr.kind, "spying": tr.spying}
            for tr in traces
        ],
    }
    return SimDataset(reference_series=reference_series, traces=tuple(traces), manifest=manifest)


# ---------------------------------------------------------------------------
# pcap output
# ---------------------------------------------------------------------------

_GATEWAY_MAC = bytes.fromhex("0200000000fe")


def _mac_bytes(device_id: DeviceId) -> bytes:
    return bytes.fromhex(device_id.value.replace(":", ""))


def _ethernet_frame(src: bytes, on_wire: int, ip_index: int) -> bytes:
    # 14B ethernet + 20B IPv4 header + zero fill; total == on_wire.
    eth = _GATEWAY_MAC + src + struct.pack(">H", 0x0800)
    ip = struct.pack(
        ">BBHHHBBH4s4s",
        0x45, 0, on_wire - 14, 0, 0, 64, 17, 0,
        bytes([10, 0, 0, min(ip_index + 1, 253)]),
        bytes([10, 0, 0, 254]),
    )
    return eth + ip + bytes(on_wire - 34)


_RADIOTAP_HEADER = struct.pack("<BBHI", 0, 0, 8, 0)


def _radiotap_frame(src: bytes, transmitted: int) -> bytes:
    # Minimal radiotap header + 24B 802.11 data header (to-DS) + zero fill.
    dot11 = bytes([0x08, 0x01]) + bytes(2) + _GATEWAY_MAC + src + _GATEWAY_MAC + bytes(2)
    return _RADIOTAP_HEADER + dot11 + bytes(transmitted - len(dot11))


def write_pcap(dataset: SimDataset, link: str = "ethernet") -> bytes:
    """Serialize a dataset's events as a classic pcap.

    Frame lengths are chosen so reading the file back through the pcap
    module's default byte basis reproduces each device's bins exactly.
    """
    if link == "ethernet":
        link_type = LinkType.ETHERNET
    elif link == "radiotap":
        link_type = LinkType.IEEE80211_RADIOTAP
    else:
        raise ParameterError(f"link must be 'ethernet' or 'radiotap', got {link!r}")

    out = bytearray()
    out += struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, int(link_type))

    queue = []
    for dev_index, trace in enumerate(dataset.traces):
        src = _mac_bytes(trace.device_id)
        for ev in trace.events:
            queue.append((ev.timestamp, str(trace.device_id), src, dev_index, ev.byte_count))
    queue.sort(key=lambda item: (item[0], item[1]))

    for timestamp, _, src, dev_index, size in queue:
        if size < MIN_FRAME:
            raise ParameterError(f"event of {size} bytes is below the {MIN_FRAME}-byte frame minimum")
        if link_type is LinkType.ETHERNET:
            frame = _ethernet_frame(src, size, dev_index)
            on_wire = size
        else:
            frame = _radiotap_frame(src, size)
            on_wire = size + len(_RADIOTAP_HEADER)
        ts_sec = int(timestamp)
        ts_usec = round((timestamp - ts_sec) * 1e6)
        if ts_usec == 1_000_000:
            ts_sec, ts_usec = ts_sec + 1, 0
        out += struct.pack("<IIII", ts_sec, ts_usec, len(frame), on_wire)
        out += frame
    return bytes(out)


# ---------------------------------------------------------------------------
# Scenario config (JSON key-value schema mirroring SimScenario)
# ---------------------------------------------------------------------------

def scenario_to_dict(scenario: SimScenario) -> dict:
    return {
        "duration": scenario.duration,
        "seed": scenario.seed,
        "step": scenario.step,
        "activity_profile": scenario.activity_profile,
        "reference": asdict(scenario.reference),
        "spies": [asdict(m) for m in scenario.spies],
        "background": [[kind, dict(params)] for kind, params in scenario.background],
        "tags": sorted(scenario.tags),
    }


def scenario_from_dict(data: Mapping) -> SimScenario:
    try:
        return SimScenario(
            duration=int(data["duration"]),
            seed=int(data["seed"]),
            reference=CameraModel(**data["reference"]),
            spies=tuple(CameraModel(**m) for m in data.get("spies", [])),
            background=tuple((str(k), dict(p)) for k, p in data.get("background", [])),
            tags=frozenset(data.get("tags", [])),
            step=float(data.get("step", 1.0)),
            activity_profile=str(data.get("activity_profile", "walking")),
        )
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"bad scenario config: {exc}") from exc


def load_scenario(inp: TextIO) -> SimScenario:
    return scenario_from_dict(json.load(inp))


def save_scenario(scenario: SimScenario, out: TextIO) -> None:
    json.dump(scenario_to_dict(scenario), out, indent=2, sort_keys=True)
    out.write("\n")


# ---------------------------------------------------------------------------
# Presets used by the CLI and the end-to-end studies
# ---------------------------------------------------------------------------

_EASY_SPY = CameraModel(
    idle_bytes_per_step=48_000.0,
    motion_gain=385_000.0,
    iframe_period=10,
    iframe_bytes=48_000.0,
    noise_std=3_500.0,
)

_EASY_BACKGROUND: tuple[tuple[str, Mapping], ...] = (
    ("cbr", {"bytes_per_step": 300_000.0, "jitter": 15_000.0, "surge_period": 8, "surge_factor": 1.0}),
    ("cbr", {"bytes_per_step": 150_000.0, "jitter": 10_000.0, "surge_period": 12, "surge_factor": 1.5}),
    ("vbr_stream", {"profile": "burst", "motion_gain": 350_000.0, "idle_bytes_per_step": 30_000.0}),
    ("vbr_stream", {"profile": "still", "motion_gain": 300_000.0, "idle_bytes_per_step": 60_000.0,
                    "iframe_period": 8, "iframe_bytes": 120_000.0}),
    ("browsing", {"burst_bytes": 400_000.0, "off_mean": 6.0}),
    ("browsing", {"burst_bytes": 800_000.0, "off_mean": 10.0}),
    ("browsing", {"burst_bytes": 200_000.0, "off_mean": 4.0}),
    ("download", {"bytes_per_step": 2_000_000.0, "ramp_steps": 5}),
    ("download", {"bytes_per_step": 1_200_000.0, "ramp_steps": 8}),
)


def easy_scenario(seed: int, duration: int = 60, n_background: int = 9) -> SimScenario:
    """One clearly-observing spy camera among distinguishable backgrounds."""
    background = tuple(
        (kind, dict(params))
        for kind, params in (_EASY_BACKGROUND * (n_background // len(_EASY_BACKGROUND) + 1))[:n_background]
    )
    return SimScenario(
        duration=duration,
        seed=seed,
        reference=CameraModel(),
        spies=(_EASY_SPY,),
        background=background,
        tags=frozenset({"scenario=easy"}),
        activity_profile="walking",
    )


_FAR_SPY = CameraModel(
    idle_bytes_per_step=55_000.0,
    motion_gain=330_000.0,
    iframe_period=7,
    iframe_bytes=70_000.0,
    noise_std=12_000.0,
    delay=0.3,
    observed_fraction=0.8,
)


def regime_scenario(regime: str, seed: int, duration: int = 60, n_background: int = 9) -> SimScenario:
    """Two data regimes with different spy-camera hardware behavior.

    ``near`` matches the reference closely; ``far`` is a weaker, noisier,
    delayed camera seeing only part of the scene.
    """
    if regime == "near":
        spy = _EASY_SPY
    elif regime == "far":
        spy = _FAR_SPY
    else:
        raise ParameterError(f"unknown regime {regime!r}")
    base = easy_scenario(seed, duration=duration, n_background=n_background)
    return SimScenario(
        duration=duration,
        seed=seed,
        reference=base.reference,
        spies=(spy,),
        background=base.background,
        tags=frozenset({f"regime={regime}"}),
        activity_profile="walking",
    )


PRESETS = {
    "easy": lambda seed: easy_scenario(seed),
    "easy70": lambda seed: easy_scenario(seed, n_background=69),
    "near": lambda seed: regime_scenario("near", seed),
    "far": lambda seed: regime_scenario("far", seed),
}


def preset_scenario(name: str, seed: int) -> SimScenario:
    if name not in PRESETS:
        raise ParameterError(f"unknown preset {name!r} (have {sorted(PRESETS)})")
    return PRESETS[name](seed)
