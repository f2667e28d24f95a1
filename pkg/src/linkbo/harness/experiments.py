"""Experiment runners: latency, sweeps, max bit rate and the skew grid.

Metrics follow the protocol-evaluation definitions: throughput is the
count of successfully received bits per unit time (Eq. 2), bit rate is
total wire bits over transfer time (Eq. 4) and the effective bit rate is
payload bits over transfer time (Eq. 5).

Sweep points are independent simulations, so they can run in a process
pool; results are merged in axis order, which keeps output bytes
independent of the worker count.
"""

from __future__ import annotations

import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from ..channel import ChannelParams
from ..endpoint import Outcome, TransmissionReport
from ..framing import Message, MessageKind
from ..network import BusNetwork
from .config import ConfigError, DeviceSpec, ExperimentConfig

KNEE_FRACTION = 0.99
CLIFF_FRACTION = 0.50

_SWEEP_FIELD = {"capacitance": "capacitance", "load_r": "load_resistance",
                "pullup_r": "pull_up_resistance", "inductance": "inductance"}


def build_network(devices: list[DeviceSpec],
                  channel: ChannelParams | None,
                  clock_period_ps: int | None = None,
                  offsets: dict[str, float] | None = None) -> BusNetwork:
    net = BusNetwork(channel=channel)
    for spec in devices:
        if offsets and spec.name in offsets:
            spec = DeviceSpec(spec.name,
                              {**spec.fields,
                               "offset_fraction": offsets[spec.name]},
                              spec.phase_fraction)
        net.add_device(spec.build(clock_period_ps))
    return net


def _sender(devices: list[DeviceSpec]) -> str:
    return devices[0].name


def run_workload(cfg: ExperimentConfig, messages: list[Message],
                 channel: ChannelParams | None = None,
                 clock_period_ps: int | None = None) -> list[TransmissionReport]:
    net = build_network(cfg.devices, channel, clock_period_ps)
    return net.run_sequence(_sender(cfg.devices), messages)


# --------------------------------------------------------------- Eq. metrics

def throughput_kbps(reports: list[TransmissionReport]) -> float:
    """Eq. (2): successfully received bits per unit time, in kbps."""
    if not reports:
        return 0.0
    bits = sum(r.bits_received for r in reports if r.outcome is Outcome.DELIVERED)
    span_ps = max(r.end_ps for r in reports) - min(r.start_ps for r in reports)
    if span_ps <= 0:
        return 0.0
    return bits * 1e9 / span_ps


def gross_bit_rate_kbps(reports: list[TransmissionReport]) -> float:
    """Eq. (4): total wire bits over transfer time, in kbps."""
    if not reports:
        return 0.0
    bits = sum(r.bits_total for r in reports)
    span_ps = max(r.end_ps for r in reports) - min(r.start_ps for r in reports)
    return bits * 1e9 / span_ps if span_ps > 0 else 0.0


def effective_bit_rate_kbps(reports: list[TransmissionReport]) -> float:
    """Eq. (5): delivered payload bits over transfer time, in kbps."""
    if not reports:
        return 0.0
    bits = sum(r.bits_payload for r in reports if r.outcome is Outcome.DELIVERED)
    span_ps = max(r.end_ps for r in reports) - min(r.start_ps for r in reports)
    return bits * 1e9 / span_ps if span_ps > 0 else 0.0


def _point_metrics(reports: list[TransmissionReport]) -> dict:
    delivered = [r for r in reports if r.outcome is Outcome.DELIVERED]
    latencies = [r.duration_ps / 1e6 for r in delivered]
    return {
        "throughput_kbps": throughput_kbps(reports),
        "delivered": len(delivered),
        "total": len(reports),
        "ack_rate": len(delivered) / len(reports) if reports else 0.0,
        "mean_latency_us": statistics.fmean(latencies) if latencies else 0.0,
    }


def median_of_3(values: list[float]) -> list[float]:
    """Median-of-3 smoothing with clipped windows at the ends."""
    return [statistics.median(values[max(0, i - 1):i + 2])
            for i in range(len(values))]


def knee_and_cliff(axis: list[float], throughput: list[float]) -> dict:
    """Knee (last axis value at >= 99% of plateau) and cliff presence."""
    smoothed = median_of_3(throughput)
    plateau = statistics.median(smoothed[:3]) if len(smoothed) >= 3 else smoothed[0]
    knee = None
    for x, tp in zip(axis, smoothed):
        if plateau > 0 and tp >= KNEE_FRACTION * plateau:
            knee = x
    cliff = any(a >= KNEE_FRACTION * plateau and b < CLIFF_FRACTION * plateau
                for a, b in zip(smoothed, smoothed[1:]))
    return {"plateau_kbps": plateau, "knee": knee, "cliff": cliff,
            "smoothed": smoothed}


# ------------------------------------------------------------------- latency

@dataclass(frozen=True)
class LatencyRow:
    kind: str
    size_bytes: int
    wire_m: float
    latency_us: float
    delivered: bool


def default_latency_workload() -> list[Message]:
    msgs = [Message(MessageKind.HP, b"\x5a")]
    for n in range(1, 8):
        msgs.append(Message(MessageKind.LP, bytes((0x11 * n + i) & 0xFF
                                                  for i in range(n))))
    return msgs


def run_latency_experiment(cfg: ExperimentConfig) -> list[LatencyRow]:
    """One fresh network per message; latency is sync start to ACK end."""
    messages = cfg.workload or default_latency_workload()
    lengths = cfg.lengths if cfg.channel is not None else [0.0]
    rows: list[LatencyRow] = []
    for length in lengths:
        channel = cfg.channel_at_length(length) if cfg.channel else None
        for msg in messages:
            reports = run_workload(cfg, [msg], channel)
            rep = reports[-1]
            rows.append(LatencyRow(msg.kind.value, len(msg.payload_bytes),
                                   length, rep.duration_ps / 1e6,
                                   rep.outcome is Outcome.DELIVERED))
    return rows


# --------------------------------------------------------------- param sweep

@dataclass(frozen=True)
class SweepRow:
    axis: float
    throughput_kbps: float
    delivered: int
    ack_rate: float
    mean_latency_us: float


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    rows: list[SweepRow]
    plateau_kbps: float
    knee: float | None
    cliff: bool


def _mutate_channel(channel: ChannelParams, parameter: str,
                    ratio: float) -> ChannelParams:
    field = _SWEEP_FIELD[parameter]
    value = getattr(channel, field) * ratio
    return replace(channel, **{field: value, "integration_step": 0.0})


def _sweep_point(args: tuple[ExperimentConfig, float]) -> dict:
    cfg, ratio = args
    channel = _mutate_channel(cfg.channel, cfg.sweep.parameter, ratio)
    messages = cfg.workload * cfg.repetitions
    try:
        reports = run_workload(cfg, messages, channel)
    except TimeoutError:
        return {"throughput_kbps": 0.0, "delivered": 0,
                "total": len(messages), "ack_rate": 0.0,
                "mean_latency_us": 0.0}
    return _point_metrics(reports)


def run_param_sweep(cfg: ExperimentConfig, parallel: int = 1) -> SweepResult:
    if cfg.sweep is None or cfg.channel is None:
        raise ConfigError("param_sweep requires sweep and channel sections")
    points = cfg.sweep.points()
    jobs = [(cfg, ratio) for ratio in points]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            metrics = list(pool.map(_sweep_point, jobs))
    else:
        metrics = [_sweep_point(job) for job in jobs]
    rows = [SweepRow(ratio, m["throughput_kbps"], m["delivered"],
                     m["ack_rate"], m["mean_latency_us"])
            for ratio, m in zip(points, metrics)]
    shape = knee_and_cliff(points, [m["throughput_kbps"] for m in metrics])
    return SweepResult(cfg.sweep.parameter, rows, shape["plateau_kbps"],
                       shape["knee"], shape["cliff"])


# -------------------------------------------------------------- length sweep

@dataclass(frozen=True)
class LengthRow:
    kind: str
    length_m: float
    throughput_kbps: float
    delivered: int
    ack_rate: float
    mean_latency_us: float


@dataclass(frozen=True)
class LengthSweepResult:
    rows: list[LengthRow]
    cliff_start: dict[str, float | None]  # kind -> first degraded length


def split_workload_by_kind(messages: list[Message]) -> dict[str, list[Message]]:
    groups: dict[str, list[Message]] = {}
    for msg in messages:
        key = "hp" if msg.kind is MessageKind.HP else "lp"
        groups.setdefault(key, []).append(msg)
    return groups


def _length_point(args: tuple[ExperimentConfig, str, list[Message], float]) -> dict:
    cfg, _, messages, length = args
    channel = cfg.channel_at_length(length)
    try:
        reports = run_workload(cfg, messages * cfg.repetitions, channel)
    except TimeoutError:
        return {"throughput_kbps": 0.0, "delivered": 0, "total": 0,
                "ack_rate": 0.0, "mean_latency_us": 0.0}
    return _point_metrics(reports)


def run_length_sweep(cfg: ExperimentConfig, parallel: int = 1) -> LengthSweepResult:
    if cfg.channel is None or not cfg.lengths:
        raise ConfigError("length_sweep requires channel and lengths")
    groups = split_workload_by_kind(cfg.workload)
    jobs = [(cfg, kind, msgs, length)
            for kind, msgs in sorted(groups.items())
            for length in cfg.lengths]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            metrics = list(pool.map(_length_point, jobs))
    else:
        metrics = [_length_point(job) for job in jobs]
    rows = [LengthRow(kind, length, m["throughput_kbps"], m["delivered"],
                      m["ack_rate"], m["mean_latency_us"])
            for (_, kind, _, length), m in zip(jobs, metrics)]
    cliff_start: dict[str, float | None] = {}
    for kind in sorted(groups):
        series = [(r.length_m, r.throughput_kbps) for r in rows
                  if r.kind == kind]
        plateau = series[0][1]
        cliff_start[kind] = next(
            (length for length, tp in series
             if plateau > 0 and tp < KNEE_FRACTION * plateau), None)
    return LengthSweepResult(rows, cliff_start)


# ------------------------------------------------------------- max bit rate

@dataclass(frozen=True)
class BitrateRow:
    kind: str
    length_m: float
    max_kbps: float
    clock_period_ps: int


def _search_workload(messages: list[Message], count: int,
                     seed: int) -> list[Message]:
    """Deterministic n-message burst: cycle the workload, vary payloads."""
    rng = random.Random(seed)
    out: list[Message] = []
    for i in range(count):
        base = messages[i % len(messages)]
        if base.kind is MessageKind.ADDR:
            out.append(base)
            continue
        payload = bytes((b + rng.randrange(256)) & 0xFF for b in base.payload)
        out.append(Message(base.kind, payload))
    return out


def _all_delivered(cfg: ExperimentConfig, messages: list[Message],
                   channel: ChannelParams, clock_ps: int) -> bool:
    try:
        reports = run_workload(cfg, messages, channel, clock_ps)
    except TimeoutError:
        return False
    return (len(reports) == len(messages)
            and all(r.outcome is Outcome.DELIVERED and r.attempt == 1
                    for r in reports))


def _bitrate_cell(args: tuple[ExperimentConfig, str, list[Message], float]) -> BitrateRow:
    cfg, kind, base_msgs, length = args
    channel = cfg.channel_at_length(length)
    messages = _search_workload(base_msgs, cfg.search_messages, cfg.seed)
    psc = cfg.devices[0].fields.get("psc_division", 10)
    lo, hi = cfg.min_clock_ps, cfg.max_clock_ps
    if not _all_delivered(cfg, messages, channel, hi):
        return BitrateRow(kind, length, 0.0, 0)
    if _all_delivered(cfg, messages, channel, lo):
        return BitrateRow(kind, length, 1e9 / (psc * lo), lo)
    # invariant: lo fails, hi passes; converge to ~0.5% resolution
    while hi - lo > max(100, hi // 256):
        mid = (lo + hi) // 2
        mid -= mid % 2  # keep slot periods even
        if mid <= lo:
            break
        if _all_delivered(cfg, messages, channel, mid):
            hi = mid
        else:
            lo = mid
    return BitrateRow(kind, length, 1e9 / (psc * hi), hi)


def run_max_bitrate_search(cfg: ExperimentConfig,
                           parallel: int = 1) -> list[BitrateRow]:
    if cfg.channel is None or not cfg.lengths:
        raise ConfigError("max_bitrate requires channel and lengths")
    groups = split_workload_by_kind(cfg.workload)
    jobs = [(cfg, kind, msgs, length)
            for kind, msgs in sorted(groups.items())
            for length in cfg.lengths]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_bitrate_cell, jobs))
    return [_bitrate_cell(job) for job in jobs]


# ---------------------------------------------------------------- skew grid

@dataclass(frozen=True)
class SkewCell:
    tx_offset: float
    rx_offset: float
    delivered: bool
    asserted: bool  # grid cells are asserted; extra probes are recorded only


def _skew_cell(args: tuple[ExperimentConfig, float, float, bool]) -> SkewCell:
    cfg, otx, orx, asserted = args
    messages = cfg.workload or default_latency_workload()
    tx_name = cfg.devices[0].name
    rx_name = cfg.devices[1].name
    net = build_network(cfg.devices, None,
                        offsets={tx_name: otx, rx_name: orx})
    try:
        reports = net.run_sequence(tx_name, messages)
    except TimeoutError:
        return SkewCell(otx, orx, False, asserted)
    ok = all(r.outcome is Outcome.DELIVERED for r in reports)
    return SkewCell(otx, orx, ok, asserted)


def run_clock_skew_grid(cfg: ExperimentConfig,
                        parallel: int = 1) -> list[SkewCell]:
    steps = int(round(cfg.skew_span / cfg.skew_step))
    offsets = [round(i * cfg.skew_step, 9) for i in range(-steps, steps + 1)]
    jobs = [(cfg, otx, orx, True) for otx in offsets for orx in offsets]
    jobs += [(cfg, otx, orx, False) for otx, orx in cfg.skew_extra]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_skew_cell, jobs))
    return [_skew_cell(job) for job in jobs]
