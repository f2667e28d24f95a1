"""Experiment configuration: YAML documents plus CLI overrides.

One self-describing document per experiment.  Top-level keys:

    experiment: latency | length_sweep | param_sweep | max_bitrate | clock_skew
    seed: int
    repetitions: int
    devices:            # name -> DeviceConfig fields (phase_fraction extra)
    channel:            # ChannelParams fields; omit for the ideal bus
    wire:               # per-meter parasitics and default length
    workload: [lp:0x55,0xAA, hp:0x0F, ...]
    sweep: {parameter, start, stop, step}
    lengths: [0.11, 5.0]
    skew: {span, step, extra: [[0.20, -0.20]]}
    bitrate_search: {min_clock_ps, max_clock_ps, messages}

`phase_fraction` expresses a receiver's sampling phase as a fraction of
its clock period, so clock-frequency sweeps keep the relative sampling
alignment.  CLI overrides use dotted paths (`--set sweep.step=0.1`).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..channel import ChannelParams, WireGeometry, lump_from_geometry
from ..endpoint import DeviceConfig
from ..framing import FrameError, Message, parse_message_literal

EXPERIMENTS = ("latency", "length_sweep", "param_sweep", "max_bitrate",
               "clock_skew")
SWEEP_PARAMETERS = ("capacitance", "load_r", "pullup_r", "inductance")

_CHANNEL_KEYS = {"pull_up_resistance", "load_resistance", "capacitance",
                 "inductance", "supply_voltage", "comparator_threshold",
                 "integration_step"}
_DEVICE_KEYS = {"nominal_frequency", "offset_fraction", "phase_offset",
                "clock_period_ps", "psc_division", "address",
                "lbdet_threshold_slots", "hp_classify_slots",
                "decode_tolerance", "retry_limit", "backoff_idle_slots",
                "sync_timeout_slots", "slot_est_clamp", "phase_fraction"}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class DeviceSpec:
    """DeviceConfig fields plus an optional clock-relative phase."""

    name: str
    fields: dict[str, Any]
    phase_fraction: float | None = None

    def build(self, clock_period_ps: int | None = None) -> DeviceConfig:
        """Materialize a DeviceConfig, optionally overriding the clock."""
        fields = dict(self.fields)
        if clock_period_ps is not None:
            fields["clock_period_ps"] = clock_period_ps
        period = fields.get("clock_period_ps")
        if self.phase_fraction is not None:
            if period is None:
                period = round(1e12 / fields.get("nominal_frequency", 3e6))
            fields["phase_offset"] = round(self.phase_fraction * period)
        try:
            return DeviceConfig(name=self.name, **fields)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"device {self.name!r}: {exc}") from exc


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    step: float

    def points(self) -> list[float]:
        if self.step <= 0 or self.stop < self.start:
            raise ConfigError("sweep needs step > 0 and stop >= start")
        count = int(round((self.stop - self.start) / self.step)) + 1
        return [round(self.start + i * self.step, 9) for i in range(count)]


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    repetitions: int = 1
    devices: list[DeviceSpec] = field(default_factory=list)
    channel: ChannelParams | None = None
    wire: WireGeometry | None = None
    workload: list[Message] = field(default_factory=list)
    sweep: SweepSpec | None = None
    lengths: list[float] = field(default_factory=list)
    skew_span: float = 0.05
    skew_step: float = 0.01
    skew_extra: list[tuple[float, float]] = field(default_factory=list)
    min_clock_ps: int = 20000
    max_clock_ps: int = 672000
    search_messages: int = 100

    def channel_at_length(self, length_m: float) -> ChannelParams:
        if self.channel is None:
            raise ConfigError("experiment needs an analog channel section")
        if self.wire is None:
            from dataclasses import replace
            return replace(self.channel)
        geom = WireGeometry(length_m, self.wire.per_meter_resistance,
                            self.wire.per_meter_capacitance,
                            self.wire.per_meter_inductance)
        return lump_from_geometry(geom, self.channel)


def _require(mapping: dict, key: str, context: str) -> Any:
    if key not in mapping:
        raise ConfigError(f"missing {key!r} in {context}")
    return mapping[key]


def _parse_devices(raw: Any) -> list[DeviceSpec]:
    if not isinstance(raw, dict) or len(raw) < 2:
        raise ConfigError("devices must map at least two names to settings")
    specs = []
    for name, settings in raw.items():
        settings = dict(settings or {})
        unknown = set(settings) - _DEVICE_KEYS
        if unknown:
            raise ConfigError(f"device {name!r}: unknown keys {sorted(unknown)}")
        fraction = settings.pop("phase_fraction", None)
        specs.append(DeviceSpec(str(name), settings,
                                None if fraction is None else float(fraction)))
    return specs


def _parse_channel(raw: Any) -> ChannelParams:
    if not isinstance(raw, dict):
        raise ConfigError("channel must be a mapping of ChannelParams fields")
    unknown = set(raw) - _CHANNEL_KEYS
    if unknown:
        raise ConfigError(f"channel: unknown keys {sorted(unknown)}")
    try:
        return ChannelParams(**{k: float(v) for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"channel: {exc}") from exc


def _parse_wire(raw: Any) -> tuple[WireGeometry, float]:
    if not isinstance(raw, dict):
        raise ConfigError("wire must be a mapping")
    length = float(raw.get("length", 0.0))
    try:
        geom = WireGeometry(length,
                            float(_require(raw, "per_meter_resistance", "wire")),
                            float(_require(raw, "per_meter_capacitance", "wire")),
                            float(_require(raw, "per_meter_inductance", "wire")))
    except ValueError as exc:
        raise ConfigError(f"wire: {exc}") from exc
    return geom, length


def _parse_workload(raw: Any) -> list[Message]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("workload must be a non-empty list of message literals")
    try:
        return [parse_message_literal(str(item)) for item in raw]
    except FrameError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(data: dict[str, Any]) -> ExperimentConfig:
    experiment = _require(data, "experiment", "config")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    cfg = ExperimentConfig(
        experiment=experiment,
        seed=int(data.get("seed", 0)),
        repetitions=int(data.get("repetitions", 1)),
        devices=_parse_devices(_require(data, "devices", "config")),
    )
    if cfg.repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    if "channel" in data:
        cfg.channel = _parse_channel(data["channel"])
    if "wire" in data:
        cfg.wire, default_len = _parse_wire(data["wire"])
        if not data.get("lengths"):
            cfg.lengths = [default_len]
    if "workload" in data:
        cfg.workload = _parse_workload(data["workload"])
    if "lengths" in data:
        cfg.lengths = [float(v) for v in data["lengths"]]
    if "sweep" in data:
        raw = data["sweep"]
        parameter = _require(raw, "parameter", "sweep")
        if parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}")
        cfg.sweep = SweepSpec(parameter, float(_require(raw, "start", "sweep")),
                              float(_require(raw, "stop", "sweep")),
                              float(_require(raw, "step", "sweep")))
        cfg.sweep.points()  # validate now
    if "skew" in data:
        raw = data["skew"]
        cfg.skew_span = float(raw.get("span", cfg.skew_span))
        cfg.skew_step = float(raw.get("step", cfg.skew_step))
        cfg.skew_extra = [(float(a), float(b)) for a, b in raw.get("extra", [])]
        if cfg.skew_step <= 0 or cfg.skew_span < 0:
            raise ConfigError("skew needs step > 0 and span >= 0")
    if "bitrate_search" in data:
        raw = data["bitrate_search"]
        cfg.min_clock_ps = int(raw.get("min_clock_ps", cfg.min_clock_ps))
        cfg.max_clock_ps = int(raw.get("max_clock_ps", cfg.max_clock_ps))
        cfg.search_messages = int(raw.get("messages", cfg.search_messages))
        if not 0 < cfg.min_clock_ps < cfg.max_clock_ps:
            raise ConfigError("bitrate_search clock bounds out of order")
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    needs_channel = cfg.experiment in ("length_sweep", "param_sweep",
                                       "max_bitrate")
    if needs_channel and cfg.channel is None:
        raise ConfigError(f"{cfg.experiment} requires a channel section")
    if cfg.experiment == "param_sweep" and cfg.sweep is None:
        raise ConfigError("param_sweep requires a sweep section")
    if cfg.experiment in ("length_sweep", "max_bitrate") and not cfg.lengths:
        raise ConfigError(f"{cfg.experiment} requires lengths (or wire.length)")
    if cfg.experiment != "clock_skew" and not cfg.workload:
        if cfg.experiment != "latency":  # latency has a built-in workload
            raise ConfigError(f"{cfg.experiment} requires a workload")


def apply_overrides(data: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply `a.b.c=value` CLI overrides to the raw config mapping."""
    data = copy.deepcopy(data)
    for item in overrides:
        path, sep, value = item.partition("=")
        if not sep or not path:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        node = data
        keys = path.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {path!r} crosses a non-section")
        node[keys[-1]] = yaml.safe_load(value)
    return data


def load_config(path: str | Path, overrides: list[str] | None = None,
                seed: int | None = None) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a mapping")
    if overrides:
        raw = apply_overrides(raw, overrides)
    cfg = parse_config(raw)
    if seed is not None:
        cfg.seed = seed
    return cfg
