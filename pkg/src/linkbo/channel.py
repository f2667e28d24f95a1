"""Shared single-wire models: ideal wired-AND and a lumped analog channel.

The analog channel is a series R-L low-pass into the receiver node:

    Vdd --[R_pullup]-- node A --[R_load]--[L]-- node B --[C]-- gnd
                          |
                     (switch to gnd when any device drives low)

The comparator watches node B.  The load resistance sits in series with
the wire inductance (it is the R of the 1/(2*pi*R*C) cutoff), so growing
R_load or C slows the edges seen by the receiver until decoding fails.
Integration uses backward Euler on the (inductor current, capacitor
voltage) state, which is unconditionally stable.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

SWITCH_ON_RESISTANCE = 1.0  # ohm; near-ideal open-drain driver


class LineLevel(enum.IntEnum):
    LOW = 0
    HIGH = 1


class DriveState(enum.Enum):
    DRIVE_LOW = "drive_low"
    RELEASE = "release"


class EdgeDirection(enum.Enum):
    RISING = "rising"
    FALLING = "falling"


def resolve_ideal(drives: Iterable[DriveState]) -> LineLevel:
    """Wired-AND resolution: low is dominant, an undriven bus idles high."""
    for d in drives:
        if d is DriveState.DRIVE_LOW:
            return LineLevel.LOW
    return LineLevel.HIGH


@dataclass(frozen=True)
class ChannelParams:
    pull_up_resistance: float  # ohm
    load_resistance: float  # ohm
    capacitance: float  # F
    inductance: float  # H
    supply_voltage: float = 3.3  # V
    comparator_threshold: float = 1.5  # V
    integration_step: float = 0.0  # s; 0 = auto (stability bound / 10)

    def __post_init__(self) -> None:
        for name in ("pull_up_resistance", "load_resistance", "capacitance",
                     "inductance", "supply_voltage", "comparator_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.comparator_threshold >= self.supply_voltage:
            raise ValueError("comparator threshold must be below the supply")
        if self.integration_step == 0.0:
            object.__setattr__(self, "integration_step",
                               max_integration_step(self))
        if self.integration_step <= 0:
            raise ValueError("integration_step must be positive")
        if self.integration_step > max_integration_step(self) * (1 + 1e-12):
            raise ValueError(
                "integration_step exceeds 1/10 of the smallest time constant")


def max_integration_step(params: ChannelParams) -> float:
    """One tenth of the smallest circuit time constant (RC and sqrt(LC))."""
    rc = min(params.pull_up_resistance, params.load_resistance) * params.capacitance
    lc = math.sqrt(params.inductance * params.capacitance)
    return min(rc, lc) / 10.0


def cutoff_frequency(params: ChannelParams) -> float:
    """Low-pass cutoff 1 / (2 pi R_load C) in Hz."""
    return 1.0 / (2.0 * math.pi * params.load_resistance * params.capacitance)


def sample_comparator(node_voltage: float, params: ChannelParams) -> LineLevel:
    """High iff the node voltage strictly exceeds the comparator threshold."""
    if node_voltage > params.comparator_threshold:
        return LineLevel.HIGH
    return LineLevel.LOW


@dataclass(frozen=True)
class WireGeometry:
    length: float  # m
    per_meter_resistance: float  # ohm/m
    per_meter_capacitance: float  # F/m
    per_meter_inductance: float  # H/m

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("length must be non-negative")


def lump_from_geometry(geom: WireGeometry, base: ChannelParams) -> ChannelParams:
    """Add length-proportional series R, L and shunt C to the base lumped values."""
    new = replace(
        base,
        load_resistance=base.load_resistance + geom.length * geom.per_meter_resistance,
        capacitance=base.capacitance + geom.length * geom.per_meter_capacitance,
        inductance=base.inductance + geom.length * geom.per_meter_inductance,
        integration_step=0.0,
    )
    return replace(new, integration_step=min(base.integration_step,
                                             max_integration_step(new)))


@dataclass
class AnalogState:
    """Dynamic state of the lumped channel."""

    inductor_current: float = 0.0  # A
    node_voltage: float = 0.0  # V at the comparator node

    @classmethod
    def idle(cls, params: ChannelParams) -> "AnalogState":
        return cls(0.0, params.supply_voltage)


def _driver_thevenin(driving_low: bool, params: ChannelParams) -> tuple[float, float]:
    """Thevenin (open-circuit voltage, source resistance) at node A."""
    r_pu = params.pull_up_resistance
    if not driving_low:
        return params.supply_voltage, r_pu
    r_on = SWITCH_ON_RESISTANCE
    g = 1.0 / r_pu + 1.0 / r_on
    return params.supply_voltage / (r_pu * g), 1.0 / g


def _be_step_matrix(driving_low: bool, params: ChannelParams,
                    dt: float) -> tuple[tuple[float, float, float, float],
                                        tuple[float, float]]:
    """One backward-Euler step as an affine map s' = M s + c."""
    a, b = _driver_thevenin(driving_low, params)
    ind, cap = params.inductance, params.capacitance
    r_series = b + params.load_resistance
    denom = 1.0 + (dt / ind) * r_series + dt * dt / (ind * cap)
    m00 = 1.0 / denom
    m01 = -dt / (ind * denom)
    m10 = dt / (cap * denom)
    m11 = 1.0 - dt * dt / (ind * cap * denom)
    c0 = dt * a / (ind * denom)
    c1 = dt * dt * a / (ind * cap * denom)
    return (m00, m01, m10, m11), (c0, c1)


def analog_step(state: AnalogState, drives: Iterable[DriveState],
                params: ChannelParams, dt: float) -> AnalogState:
    """Advance the channel one backward-Euler step of length dt seconds."""
    driving_low = any(d is DriveState.DRIVE_LOW for d in drives)
    m, c = _be_step_matrix(driving_low, params, dt)
    i, v = state.inductor_current, state.node_voltage
    i2 = m[0] * i + m[1] * v + c[0]
    v2 = m[2] * i + m[3] * v + c[1]
    if not (math.isfinite(i2) and math.isfinite(v2)):
        raise FloatingPointError(
            f"non-finite channel state after dt={dt!r}; reduce the step size")
    return AnalogState(i2, v2)


@dataclass
class LineTrace:
    """Waveform of the wire: change points (digital) or samples (analog)."""

    samples: list[tuple[int, float]] = field(default_factory=list)
    analog: bool = False
    duration_ps: int = 0

    def append(self, time_ps: int, value: float) -> None:
        if self.samples and time_ps <= self.samples[-1][0]:
            if time_ps < self.samples[-1][0]:
                raise ValueError("trace times must be strictly increasing")
            self.samples[-1] = (time_ps, value)
            return
        self.samples.append((time_ps, value))
        self.duration_ps = max(self.duration_ps, time_ps)

    def level_at(self, time_ps: int) -> LineLevel:
        """Piecewise-constant lookup for digital traces (idle high before start)."""
        level = LineLevel.HIGH
        for t, v in self.samples:
            if t > time_ps:
                break
            level = LineLevel(int(v))
        return level

    def to_csv(self, path: str, params: ChannelParams | None = None) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.analog:
                writer.writerow(["time_ps", "value", "volts"])
                assert params is not None
                for t, v in self.samples:
                    writer.writerow([t, int(sample_comparator(v, params)), repr(v)])
            else:
                writer.writerow(["time_ps", "value"])
                for t, v in self.samples:
                    writer.writerow([t, int(v)])

    @classmethod
    def from_csv(cls, path: str) -> "LineTrace":
        trace = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            trace.analog = len(header) == 3
            for row in reader:
                value = float(row[2]) if trace.analog else float(int(row[1]))
                trace.append(int(row[0]), value)
        return trace


class IdealBus:
    """Wired-AND bus shared by registered devices."""

    analog = False

    def __init__(self, record: bool = False) -> None:
        self._drives: dict[str, DriveState] = {}
        self.trace = LineTrace() if record else None
        self._last_level = LineLevel.HIGH
        if self.trace is not None:
            self.trace.append(0, float(LineLevel.HIGH))

    def attach(self, device_id: str) -> None:
        self._drives[device_id] = DriveState.RELEASE

    def set_drive(self, device_id: str, drive: DriveState, time_ps: int) -> None:
        self._drives[device_id] = drive
        level = resolve_ideal(self._drives.values())
        if self.trace is not None and level != self._last_level:
            self.trace.append(time_ps, float(level))
        self._last_level = level

    def sample(self, time_ps: int) -> LineLevel:
        return resolve_ideal(self._drives.values())

    def node_voltage(self, time_ps: int) -> float:
        raise NotImplementedError("ideal bus has no analog node")


def _mat_mul(a, b):
    return (a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3])


def _mat_vec(a, v):
    return (a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1])


def _affine_power(m, c, k):
    """(M, c) applied k times, by binary doubling."""
    rm = (1.0, 0.0, 0.0, 1.0)
    rc = (0.0, 0.0)
    while k:
        if k & 1:
            rc = (m[0] * rc[0] + m[1] * rc[1] + c[0],
                  m[2] * rc[0] + m[3] * rc[1] + c[1])
            rm = _mat_mul(m, rm)
        mc = _mat_vec(m, c)
        c = (c[0] + mc[0], c[1] + mc[1])
        m = _mat_mul(m, m)
        k >>= 1
    return rm, rc


class AnalogBus:
    """Lumped-RLC bus advanced lazily between observation times.

    Each advance covers the gap since the previous observation with k
    backward-Euler steps, k = ceil(gap / integration_step), applied as one
    precomputed affine map so long idle gaps stay cheap.
    """

    analog = True

    def __init__(self, params: ChannelParams, record: bool = False) -> None:
        self.params = params
        self._drives: dict[str, DriveState] = {}
        self.state = AnalogState.idle(params)
        self._time_ps = 0
        self._cache: dict[tuple[bool, int], tuple] = {}
        self.trace = LineTrace(analog=True) if record else None
        if self.trace is not None:
            self.trace.append(0, self.state.node_voltage)

    def attach(self, device_id: str) -> None:
        self._drives[device_id] = DriveState.RELEASE

    def _advance_to(self, time_ps: int) -> None:
        gap = time_ps - self._time_ps
        if gap <= 0:
            return
        driving_low = any(d is DriveState.DRIVE_LOW for d in self._drives.values())
        key = (driving_low, gap)
        cached = self._cache.get(key)
        if cached is None:
            dt_conf = self.params.integration_step
            k = max(1, math.ceil(gap * 1e-12 / dt_conf))
            dt = gap * 1e-12 / k
            m, c = _be_step_matrix(driving_low, self.params, dt)
            cached = _affine_power(m, c, k)
            self._cache[key] = cached
        m, c = cached
        i, v = self.state.inductor_current, self.state.node_voltage
        self.state = AnalogState(m[0] * i + m[1] * v + c[0],
                                 m[2] * i + m[3] * v + c[1])
        if not (math.isfinite(self.state.node_voltage)
                and math.isfinite(self.state.inductor_current)):
            raise FloatingPointError("analog bus state diverged")
        self._time_ps = time_ps
        if self.trace is not None:
            self.trace.append(time_ps, self.state.node_voltage)

    def set_drive(self, device_id: str, drive: DriveState, time_ps: int) -> None:
        self._advance_to(time_ps)
        self._drives[device_id] = drive

    def sample(self, time_ps: int) -> LineLevel:
        self._advance_to(time_ps)
        return sample_comparator(self.state.node_voltage, self.params)

    def node_voltage(self, time_ps: int) -> float:
        self._advance_to(time_ps)
        return self.state.node_voltage
