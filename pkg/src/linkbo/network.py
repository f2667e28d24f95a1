"""Bus network: event kernel + channel + devices, with report pairing.

Each device is ticked once per edge of its own clock domain.  A tick
samples the bus first (pre-state) and commits its drive change through a
same-time event, so every device observing instant t sees the bus as it
was before any of them reacted - matching synchronizer-delayed sampling
in real silicon.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .channel import (AnalogBus, ChannelParams, DriveState, IdealBus,
                      LineTrace)
from .endpoint import (Device, DeviceConfig, Outcome, TransmissionReport)
from .framing import Message
from .sim import ClockDomain, EventQueue, PS_PER_SECOND


@dataclass
class _Station:
    device: Device
    clock: ClockDomain
    committed: DriveState


class BusNetwork:
    """A set of LinkBo devices sharing one wire."""

    def __init__(self, channel: ChannelParams | None = None,
                 record_trace: bool = False) -> None:
        self.queue = EventQueue()
        if channel is None:
            self.bus = IdealBus(record=record_trace)
        else:
            self.bus = AnalogBus(channel, record=record_trace)
        self.stations: dict[str, _Station] = {}

    @property
    def trace(self) -> LineTrace | None:
        return self.bus.trace

    def add_device(self, config: DeviceConfig) -> Device:
        if config.name in self.stations:
            raise ValueError(f"duplicate device name {config.name!r}")
        device = Device(config)
        if config.clock_period_ps is not None:
            clock = ClockDomain.from_period_ps(config.clock_period_ps,
                                               config.phase_offset)
        else:
            clock = ClockDomain(config.nominal_frequency,
                                config.offset_fraction, config.phase_offset)
        self.bus.attach(config.name)
        station = _Station(device, clock, DriveState.RELEASE)
        self.stations[config.name] = station
        self._schedule_tick(station, 1)
        return device

    def device(self, name: str) -> Device:
        return self.stations[name].device

    def _schedule_tick(self, station: _Station, n: int) -> None:
        self.queue.schedule(station.clock.edge_time(n),
                            lambda: self._tick(station, n))

    def _tick(self, station: _Station, n: int) -> None:
        t = self.queue.now
        level = self.bus.sample(t)
        drive = station.device.tick(level, t)
        if drive is not station.committed:
            station.committed = drive
            name = station.device.config.name
            self.queue.schedule(t, lambda: self.bus.set_drive(name, drive, t))
        self._schedule_tick(station, n + 1)

    # ----------------------------------------------------------- run helpers

    def submit(self, device_name: str, msg: Message, at_ps: int | None = None) -> None:
        device = self.stations[device_name].device
        if at_ps is None or at_ps <= self.queue.now:
            device.submit(msg)
        else:
            self.queue.schedule(at_ps, lambda: device.submit(msg))

    def run_until(self, deadline_ps: int) -> None:
        self.queue.run_until(deadline_ps)

    def run_sequence(self, sender: str, messages: list[Message],
                     step_slots: float = 4.0,
                     timeout_slots: float = 4000.0) -> list[TransmissionReport]:
        """Submit messages back to back, waiting for each final report.

        A report is final when it is not a retried outcome still queued for
        another attempt (the device requeues internally; we wait until its
        queue drains and it goes idle).
        """
        station = self.stations[sender]
        device = station.device
        slot_ps = station.clock.period_ps * device.psc
        step = max(1, round(step_slots * slot_ps))
        first = len(device.reports)
        for msg in messages:
            device.submit(msg)
            deadline = self.queue.now + round(timeout_slots * slot_ps)
            while (device.tx_active or device.queue) and self.queue.now < deadline:
                self.run_until(self.queue.now + step)
            if device.tx_active or device.queue:
                raise TimeoutError(f"{sender} still busy after {timeout_slots} slots")
        self.run_until(self.queue.now + round(4 * slot_ps))  # let RX ack records land
        return self.collect_reports(sender)[first:] if first else self.collect_reports(sender)

    def collect_reports(self, sender: str | None = None) -> list[TransmissionReport]:
        """Transmit reports with bits_received filled from peer RX records.

        A CrcRejected report whose best matching peer frame shows zero
        decoded bits is refined to SyncFailed: the far end never got past
        the sync field.
        """
        reports: list[TransmissionReport] = []
        names = [sender] if sender else list(self.stations)
        for name in names:
            device = self.stations[name].device
            for rep in device.reports:
                reports.append(self._pair(rep))
        reports.sort(key=lambda r: r.start_ps)
        return reports

    def _pair(self, rep: TransmissionReport) -> TransmissionReport:
        best_bits = 0
        slack = 10**6  # 1 us of start-time slack for sampling lag
        for name, station in self.stations.items():
            if name == rep.device:
                continue
            for frame in station.device.rx_frames:
                if rep.start_ps - slack <= frame.start_ps <= rep.end_ps + slack:
                    best_bits = max(best_bits, frame.bits_received)
        outcome = rep.outcome
        if rep.outcome is Outcome.CRC_REJECTED and best_bits == 0:
            outcome = Outcome.SYNC_FAILED
        return replace(rep, bits_received=best_bits, outcome=outcome)


def two_device_network(channel: ChannelParams | None = None,
                       tx_offset: float = 0.0, rx_offset: float = 0.0,
                       nominal_frequency: float = 3e6,
                       psc_division: int = 10,
                       record_trace: bool = False,
                       rx_phase_ps: int | None = None) -> BusNetwork:
    """Convenience: one transmitter 'tx', one receiver 'rx'."""
    net = BusNetwork(channel=channel, record_trace=record_trace)
    net.add_device(DeviceConfig(name="tx", nominal_frequency=nominal_frequency,
                                offset_fraction=tx_offset,
                                psc_division=psc_division))
    phase = rx_phase_ps if rx_phase_ps is not None else \
        round(PS_PER_SECOND / nominal_frequency / 3)
    net.add_device(DeviceConfig(name="rx", nominal_frequency=nominal_frequency,
                                offset_fraction=rx_offset, phase_offset=phase,
                                psc_division=psc_division))
    return net
