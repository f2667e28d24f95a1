"""linkbo: bit-accurate simulator of a single-wire chip-to-chip protocol."""

from .channel import (AnalogBus, AnalogState, ChannelParams, DriveState,
                      IdealBus, LineLevel, LineTrace, WireGeometry,
                      cutoff_frequency, lump_from_geometry)
from .coding import SlotTiming, crc4_check, crc4_compute, manchester_encode
from .endpoint import (AckOutcome, Device, DeviceConfig, Outcome,
                       TransmissionReport, decode_trace)
from .framing import (FrameError, Message, MessageKind, frame_duration,
                      frame_slots, parse_message_literal)
from .network import BusNetwork, two_device_network
from .sim import ClockDomain, EventQueue, PS_PER_SECOND

__version__ = "1.0.0"

__all__ = [
    "AnalogBus", "AnalogState", "ChannelParams", "DriveState", "IdealBus",
    "LineLevel", "LineTrace", "WireGeometry", "cutoff_frequency",
    "lump_from_geometry", "SlotTiming", "crc4_check", "crc4_compute",
    "manchester_encode", "AckOutcome", "Device", "DeviceConfig", "Outcome",
    "TransmissionReport", "decode_trace", "FrameError", "Message",
    "MessageKind", "frame_duration", "frame_slots", "parse_message_literal",
    "BusNetwork", "two_device_network", "ClockDomain", "EventQueue",
    "PS_PER_SECOND", "__version__",
]
