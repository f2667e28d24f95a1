"""Analytical baseline (1-wire, UNI/O) and comparison-table tests."""

import pytest

from linkbo.baselines import (ComparisonRow, OneWireTiming, UnioTiming,
                              bit_rate_kbps, comparison_table,
                              effective_bit_rate_kbps, onewire_bitrate,
                              onewire_effective_bitrate,
                              onewire_sync_latency, protocol_comparison_row)


class TestOneWire:
    def test_sync_latency_defaults(self):
        assert onewire_sync_latency() == 4800.0

    def test_sync_latency_with_70us_slots(self):
        assert onewire_sync_latency(OneWireTiming(bit_slot_us=70)) == 5440.0

    def test_sync_latency_without_reset(self):
        assert onewire_sync_latency(OneWireTiming(reset_pulse_us=0)) == 3840.0

    def test_steady_state_bitrate(self):
        assert onewire_bitrate() == pytest.approx(16.6667, abs=1e-3)

    def test_initial_bitrate_includes_preamble(self):
        rate = onewire_bitrate(first_transfer=True)
        assert rate == pytest.approx(16.26, rel=0.005)

    def test_doubled_slot_halves_steady_rate(self):
        slow = OneWireTiming(bit_slot_us=120)
        assert onewire_bitrate(slow) == pytest.approx(onewire_bitrate() / 2)

    def test_effective_bitrate_below_gross(self):
        assert onewire_effective_bitrate() < onewire_bitrate()

    def test_invalid_timing_rejected(self):
        with pytest.raises(ValueError):
            OneWireTiming(bit_slot_us=0)
        with pytest.raises(ValueError):
            OneWireTiming(data_bits=0)


class TestUnio:
    def test_slots_per_byte(self):
        assert UnioTiming().slots_per_byte == 10

    def test_payload_fraction_grows_with_length(self):
        t = UnioTiming()
        fractions = [t.payload_fraction(n) for n in (1, 4, 16, 256)]
        assert fractions == sorted(fractions)
        assert fractions[-1] == pytest.approx(0.797, abs=0.003)

    def test_invalid_timing_rejected(self):
        with pytest.raises(ValueError):
            UnioTiming(bit_period_us=0)


class TestRates:
    def test_bit_rate_formula(self):
        assert bit_rate_kbps(66, 221.76) == pytest.approx(297.6, abs=0.05)

    def test_effective_rate_formula(self):
        assert effective_bit_rate_kbps(8, 50.4) == pytest.approx(158.73,
                                                                 abs=0.01)

    def test_nonpositive_duration_rejected(self):
        with pytest.raises(ValueError):
            bit_rate_kbps(10, 0.0)


class TestComparisonTable:
    def test_three_rows_in_fixed_order(self):
        table = comparison_table()
        assert [row.protocol for row in table] == ["onewire", "unio", "linkbo"]
        assert all(isinstance(row, ComparisonRow) for row in table)

    def test_ebr_never_exceeds_bit_rate(self):
        for row in comparison_table():
            assert row.ebr_kbps[0] <= row.bit_rate_kbps[0] + 1e-9
            assert row.ebr_kbps[1] <= row.bit_rate_kbps[1] + 1e-9

    def test_linkbo_row_recomputed_from_frames(self):
        row = protocol_comparison_row("linkbo")
        assert row.bit_rate_kbps[1] == pytest.approx(297.6, rel=0.002)
        assert row.ebr_kbps[0] == pytest.approx(158.72, rel=0.001)
        assert row.ebr_kbps[1] == pytest.approx(252.5, rel=0.001)
        assert row.latency_us[0] == pytest.approx(50.4, rel=1e-6)
        assert row.latency_us[1] == pytest.approx(221.76, rel=1e-6)

    def test_unknown_protocol_rejected(self):
        with pytest.raises(ValueError):
            protocol_comparison_row("i2c")
