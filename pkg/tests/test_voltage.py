import pytest

from ecmirror.voltage import (
    N_TAPS,
    VOLT_MAX,
    VOLT_MIN,
    VoltageCommand,
    adc_quantize,
    clamp_voltage,
    tap_to_volts,
    volts_to_tap,
)


class TestAdcQuantize:
    def test_rounds_to_grid(self):
        assert adc_quantize(2.347) == pytest.approx(2.35)

    def test_zero(self):
        assert adc_quantize(0.0) == 0.0

    def test_clamps_then_quantizes(self):
        assert adc_quantize(5.004) == pytest.approx(5.00)
        assert adc_quantize(-0.3) == 0.0

    def test_half_rounds_up(self):
        assert adc_quantize(0.125) == pytest.approx(0.13)

    def test_idempotent(self):
        for i in range(0, 500, 7):
            v = i / 100 + 0.003
            assert adc_quantize(adc_quantize(v)) == adc_quantize(v)


class TestTaps:
    def test_endpoints(self):
        assert tap_to_volts(0) == pytest.approx(VOLT_MIN)
        assert tap_to_volts(127) == pytest.approx(VOLT_MAX)

    def test_midpoint(self):
        assert tap_to_volts(63) == pytest.approx(2.631, abs=1e-3)

    def test_round_trip_all_taps(self):
        for tap in range(N_TAPS):
            assert volts_to_tap(tap_to_volts(tap)) == tap

    def test_out_of_range_volts_clamped(self):
        assert volts_to_tap(0.0) == 0
        assert volts_to_tap(9.9) == 127

    def test_invalid_taps_rejected(self):
        with pytest.raises(ValueError):
            tap_to_volts(128)
        with pytest.raises(ValueError):
            VoltageCommand(-1)
        with pytest.raises(ValueError):
            VoltageCommand(128)

    def test_command_volts_derived(self):
        assert VoltageCommand(0).volts == pytest.approx(VOLT_MIN)
        assert clamp_voltage(0.2) == VOLT_MIN
