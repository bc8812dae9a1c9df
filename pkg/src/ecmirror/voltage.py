"""Drive-voltage ladder and sensor quantization.

The digital potentiometer exposes 128 taps mapped linearly onto the
1.49-3.79 V drive range of the electrochromic cell; the sensor ADC reports
voltages on a 0.01 V grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

VOLT_MIN = 1.49
VOLT_MAX = 3.79
N_TAPS = 128
VOLT_STEP = (VOLT_MAX - VOLT_MIN) / (N_TAPS - 1)

ADC_MIN = 0.0
ADC_MAX = 5.0


@dataclass(frozen=True)
class VoltageCommand:
    """One discrete potentiometer position; volts is derived from the tap."""

    tap: int

    def __post_init__(self):
        if not isinstance(self.tap, int) or not 0 <= self.tap < N_TAPS:
            raise ValueError(f"tap {self.tap!r} outside 0..{N_TAPS - 1}")

    @property
    def volts(self) -> float:
        return tap_to_volts(self.tap)


def adc_quantize(analog_v: float) -> float:
    """Clamp into [0, 5] V and round to the nearest 0.01 V, half up."""
    clamped = min(max(analog_v, ADC_MIN), ADC_MAX)
    return math.floor(clamped * 100.0 + 0.5) / 100.0


def tap_to_volts(tap: int) -> float:
    if not 0 <= tap < N_TAPS:
        raise ValueError(f"tap {tap} outside 0..{N_TAPS - 1}")
    return VOLT_MIN + tap * VOLT_STEP


def volts_to_tap(volts: float) -> int:
    """Nearest tap for a requested voltage; out-of-range volts are clamped."""
    clamped = min(max(volts, VOLT_MIN), VOLT_MAX)
    return round((clamped - VOLT_MIN) / VOLT_STEP)


def clamp_voltage(volts: float) -> float:
    return min(max(volts, VOLT_MIN), VOLT_MAX)
