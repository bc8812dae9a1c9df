"""Glare quantification for the rearview mirror.

Turns a pair of quantized light-sensor voltages into two glare criteria
(incident intensity and incident-minus-ambient contrast), scores them with
TOPSIS against fixed calibration bounds, and maps the score onto the
Schmidt-Clausen and Bindels 9-point discomfort scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

SENSOR_MIN_V = 0.0
SENSOR_MAX_V = 5.0

# Score cut points between adjacent ratings, highest severity first.
# Rating r (1..8) covers (RATING_CUTS[r-1], upper], where upper is the
# previous cut (1.0 inclusive for rating 1); rating 9 is exactly 0.
RATING_CUTS = (0.7671, 0.6576, 0.5207, 0.3015, 0.2192, 0.1644, 0.0548, 0.0)

ACCEPTABLE_RATING = 7


class GlareCategory(Enum):
    UNBEARABLE = "Unbearable"
    DISTURBING = "Disturbing"
    JUST_ADMISSIBLE = "JustAdmissible"
    ACCEPTABLE = "Acceptable"
    NOTICEABLE = "Noticeable"


_RATING_CATEGORY = {
    1: GlareCategory.UNBEARABLE,
    2: GlareCategory.UNBEARABLE,
    3: GlareCategory.DISTURBING,
    4: GlareCategory.DISTURBING,
    5: GlareCategory.JUST_ADMISSIBLE,
    6: GlareCategory.JUST_ADMISSIBLE,
    7: GlareCategory.ACCEPTABLE,
    8: GlareCategory.ACCEPTABLE,
    9: GlareCategory.NOTICEABLE,
}


class GlareDomainError(ValueError):
    """Raised when an input is outside the domain an operation accepts."""


def _on_adc_grid(v: float) -> bool:
    return abs(v * 100.0 - round(v * 100.0)) < 1e-6


@dataclass(frozen=True)
class LightReading:
    """One quantized sample from the rear (incident) and front (ambient) sensors."""

    incident_v: float
    ambient_v: float
    timestamp_ms: int = 0

    def __post_init__(self):
        for name, v in (("incident_v", self.incident_v), ("ambient_v", self.ambient_v)):
            if not SENSOR_MIN_V <= v <= SENSOR_MAX_V:
                raise GlareDomainError(f"{name}={v} outside [{SENSOR_MIN_V}, {SENSOR_MAX_V}]")
            if not _on_adc_grid(v):
                raise GlareDomainError(f"{name}={v} not on the 0.01 V ADC grid")


@dataclass(frozen=True)
class GlareCriteria:
    """The two glare drivers: incident intensity and contrast over ambient."""

    incident: float
    contrast: float


@dataclass(frozen=True)
class TopsisCalibration:
    """Fixed per-criterion bounds and weights for min-max TOPSIS scoring.

    Fixed bounds keep a streaming score independent of whatever batch a
    reading happens to arrive with.
    """

    incident_bounds: tuple[float, float] = (0.0, 5.0)
    contrast_bounds: tuple[float, float] = (0.0, 5.0)
    weights: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        for name, (lo, hi) in (
            ("incident_bounds", self.incident_bounds),
            ("contrast_bounds", self.contrast_bounds),
        ):
            if not hi > lo:
                raise GlareDomainError(f"{name}: max must exceed min, got ({lo}, {hi})")
        if any(w < 0 for w in self.weights):
            raise GlareDomainError(f"weights must be non-negative, got {self.weights}")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise GlareDomainError(f"weights must sum to 1, got {self.weights}")

    @classmethod
    def from_file(cls, path: str | Path) -> "TopsisCalibration":
        """Load ``key = value`` pairs: *_min, *_max bounds and weight_* entries."""
        values = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = float(value)
        return cls(
            incident_bounds=(values["incident_min"], values["incident_max"]),
            contrast_bounds=(values["contrast_min"], values["contrast_max"]),
            weights=(values["weight_incident"], values["weight_contrast"]),
        )

    def to_file(self, path: str | Path) -> None:
        lines = [
            f"incident_min = {self.incident_bounds[0]!r}",
            f"incident_max = {self.incident_bounds[1]!r}",
            f"contrast_min = {self.contrast_bounds[0]!r}",
            f"contrast_max = {self.contrast_bounds[1]!r}",
            f"weight_incident = {self.weights[0]!r}",
            f"weight_contrast = {self.weights[1]!r}",
        ]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class GlareAssessment:
    """TOPSIS severity score plus its 9-point rating and category."""

    topsis_score: float
    rating: int
    category: GlareCategory


def compute_criteria(reading: LightReading) -> GlareCriteria:
    """Derive the (incident, contrast) criteria; contrast clamps at zero."""
    contrast = max(reading.incident_v - reading.ambient_v, 0.0)
    return GlareCriteria(incident=reading.incident_v, contrast=contrast)


def topsis_score(criteria: GlareCriteria, cal: TopsisCalibration) -> float:
    """Closeness of the weighted, min-max-normalized criteria to maximum glare.

    1.0 means the criteria sit at the calibration maxima (worst glare),
    0.0 at the minima (no glare). Out-of-bound criteria are clamped.
    """
    normalized = []
    for value, (lo, hi) in (
        (criteria.incident, cal.incident_bounds),
        (criteria.contrast, cal.contrast_bounds),
    ):
        clamped = min(max(value, lo), hi)
        normalized.append((clamped - lo) / (hi - lo))

    d_no_glare = 0.0
    d_max_glare = 0.0
    for v, w in zip(normalized, cal.weights):
        d_no_glare += (w * v) ** 2
        d_max_glare += (w * v - w) ** 2
    d_no_glare = math.sqrt(d_no_glare)
    d_max_glare = math.sqrt(d_max_glare)
    # d_no_glare + d_max_glare >= ||weights|| > 0, so never degenerate.
    return d_no_glare / (d_no_glare + d_max_glare)


def score_to_rating(score: float) -> GlareAssessment:
    """Map a severity score onto the 9-point scale.

    Bands are left-closed at the larger endpoint: a score equal to a cut
    point belongs to the band below it (score 0.7671 rates 2, not 1), and
    score 0 alone rates 9.
    """
    if not 0.0 <= score <= 1.0:
        raise GlareDomainError(f"score {score} outside [0, 1]")
    if score == 0.0:
        rating = 9
    else:
        for r, cut in enumerate(RATING_CUTS, start=1):
            if score > cut:
                rating = r
                break
    return GlareAssessment(topsis_score=score, rating=rating, category=_RATING_CATEGORY[rating])


def assess(reading: LightReading, cal: TopsisCalibration) -> GlareAssessment:
    """Full pipeline: reading -> criteria -> TOPSIS score -> rating."""
    return score_to_rating(topsis_score(compute_criteria(reading), cal))


def format_record(reading: LightReading, assessment: GlareAssessment) -> str:
    """One-line record: timestamp,incident_v,ambient_v,topsis_score,rating,category."""
    return (
        f"{reading.timestamp_ms},{float(reading.incident_v)!r},{float(reading.ambient_v)!r},"
        f"{float(assessment.topsis_score)!r},{assessment.rating},{assessment.category.value}"
    )


def parse_record(line: str) -> tuple[LightReading, GlareAssessment]:
    ts, incident, ambient, score, rating, category = line.strip().split(",")
    reading = LightReading(float(incident), float(ambient), int(ts))
    assessment = GlareAssessment(float(score), int(rating), GlareCategory(category))
    return reading, assessment
