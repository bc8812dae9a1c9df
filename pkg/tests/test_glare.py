import math

import pytest
from hypothesis import given, strategies as st

from ecmirror.glare import (
    GlareCategory,
    GlareDomainError,
    LightReading,
    TopsisCalibration,
    assess,
    compute_criteria,
    format_record,
    parse_record,
    score_to_rating,
    topsis_score,
)
from ecmirror.glare import GlareCriteria

CAL = TopsisCalibration()


def reading(incident, ambient):
    return LightReading(incident, ambient, timestamp_ms=0)


class TestCriteria:
    def test_subtraction(self):
        c = compute_criteria(reading(3.20, 1.10))
        assert c.incident == pytest.approx(3.20)
        assert c.contrast == pytest.approx(2.10)

    def test_equal_inputs(self):
        c = compute_criteria(reading(2.00, 2.00))
        assert c.contrast == 0.0

    def test_ambient_above_incident_clamps(self):
        c = compute_criteria(reading(0.50, 1.50))
        assert (c.incident, c.contrast) == (0.50, 0.0)

    def test_reading_validation(self):
        with pytest.raises(GlareDomainError):
            reading(5.5, 0.0)
        with pytest.raises(GlareDomainError):
            reading(1.005, 0.0)  # off the ADC grid


class TestTopsisScore:
    def test_maxima_scores_one(self):
        assert topsis_score(GlareCriteria(5.0, 5.0), CAL) == pytest.approx(1.0)

    def test_minima_scores_zero(self):
        assert topsis_score(GlareCriteria(0.0, 0.0), CAL) == pytest.approx(0.0)

    def test_midway_scores_half(self):
        assert topsis_score(GlareCriteria(2.5, 2.5), CAL) == pytest.approx(0.5)

    def test_one_axis_maxed_is_symmetric(self):
        # normalized (1, 0): both reference distances equal 0.5 with equal weights
        assert topsis_score(GlareCriteria(5.0, 0.0), CAL) == pytest.approx(0.5)

    def test_out_of_bounds_clamped(self):
        cal = TopsisCalibration(incident_bounds=(0.0, 2.0), contrast_bounds=(0.0, 2.0))
        assert topsis_score(GlareCriteria(9.0, 9.0), cal) == pytest.approx(1.0)

    def test_calibration_validation(self):
        with pytest.raises(GlareDomainError):
            TopsisCalibration(incident_bounds=(2.0, 2.0))
        with pytest.raises(GlareDomainError):
            TopsisCalibration(weights=(0.7, 0.7))
        with pytest.raises(GlareDomainError):
            TopsisCalibration(weights=(1.2, -0.2))


class TestRatingScale:
    def test_high_score_unbearable(self):
        a = score_to_rating(0.85)
        assert (a.rating, a.category) == (1, GlareCategory.UNBEARABLE)

    def test_mid_score_disturbing(self):
        a = score_to_rating(0.40)
        assert (a.rating, a.category) == (4, GlareCategory.DISTURBING)

    def test_zero_is_noticeable(self):
        a = score_to_rating(0.0)
        assert (a.rating, a.category) == (9, GlareCategory.NOTICEABLE)

    def test_cut_point_belongs_to_lower_band(self):
        a = score_to_rating(0.1644)
        assert (a.rating, a.category) == (7, GlareCategory.ACCEPTABLE)

    def test_all_cut_points(self):
        expected = {0.7671: 2, 0.6576: 3, 0.5207: 4, 0.3015: 5, 0.2192: 6, 0.1644: 7, 0.0548: 8}
        for score, rating in expected.items():
            assert score_to_rating(score).rating == rating
        assert score_to_rating(1.0).rating == 1

    def test_out_of_domain(self):
        with pytest.raises(GlareDomainError):
            score_to_rating(1.01)
        with pytest.raises(GlareDomainError):
            score_to_rating(-0.01)


class TestAssess:
    def test_maxima_reading(self):
        assert assess(reading(5.0, 0.0), TopsisCalibration(weights=(1.0, 0.0))).rating == 1

    def test_minima_reading(self):
        assert assess(reading(0.0, 0.0), CAL).rating == 9

    def test_midway_reading(self):
        a = assess(reading(2.5, 0.0), CAL)
        assert a.topsis_score == pytest.approx(0.5)
        assert a.rating == 4  # 0.5 in (0.3015, 0.5207]


@given(
    incident=st.integers(0, 500),
    ambient=st.integers(0, 500),
    bump=st.integers(1, 100),
)
def test_monotone_in_incident(incident, ambient, bump):
    low = topsis_score(compute_criteria(reading(incident / 100, ambient / 100)), CAL)
    high_v = min(incident + bump, 500)
    high = topsis_score(compute_criteria(reading(high_v / 100, ambient / 100)), CAL)
    assert high >= low - 1e-12


@given(a=st.floats(0, 1), b=st.floats(0, 1))
def test_rating_monotone_in_score(a, b):
    if a >= b:
        assert score_to_rating(a).rating <= score_to_rating(b).rating


@given(value=st.floats(-3, 8))
def test_clamping_idempotent(value):
    cal = CAL
    clamped = min(max(value, 0.0), 5.0)
    assert topsis_score(GlareCriteria(value, value), cal) == topsis_score(
        GlareCriteria(clamped, clamped), cal
    )


def test_calibration_file_round_trip(tmp_path):
    cal = TopsisCalibration(
        incident_bounds=(0.1, 4.5), contrast_bounds=(0.0, 3.0), weights=(0.7, 0.3)
    )
    path = tmp_path / "cal.conf"
    cal.to_file(path)
    assert TopsisCalibration.from_file(path) == cal


def test_record_round_trip():
    r = reading(3.2, 1.1)
    a = assess(r, CAL)
    line = format_record(r, a)
    assert line.startswith("0,3.2,1.1,")
    back_r, back_a = parse_record(line)
    assert back_r == r
    assert back_a == a
    assert math.isclose(back_a.topsis_score, a.topsis_score, rel_tol=0, abs_tol=0)
