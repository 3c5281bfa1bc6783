import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from respiscreen.respiration import Pattern, RespirationEstimate
from respiscreen.roi import Region, RoiTrack
from respiscreen.screening import (
    Decision,
    Reason,
    ScreeningRules,
    TemperatureEstimate,
    estimate_body_temp,
    nearest_rank,
    screen,
)
from respiscreen.thermal import Calibration, RadiometricClip, Rect

from conftest import clip_from_temps

RATE_FOR = {Pattern.EUPNEA: 15.0, Pattern.BRADYPNEA: 8.0, Pattern.TACHYPNEA: 26.0, Pattern.APNEA: 0.0}


def temp(t):
    return TemperatureEstimate(t, np.array([t]))


def resp(pattern, rate=None, confidence=0.9):
    rate = RATE_FOR[pattern] if rate is None else rate
    return RespirationEstimate(rate, pattern, confidence, rate, rate)


def forehead_track(n, rect):
    return RoiTrack(Region.FOREHEAD, [rect] * n, np.ones(n))


class TestBodyTemp:
    def test_uniform(self):
        clip = clip_from_temps(np.full((20, 10, 10), 36.8))
        est = estimate_body_temp(clip, forehead_track(20, Rect(0, 0, 10, 10)))
        assert est.body_temp == pytest.approx(36.8, abs=1e-9)
        assert est.valid

    def test_nearest_rank_95_of_100(self):
        # ranks 1..95 hold 36.0, 96..100 hold 39.0; rank ceil(0.95 * 100) = 95 -> 36.0
        values = np.r_[np.full(95, 36.0), np.full(5, 39.0)]
        assert nearest_rank(values, 95) == 36.0
        # one more hot pixel moves rank 95 into the 39.0 block
        values = np.r_[np.full(94, 36.0), np.full(6, 39.0)]
        assert nearest_rank(values, 95) == 39.0

    def test_per_frame_p95_from_clip(self):
        rng = np.random.default_rng(0)
        frame = np.r_[np.full(94, 36.0), np.full(6, 39.0)]
        temps = np.stack([rng.permutation(frame).reshape(10, 10) for _ in range(5)])
        est = estimate_body_temp(clip_from_temps(temps), forehead_track(5, Rect(0, 0, 10, 10)))
        np.testing.assert_allclose(est.per_frame_p95, 39.0)
        assert est.body_temp == pytest.approx(39.0)

    def test_outlier_frame_ignored_by_median(self):
        temps = np.full((130, 8, 8), 36.6)
        temps[57] = 60.0
        est = estimate_body_temp(clip_from_temps(temps), forehead_track(130, Rect(0, 0, 8, 8)))
        assert est.body_temp == pytest.approx(36.6)

    def test_invariances(self):
        rng = np.random.default_rng(2)
        temps = 36 + rng.normal(0, 0.2, size=(9, 6, 6))
        clip = clip_from_temps(temps)
        track = forehead_track(9, Rect(0, 0, 6, 6))
        base = estimate_body_temp(clip, track).body_temp
        shuffled = clip_from_temps(np.stack([rng.permutation(f.ravel()).reshape(6, 6) for f in temps]))
        assert estimate_body_temp(shuffled, track).body_temp == pytest.approx(base, abs=1e-12)
        # move the offset into the counts and back out again
        cal = Calibration(0.01, -5.0)
        shifted = RadiometricClip(cal.to_counts(clip.temps), clip.timestamps, clip.fps, cal)
        assert estimate_body_temp(shifted, track).body_temp == pytest.approx(base, abs=1e-9)

    def test_sanity_band(self):
        assert not temp(20.0).valid and not temp(46.0).valid and temp(36.6).valid


class TestScreen:
    def test_pass(self):
        rep = screen(temp(36.6), resp(Pattern.EUPNEA, 15.0, 0.9))
        assert rep.decision is Decision.PASS and rep.reasons == ()

    def test_fever(self):
        rep = screen(temp(37.8), resp(Pattern.EUPNEA))
        assert rep.decision is Decision.ALERT and rep.reasons == (Reason.FEVER,)

    def test_apnea(self):
        rep = screen(temp(36.6), resp(Pattern.APNEA))
        assert rep.decision is Decision.ALERT and rep.reasons == (Reason.ABNORMAL_PATTERN,)

    def test_rate_out_of_range(self):
        rep = screen(temp(36.6), resp(Pattern.TACHYPNEA, 34.0))
        assert rep.reasons == (Reason.ABNORMAL_PATTERN, Reason.RATE_OUT_OF_RANGE)

    def test_low_confidence_inconclusive(self):
        rep = screen(temp(36.6), resp(Pattern.EUPNEA, confidence=0.1))
        assert rep.decision is Decision.INCONCLUSIVE and rep.reasons == (Reason.LOW_CONFIDENCE,)

    def test_require_eupnea_off(self):
        rules = ScreeningRules(require_eupnea=False)
        assert screen(temp(36.6), resp(Pattern.BRADYPNEA), rules).decision is Decision.PASS

    def test_skin_to_core_offset(self):
        rules = ScreeningRules(skin_to_core_offset=0.8)
        assert screen(temp(36.6), resp(Pattern.EUPNEA), rules).reasons == (Reason.FEVER,)

    @pytest.mark.parametrize(
        "fever, pattern, confident",
        list(itertools.product([False, True], list(Pattern), [False, True])),
    )
    def test_truth_table(self, fever, pattern, confident):
        rules = ScreeningRules()
        rep = screen(temp(38.0 if fever else 36.5), resp(pattern, confidence=0.9 if confident else 0.1), rules)
        expected = []
        if fever:
            expected.append(Reason.FEVER)
        if pattern is not Pattern.EUPNEA:
            expected.append(Reason.ABNORMAL_PATTERN)
        if not expected and not confident:
            expected.append(Reason.LOW_CONFIDENCE)
        assert list(rep.reasons) == expected
        if fever or pattern is not Pattern.EUPNEA:
            assert rep.decision is Decision.ALERT
        elif not confident:
            assert rep.decision is Decision.INCONCLUSIVE
        else:
            assert rep.decision is Decision.PASS

    @settings(max_examples=100, deadline=None)
    @given(t1=st.floats(30, 42), dt=st.floats(0, 5), pattern=st.sampled_from(list(Pattern)),
           rate=st.floats(0, 50), conf=st.floats(0, 1))
    def test_monotone_in_temperature(self, t1, dt, pattern, rate, conf):
        r = resp(pattern, rate if pattern is not Pattern.APNEA else 0.0, conf)
        a = screen(temp(t1), r)
        b = screen(temp(t1 + dt), r)
        assert not (a.decision is Decision.ALERT and b.decision is Decision.PASS)

    @settings(max_examples=100, deadline=None)
    @given(t=st.floats(30, 42), pattern=st.sampled_from(list(Pattern)), rate=st.floats(0, 50), conf=st.floats(0, 1))
    def test_decision_invariants(self, t, pattern, rate, conf):
        rep = screen(temp(t), resp(pattern, rate, conf))
        alerting = {Reason.FEVER, Reason.ABNORMAL_PATTERN, Reason.RATE_OUT_OF_RANGE}
        assert (rep.decision is Decision.ALERT) == bool(alerting & set(rep.reasons))
        assert (rep.decision is Decision.INCONCLUSIVE) == (rep.reasons == (Reason.LOW_CONFIDENCE,))
        assert (rep.decision is Decision.PASS) == (rep.reasons == ())

    def test_json_keys(self):
        d = screen(temp(36.6), resp(Pattern.EUPNEA)).to_dict()
        assert list(d) == ["body_temp_c", "rate_bpm", "pattern", "confidence", "decision", "reasons", "window_seconds"]
        assert "Pass" in screen(temp(36.6), resp(Pattern.EUPNEA)).summary()

    @pytest.mark.parametrize("kw", [{"fever_threshold": 34.0}, {"fever_threshold": 43.0},
                                    {"rate_hard_min": 30, "rate_hard_max": 6}])
    def test_rules_invariants(self, kw):
        with pytest.raises(ValueError):
            ScreeningRules(**kw)
