import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwbheading import gp, heading, so2

SMALL_SEARCH = gp.HyperparamSearchConfig(grid_size=3, descent_rounds=20, max_points=300)


def unit_circle_trig(theta, r_s=0.0025, r_c=0.0025):
    return heading.PseudoTrig(
        s=math.sin(theta), c=math.cos(theta), var_s=r_s, var_c=r_c
    )


# --- normalize ---------------------------------------------------------------


def test_normalize_identity_point():
    m = heading.normalize(heading.PseudoTrig(s=0.0, c=1.0, var_s=0.04, var_c=0.09))
    assert np.allclose(m.rot, np.eye(2), atol=1e-15)
    assert m.var_theta == pytest.approx(0.04, rel=1e-12)


def test_normalize_quarter_turn_swaps_roles():
    m = heading.normalize(heading.PseudoTrig(s=1.0, c=0.0, var_s=0.77, var_c=0.09))
    assert np.allclose(m.rot, so2.exp_so2(math.pi / 2), atol=1e-15)
    assert m.var_theta == pytest.approx(0.09, rel=1e-12)


def test_normalize_radial_scale_shrinks_variance():
    base = heading.normalize(heading.PseudoTrig(s=1.0, c=0.0, var_s=0.3, var_c=0.09))
    scaled = heading.normalize(heading.PseudoTrig(s=2.0, c=0.0, var_s=0.3, var_c=0.09))
    assert np.allclose(scaled.rot, base.rot, atol=1e-15)
    assert scaled.var_theta == pytest.approx(base.var_theta / 4.0, rel=1e-12)


def test_normalize_angle_is_atan2():
    for s, c in [(0.4, 1.2), (-0.9, 0.2), (2.0, -3.0), (-0.1, -0.1)]:
        m = heading.normalize(heading.PseudoTrig(s=s, c=c, var_s=0.01, var_c=0.01))
        assert so2.log_so2(m.rot) == pytest.approx(math.atan2(s, c), abs=1e-12)


def test_normalize_rejects_degenerate_disc():
    with pytest.raises(heading.DegeneratePredictionError):
        heading.normalize(heading.PseudoTrig(s=1e-4, c=1e-4, var_s=0.01, var_c=0.01))


def test_normalize_variance_floor():
    m = heading.normalize(heading.PseudoTrig(s=0.0, c=1.0, var_s=1e-12, var_c=1e-12))
    assert m.var_theta == heading.VAR_FLOOR


@given(
    st.floats(min_value=-5.0, max_value=5.0),
    st.floats(min_value=-5.0, max_value=5.0),
    st.floats(min_value=1.01, max_value=50.0),
)
@settings(max_examples=150)
def test_normalize_scale_invariance_and_validity(s, c, a):
    if math.hypot(s, c) < 10 * heading.NORM_EPS:
        return
    m1 = heading.normalize(heading.PseudoTrig(s=s, c=c, var_s=0.01, var_c=0.02))
    m2 = heading.normalize(heading.PseudoTrig(s=a * s, c=a * c, var_s=0.01, var_c=0.02))
    assert so2.is_rotation(m1.rot, tol=1e-12)
    assert np.abs(m1.rot - m2.rot).max() < 1e-9


def test_normalize_radial_perturbation_insensitive():
    # perturbing (s, c) along its own direction leaves the angle unchanged
    # to first order: the D/E jacobians are tangential only
    for theta in np.linspace(-3.0, 3.0, 7):
        s, c = math.sin(theta), math.cos(theta)
        m = heading.normalize(unit_circle_trig(theta))
        eps = 1e-7
        m2 = heading.normalize(
            heading.PseudoTrig(
                s=s * (1 + eps), c=c * (1 + eps), var_s=0.0025, var_c=0.0025
            )
        )
        d = so2.wrap_angle(so2.log_so2(m2.rot) - so2.log_so2(m.rot))
        assert abs(d) < 1e-12


def test_normalize_variance_matches_monte_carlo():
    # scaled-down version of the full acceptance check
    rng = np.random.default_rng(0)
    for theta in (0.0, math.pi / 3, -2.0, 2.9):
        pt = unit_circle_trig(theta)
        m = heading.normalize(pt)
        s_draw = pt.s + math.sqrt(pt.var_s) * rng.standard_normal(20000)
        c_draw = pt.c + math.sqrt(pt.var_c) * rng.standard_normal(20000)
        sampled = so2.wrap_angle(np.arctan2(s_draw, c_draw) - theta)
        assert np.var(sampled) == pytest.approx(m.var_theta, rel=0.15)


# --- feature / measurement types ----------------------------------------------


def test_feature_validation():
    with pytest.raises(ValueError):
        heading.UwbFeature(ranges=np.array([1.0, -1.0, 1, 1, 1]), rss=np.zeros(5))
    with pytest.raises(ValueError):
        heading.UwbFeature(ranges=np.ones(5), rss=np.array([np.inf, 0, 0, 0, 0]))
    f = heading.UwbFeature(ranges=np.ones(5), rss=-80.0 * np.ones(5))
    assert f.as_vector().shape == (10,)


def test_measurement_requires_rotation_and_positive_variance():
    with pytest.raises(ValueError):
        heading.HeadingMeasurement(rot=np.eye(2) * 2.0, var_theta=0.1)
    with pytest.raises(ValueError):
        heading.HeadingMeasurement(rot=np.eye(2), var_theta=0.0)


# --- training ------------------------------------------------------------------


def random_features(rng, m):
    return np.hstack(
        [rng.uniform(0.5, 6.0, size=(m, 5)), rng.uniform(-95.0, -70.0, size=(m, 5))]
    )


def test_train_constant_heading():
    rng = np.random.default_rng(1)
    feats = random_features(rng, 40)
    pair = heading.train_heading_gps(
        feats, np.full(40, math.pi / 2), SMALL_SEARCH
    )
    s, vs = pair.gp_sin.predict_many(feats)
    c, vc = pair.gp_cos.predict_many(feats)
    assert np.abs(s - 1.0).max() < 0.05
    assert np.abs(c).max() < 0.05


def test_train_two_separated_clusters():
    rng = np.random.default_rng(2)
    center_a = np.concatenate([np.full(5, 2.0), np.full(5, -75.0)])
    center_b = np.concatenate([np.full(5, 6.0), np.full(5, -90.0)])
    feats = np.vstack(
        [
            center_a + rng.normal(scale=[0.05] * 5 + [0.2] * 5, size=(25, 10)),
            center_b + rng.normal(scale=[0.05] * 5 + [0.2] * 5, size=(25, 10)),
        ]
    )
    gts = np.concatenate([np.zeros(25), np.full(25, math.pi)])
    pair = heading.train_heading_gps(feats, gts, SMALL_SEARCH)
    for center, want_c in ((center_a, 1.0), (center_b, -1.0)):
        pt = heading.predict_pseudo_trig(
            pair, heading.UwbFeature(ranges=center[:5], rss=center[5:])
        )
        assert abs(pt.s) < 0.1
        assert pt.c == pytest.approx(want_c, abs=0.1)


def test_predict_prior_reversion_far_from_training():
    rng = np.random.default_rng(3)
    feats = random_features(rng, 30)
    gts = rng.uniform(-math.pi, math.pi, size=30)
    pair = heading.train_heading_gps(feats, gts, SMALL_SEARCH)
    far = heading.UwbFeature(ranges=np.full(5, 500.0), rss=np.full(5, 300.0))
    pt = heading.predict_pseudo_trig(pair, far)
    assert pt.s == pytest.approx(np.mean(np.sin(gts)), abs=1e-6)
    assert pt.c == pytest.approx(np.mean(np.cos(gts)), abs=1e-6)
    assert pt.var_s >= 0.5 * pair.gp_sin.params.sigma_f**2


def test_predict_is_deterministic():
    rng = np.random.default_rng(4)
    feats = random_features(rng, 20)
    gts = rng.uniform(-math.pi, math.pi, size=20)
    pair = heading.train_heading_gps(feats, gts, SMALL_SEARCH)
    f = heading.UwbFeature(ranges=feats[0, :5], rss=feats[0, 5:])
    assert heading.predict_pseudo_trig(pair, f) == heading.predict_pseudo_trig(pair, f)


def test_variance_floor_on_predictions():
    rng = np.random.default_rng(5)
    feats = random_features(rng, 20)
    pair = heading.train_heading_gps(feats, np.zeros(20), SMALL_SEARCH)
    pt = heading.predict_pseudo_trig(
        pair, heading.UwbFeature(ranges=feats[0, :5], rss=feats[0, 5:])
    )
    assert pt.var_s >= heading.VAR_FLOOR
    assert pt.var_c >= heading.VAR_FLOOR


def test_train_rejects_bad_input():
    with pytest.raises(ValueError):
        heading.train_heading_gps(np.ones((1, 10)), np.array([0.0]))
    with pytest.raises(ValueError):
        heading.train_heading_gps(np.ones((3, 10)), np.array([0.0, np.nan, 1.0]))


def test_pair_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    feats = random_features(rng, 25)
    gts = rng.uniform(-math.pi, math.pi, size=25)
    pair = heading.train_heading_gps(feats, gts, SMALL_SEARCH)
    pair.save(tmp_path / "model")
    loaded = heading.HeadingGpPair.load(tmp_path / "model")
    queries = random_features(rng, 10)
    for orig, back in zip(
        heading.predict_pseudo_trig_many(pair, queries),
        heading.predict_pseudo_trig_many(loaded, queries),
    ):
        assert orig.s == pytest.approx(back.s, abs=1e-10)
        assert orig.var_s == pytest.approx(back.var_s, abs=1e-10)
