import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmkit import sampler as sm
from dmkit.hadamard import HadamardTestSpec
from dmkit.protocols import state_spec
from dmkit.qmodel import random_state


@pytest.mark.parametrize("a,k,expected", [(0.0, 1.0, 0.5), (1.0, 1.0, 1.0), (0.5, 0.5, 1.0)])
def test_p_plus_examples(a, k, expected):
    assert sm.p_plus(a, k) == expected


def test_p_plus_out_of_range():
    with pytest.raises(ValueError):
        sm.p_plus(0.6, 0.5)


def test_variance_predicted_examples():
    assert sm.variance_predicted(0.0, 1.0, 100) == pytest.approx(0.01)
    assert sm.variance_predicted(1.0, 1.0, 7) == 0.0
    ratio = sm.variance_predicted(0.1, 1 / 3, 1) / sm.variance_predicted(0.1, 1.0, 1)
    assert ratio == pytest.approx((1 / 9 - 0.01) / (1 - 0.01))


def test_shot_plan_validation():
    with pytest.raises(ValueError):
        sm.ShotPlan(0)
    with pytest.raises(ValueError):
        sm.ShotPlan(10, k=0.0)


def test_degenerate_outcome_has_no_spread():
    est = sm.sample_estimator(1.0, sm.ShotPlan(1000, seed=4))
    assert est.estimate == 1.0 and est.sample_variance == 0.0


def test_zero_target_concentrates():
    est = sm.sample_estimator(0.0, sm.ShotPlan(10**6, seed=11))
    assert abs(est.estimate) < 5e-3


def test_sample_variance_matches_law():
    n = 10**5
    ests = [sm.sample_estimator(0.6, sm.ShotPlan(n, seed=s)) for s in range(200)]
    mean_var = np.mean([e.sample_variance for e in ests])
    assert abs(mean_var - (1 - 0.36) / n) <= 0.05 * (1 - 0.36) / n


def test_seeded_determinism():
    a = sm.sample_estimator(0.3, sm.ShotPlan(500, seed=9))
    b = sm.sample_estimator(0.3, sm.ShotPlan(500, seed=9))
    c = sm.sample_estimator(0.3, sm.ShotPlan(500, seed=10))
    assert a == b and a != c


def test_rng_streams_depend_on_full_key():
    x = sm.make_rng(1, 2, 3).random(4)
    np.testing.assert_array_equal(x, sm.make_rng(1, 2, 3).random(4))
    assert not np.array_equal(x, sm.make_rng(1, 3, 2).random(4))


def test_sample_hadamard_shift_element():
    rho = np.eye(3) / 3
    spec = state_spec(rho, 0, 0, "shift")
    est = sm.sample_hadamard(spec, sm.ShotPlan(10**5, seed=3, k=1.0))
    assert abs(est.estimate - 1 / 3) < 0.02


def test_sample_hadamard_identity_config_is_exact():
    spec = HadamardTestSpec(np.eye(2), np.eye(2), np.eye(2) / 2, np.eye(2))
    est = sm.sample_hadamard(spec, sm.ShotPlan(1000, seed=1))
    assert est.estimate == 1.0 and est.sample_variance == 0.0


def test_projector_config_targets_same_element_with_more_spread(rng):
    d = 3
    rho = random_state(d, rng).matrix
    n, seeds = 4000, 200
    shift = [sm.sample_hadamard(state_spec(rho, 0, 1, "shift"), sm.ShotPlan(n, s, 1.0)).estimate
             for s in range(seeds)]
    mub = [sm.sample_hadamard(state_spec(rho, 0, 1, "mub"), sm.ShotPlan(n, s, float(d))).estimate
           for s in range(seeds)]
    target = rho[0, 1].real
    for sample, k in ((shift, 1.0), (mub, float(d))):
        sd = np.sqrt(sm.variance_predicted(target, k, n) / seeds)
        assert abs(np.mean(sample) - target) < 4 * sd
    assert np.var(mub) > np.var(shift)


def test_sample_hadamard_rejects_misscaled():
    spec = HadamardTestSpec(2 * np.eye(2), np.eye(2), np.eye(2) / 2, np.eye(2))
    with pytest.raises(ValueError):
        sm.sample_hadamard(spec, sm.ShotPlan(10))


def test_variance_sweep_skips_inadmissible_points():
    rows = list(sm.variance_sweep([0.0, 0.6], [1.0, 0.5], 100, 3, seed=2))
    assert [(r["A"], r["k"]) for r in rows] == [(0.0, 1.0), (0.0, 0.5), (0.6, 1.0)]
    assert all(r["n_seeds"] == 3 for r in rows)


@given(st.floats(min_value=-1, max_value=1), st.sampled_from([2, 3, 5]))
def test_shift_beats_equal_target_projector(a, d):
    # same element, read at k = 1 (shift) and k = d (projector readout rescaled)
    assert sm.variance_predicted(a, 1.0, 1) < sm.variance_predicted(a, float(d), 1)


@given(st.floats(min_value=-1, max_value=1), st.floats(min_value=0.05, max_value=1))
def test_p_plus_reproduces_target(a, k):
    a = a * k
    assert abs(k * (2 * sm.p_plus(a, k) - 1) - a) < 1e-12


@given(st.integers(min_value=0, max_value=10**6), st.floats(min_value=-1, max_value=1),
       st.integers(min_value=2, max_value=500))
def test_sample_variance_non_negative(seed, a, n):
    est = sm.sample_estimator(a, sm.ShotPlan(n, seed))
    assert est.sample_variance >= 0 and abs(est.estimate) <= 1
