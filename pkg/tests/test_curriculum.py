import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcot.curriculum import (CurriculumSchedule, LingualWeightSchedule, TrainingClock, h,
                             lingual_weight, mix_costs, schedule_table, sigma)
from dcot.errors import ConfigError, DimMismatch, OutOfRange

DYN = CurriculumSchedule(tau=0.1, gamma=0.2)


def test_h_examples():
    assert h(0.0, 0.2) == 0.0
    assert h(1.0, 0.2) == pytest.approx(0.2, abs=1e-12)
    assert h(0.5, 0.6) == pytest.approx(0.2, abs=1e-15)
    with pytest.raises(OutOfRange):
        h(1.5, 0.2)


def test_sigma_examples():
    assert sigma(0.0, DYN) == 0.0
    assert sigma(0.2, DYN) == 1.0
    # literal reading: h(t * tau); exact rational evaluation as oracle
    z = Fraction(5, 100) * Fraction(1, 10)
    expected = float(Fraction(2, 10) * z / (2 - z))
    assert sigma(0.05, DYN) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(5.0125e-4, rel=1e-4)


def test_sigma_rescaled():
    sched = CurriculumSchedule(tau=0.1, gamma=0.2, interpretation="rescaled")
    assert sigma(0.05, sched) == pytest.approx(0.2 * 0.5 / 1.5)
    assert sigma(0.1, sched) == pytest.approx(0.2)
    assert sigma(0.1000001, sched) == 1.0


def test_sigma_plain_and_reverse():
    plain = CurriculumSchedule(variant="plain", sigma_fixed=0.3)
    assert all(sigma(t, plain) == 0.3 for t in np.linspace(0, 1, 11))
    rev = CurriculumSchedule(variant="reverse")
    assert sigma(0.0, rev) == 1.0
    assert sigma(0.5, rev) == 0.0


def test_sigma_out_of_range():
    with pytest.raises(OutOfRange):
        sigma(-0.1, DYN)
    with pytest.raises(OutOfRange):
        sigma(1.01, DYN)


@given(st.floats(0, 1), st.floats(0, 1))
def test_dynamic_monotone(t1, t2):
    for sched in (DYN, CurriculumSchedule(tau=0.065, gamma=0.6, interpretation="rescaled")):
        lo, hi = sorted((t1, t2))
        assert sigma(lo, sched) <= sigma(hi, sched)
        if hi > sched.tau:
            assert sigma(hi, sched) == 1.0


@given(st.floats(0, 1), st.floats(0.01, 0.99), st.floats(0.01, 5))
def test_reverse_complements_dynamic(t, tau, gamma):
    dyn = CurriculumSchedule(tau=tau, gamma=gamma)
    rev = CurriculumSchedule(tau=tau, gamma=gamma, variant="reverse")
    assert sigma(t, dyn) + sigma(t, rev) == pytest.approx(1.0, abs=1e-15)
    assert 0.0 <= sigma(t, dyn) <= 1.0


def test_mix_costs_examples():
    Em, El = np.array([[2.0]]), np.array([[0.0]])
    np.testing.assert_array_equal(mix_costs(Em, El, 1.0), Em)
    np.testing.assert_array_equal(mix_costs(Em, El, 0.0), El)
    np.testing.assert_array_equal(mix_costs(Em, El, 0.5), [[1.0]])
    with pytest.raises(DimMismatch):
        mix_costs(np.zeros((2, 2)), np.zeros((3, 3)), 0.5)


@given(st.floats(0, 1))
def test_mix_costs_swap_symmetry(s):
    r = np.random.default_rng(0)
    A, B = r.uniform(0, 2, (4, 4)), r.uniform(0, 2, (4, 4))
    np.testing.assert_allclose(mix_costs(A, B, s), mix_costs(B, A, 1.0 - s), atol=1e-15)
    assert np.all(mix_costs(A, B, s) >= 0)


def test_lingual_weight_examples():
    sched = LingualWeightSchedule(k=1.0, epsilon=10.0, tau=0.1)
    assert lingual_weight(1.0, sched) == pytest.approx(0.5, abs=1e-12)
    assert lingual_weight(0.3, LingualWeightSchedule(k=0.0, epsilon=3.0, tau=0.5)) == 1.0
    assert lingual_weight(0.0, sched) == pytest.approx(1.0 / (1.0 + math.exp(-10.0)), rel=1e-15)
    assert lingual_weight(0.0, sched) == pytest.approx(0.9999546, abs=1e-7)


@given(st.floats(0, 1), st.floats(0, 1))
def test_lingual_weight_decreasing(t1, t2):
    sched = LingualWeightSchedule(k=1.0, epsilon=10.0, tau=0.1)
    lo, hi = sorted((t1, t2))
    if hi - lo > 1e-6:
        assert lingual_weight(hi, sched) < lingual_weight(lo, sched)


def test_schedule_table_shape_and_jump():
    rows = schedule_table(DYN, LingualWeightSchedule())
    assert len(rows) == 101
    assert rows[0][0] == 0.0 and rows[-1][0] == 1.0
    assert all(s == 1.0 for t, s, _ in rows if t > 0.1)


def test_validation():
    with pytest.raises(ConfigError):
        CurriculumSchedule(tau=1.0)
    with pytest.raises(ConfigError):
        CurriculumSchedule(variant="zigzag")
    with pytest.raises(ConfigError):
        CurriculumSchedule(variant="plain", sigma_fixed=1.5)
    with pytest.raises(ConfigError):
        LingualWeightSchedule(k=-1)
    with pytest.raises(ConfigError):
        TrainingClock(5, 4)
    assert TrainingClock(1, 4).t == 0.25


def test_presets():
    s = CurriculumSchedule.preset("mscoco")
    assert (s.tau, s.gamma) == (0.065, 0.6)
