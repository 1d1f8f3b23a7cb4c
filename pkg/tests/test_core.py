import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svmdsp.core import (ComplexSeries, EpsHuberParams, InvalidInputError, SampledSignal,
                         SvmSolution, eps_huber_cost, residual_to_multiplier)

losses = st.builds(EpsHuberParams,
                   st.floats(0.0, 3.0), st.floats(0.01, 5.0), st.floats(0.01, 20.0))


@pytest.mark.parametrize("e, loss, expected", [
    (0.5, EpsHuberParams(1.0, 1.0, 1.0), 0.0),
    (2.0, EpsHuberParams(0.0, 1.0, 10.0), 2.0),
    (5.0, EpsHuberParams(1.0, 1.0, 2.0), 6.0),
])
def test_cost_zone_examples(e, loss, expected):
    assert eps_huber_cost(e, loss) == pytest.approx(expected)


@pytest.mark.parametrize("e, loss, expected", [
    (0.3, EpsHuberParams(0.5, 1.0, 1.0), 0.0),
    (-1.0, EpsHuberParams(0.0, 2.0, 10.0), -0.5),
])
def test_multiplier_examples(e, loss, expected):
    assert residual_to_multiplier(e, loss) == pytest.approx(expected)


@given(losses)
def test_multiplier_saturates_beyond_corner(loss):
    assert residual_to_multiplier(loss.corner + 7.0, loss) == pytest.approx(loss.cost_cap)


def test_corner():
    assert EpsHuberParams(0.5, 2.0, 3.0).corner == 6.5


@given(losses, st.floats(-50, 50))
def test_cost_even_multiplier_odd_and_bounded(loss, e):
    assert eps_huber_cost(e, loss) == pytest.approx(eps_huber_cost(-e, loss))
    m = residual_to_multiplier(e, loss)
    assert m == pytest.approx(-residual_to_multiplier(-e, loss))
    assert abs(m) <= loss.cost_cap
    assert eps_huber_cost(e, loss) >= 0.0


@given(losses)
def test_cost_continuous_at_zone_boundaries(loss):
    h = 1e-8
    for b in (loss.eps, loss.corner):
        assert abs(eps_huber_cost(b + h, loss) - eps_huber_cost(b, loss)) < 1e-6
        assert abs(eps_huber_cost(b - h, loss) - eps_huber_cost(b, loss)) < 1e-6


@settings(max_examples=200)
@given(losses, st.floats(-30, 30))
def test_multiplier_is_cost_derivative(loss, e):
    step = 1e-6
    if min(abs(abs(e) - loss.eps), abs(abs(e) - loss.corner)) < 10 * step:
        return
    fd = (eps_huber_cost(e + step, loss) - eps_huber_cost(e - step, loss)) / (2 * step)
    assert residual_to_multiplier(e, loss) == pytest.approx(fd, abs=1e-4)


def test_ls_limit_cost():
    loss = EpsHuberParams(0.0, 0.7, 1e12)
    e = np.linspace(-20, 20, 41)
    np.testing.assert_array_equal(eps_huber_cost(e, loss), e ** 2 / (2 * 0.7))


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite_residual_rejected(bad):
    with pytest.raises(InvalidInputError):
        eps_huber_cost(bad, EpsHuberParams())
    with pytest.raises(InvalidInputError):
        residual_to_multiplier(np.array([0.0, bad]), EpsHuberParams())


@pytest.mark.parametrize("eps, delta, cost", [(-1, 1, 1), (0, 0, 1), (0, 1, 0), (0, 1, math.nan)])
def test_invalid_loss(eps, delta, cost):
    with pytest.raises(InvalidInputError):
        EpsHuberParams(eps, delta, cost)


def test_sampled_signal_validation():
    s = SampledSignal([0.0, 0.5, 2.0], [1.0, 2.0, 3.0])
    assert len(s) == 3 and not s.is_uniform()
    assert SampledSignal.uniform([1, 2, 3], 0.25).is_uniform()
    with pytest.raises(InvalidInputError):
        SampledSignal([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        SampledSignal([0.0, 1.0], [1.0])
    with pytest.raises(InvalidInputError):
        SampledSignal([0.0, 1.0], [1.0, np.nan])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_complex_series():
    assert len(ComplexSeries([1 + 1j, 2])) == 2
    with pytest.raises(InvalidInputError):
        ComplexSeries([np.nan * 1j])


def test_solution_support_indices():
    sol = SvmSolution(np.array([0.0, 1e-9, 0.5, -2.0]), 0.0, cost_cap=2.0)
    np.testing.assert_array_equal(sol.support_indices, [2, 3])
    z = SvmSolution(np.array([0.0, 1e-3j, 0.0]), 0.0, cost_cap=1.0)
    assert z.is_complex and z.n_support == 1
