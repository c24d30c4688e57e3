import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhfeedback.steppers import (DlaState, IntegrationError, StepperKind, dla_multiplier, dla_step, integrate,
                                 integrate_dla, step)
from nhfeedback.systems import make_entry
from nhfeedback.systems.suslov import exact_momentum


def decay(x):
    return -x


def test_parse_kind():
    assert StepperKind.parse("RK4") is StepperKind.RK4
    assert StepperKind.parse(" euler ") is StepperKind.EULER
    with pytest.raises(ValueError):
        StepperKind.parse("leapfrog")


@pytest.mark.parametrize("kind", ["euler", "rk4"])
def test_zero_field_leaves_state(kind):
    x = np.array([1.0, -2.0, 3.5])
    assert np.array_equal(step(kind, lambda y: np.zeros_like(y), x, 0.1), x)


def test_linear_decay_single_steps():
    assert step("euler", decay, np.array([1.0]), 0.1)[0] == pytest.approx(0.9, abs=1e-15)
    h = 0.1
    taylor = 1 - h + h ** 2 / 2 - h ** 3 / 6 + h ** 4 / 24
    assert step("rk4", decay, np.array([1.0]), h)[0] == pytest.approx(taylor, abs=1e-15)
    assert taylor == pytest.approx(0.9048375, abs=1e-7)


@pytest.mark.parametrize("dt", [0.0, -1e-3, math.inf, math.nan])
def test_bad_step_sizes(dt):
    with pytest.raises(ValueError):
        step("euler", decay, np.ones(1), dt)
    with pytest.raises(ValueError):
        integrate("euler", decay, np.ones(1), dt, 1.0)


def test_dla_kind_rejected_by_generic_steppers():
    with pytest.raises(ValueError):
        step("dla", decay, np.ones(1), 0.1)
    with pytest.raises(ValueError):
        integrate("dla", decay, np.ones(1), 0.1, 1.0)


def test_nonfinite_step_raises():
    with pytest.raises(IntegrationError):
        step("euler", lambda x: np.array([np.nan]), np.ones(1), 0.1)


def test_failure_carries_partial_record():
    # x' = x^2 from 1 blows up at t = 1; Euler overflows a little later
    def f(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return x * x

    with pytest.raises(IntegrationError) as info:
        integrate("euler", f, np.ones(1), 0.1, 10.0)
    err = info.value
    assert err.step is not None and err.step > 1
    rec = err.record
    assert rec.failed and len(rec) >= 1 and np.all(np.isfinite(rec.states))
    assert str(err.step) in rec.message
    rec2 = integrate("euler", f, np.ones(1), 0.1, 10.0, raise_on_failure=False)
    assert rec2.failed and len(rec2) == len(rec)


def test_record_shape_and_observers():
    rec = integrate("rk4", decay, np.array([1.0, 2.0]), 0.01, 1.0, observers={"norm": lambda t, x: np.linalg.norm(x)})
    assert len(rec) == 101 and rec.states.shape == (101, 2)
    assert rec.times[-1] == pytest.approx(1.0)
    assert np.allclose(rec.channels["norm"], np.linalg.norm(rec.states, axis=1))
    assert np.allclose(rec.states[-1], [math.exp(-1), 2 * math.exp(-1)], atol=1e-9)


@given(st.integers(1, 40), st.integers(1, 13))
def test_stride_always_keeps_endpoints(N, stride):
    rec = integrate("euler", decay, np.ones(1), 0.1, N * 0.1, stride=stride)
    assert rec.times[0] == 0.0 and rec.times[-1] == pytest.approx(N * 0.1)
    assert len(rec) == len(range(0, N + 1, stride)) + (N % stride != 0)
    full = integrate("euler", decay, np.ones(1), 0.1, N * 0.1)
    assert np.array_equal(rec.states[-1], full.states[-1])


def test_zero_horizon_gives_single_state():
    rec = integrate("euler", decay, np.array([3.0]), 1e-3, 0.0)
    assert len(rec) == 1 and rec.states[0, 0] == 3.0


def test_heisenberg_free_flow_is_exact_under_euler():
    e = make_entry("heisenberg")
    x0 = e.initial_state
    rec = integrate("euler", e.field, x0, 1e-2, 5.0, layout=e.layout)
    assert np.allclose(rec.get("q")[-1], x0[:3] + 5.0 * x0[3:], atol=1e-12)
    assert np.array_equal(rec.get("p")[-1], x0[3:])


def _suslov_error(kind, dt):
    e = make_entry("suslov")
    rec = integrate(kind, e.field, e.initial_state, dt, 1.0, layout=e.layout)
    return np.abs(rec.get("Pi") - exact_momentum(rec.times)).max()


def test_order_of_accuracy_on_exact_solution():
    euler = _suslov_error("euler", 1e-3) / _suslov_error("euler", 5e-4)
    rk4 = _suslov_error("rk4", 0.1) / _suslov_error("rk4", 0.05)
    assert 1.8 <= euler <= 2.2
    assert 12 <= rk4 <= 20


def test_dla_examples():
    for h in (1e-3, 0.1, 0.5):
        s = DlaState(np.ones(3), np.ones(3), h)
        assert dla_multiplier(s.q_prev, s.q_curr, h) == pytest.approx(-1.0)
        n = dla_step(s)
        assert np.allclose(n.q_curr, [1, 1 - h * h, 1])
        assert n.residual == 0.0
        assert np.allclose(n.momentum, [0, -h, 0])
    z = dla_step(DlaState(np.zeros(3), np.zeros(3), 0.1))
    assert np.array_equal(z.q_curr, np.zeros(3))


@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6), st.floats(1e-3, 0.2))
def test_dla_step_satisfies_discrete_constraint(vals, h):
    s = dla_step(DlaState(vals[:3], vals[3:], h))
    assert abs(s.residual) <= 1e-12 * (1 + np.abs(s.q_curr).max()) ** 2


def test_dla_run_matches_single_steps():
    q0 = q1 = np.ones(3)
    rec = integrate_dla(q0, q1, 0.01, 0.5)
    s = DlaState(q0, q1, 0.01)
    for i in range(1, len(rec)):
        assert np.allclose(rec.states[i, :3], s.q_curr, atol=1e-14)
        assert np.allclose(rec.states[i, 3:], s.momentum, atol=1e-12)
        s = dla_step(s)
    assert len(rec.extras["step_residual"]) == 50


def test_dla_long_run_constraint_exactness():
    rec = integrate_dla(np.ones(3), np.ones(3), 1e-3, 200.0, stride=1000)
    assert len(rec.extras["step_residual"]) == 200_000
    assert np.abs(rec.extras["step_residual"]).max() <= 1e-12
