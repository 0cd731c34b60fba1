import math

import numpy as np
import pytest

from riemctrl.dynamics import ControlCurve, State
from riemctrl.models import builtin_model
from riemctrl.pontryagin import FixedEndpoint, cost_gradient, robotic_problem, shoot
from riemctrl.transcription import direct_transcription


def test_flat_fixture_discretisation_bias():
    # piecewise-constant force overshoots the smooth optimum by 6/N^2
    res = direct_transcription(builtin_model("flat2d"), State([0, 0], [0, 0]), [1, 0], [0, 0], 1.0, nodes=40)
    assert res.success
    assert res.terminal_residual <= 1e-9
    assert res.cost - 6.0 == pytest.approx(6.0 / 40**2, rel=0.05)
    mid = 0.5 * (res.times[:-1] + res.times[1:])
    np.testing.assert_allclose(res.u[:, 0], 6 - 12 * mid, atol=0.05)


def test_pendulum_swing_against_shooting():
    m = builtin_model("pendulum")
    s0 = State([0.0], [0.0])
    res = shoot(m, s0, FixedEndpoint([math.pi / 4], [0.0]), 2.0)
    assert res.converged
    # stationarity of the cost along the shooting extremal, with the terminal multiplier
    lam = ControlCurve(res.trajectory.times, res.trajectory.u)
    grad = cost_gradient(robotic_problem(m, s0, 2.0), lam, terminal_costate=res.terminal_costate)
    assert np.abs(grad.values).max() <= 1e-5
    oracle = direct_transcription(m, s0, [math.pi / 4], [0.0], 2.0, nodes=400)
    assert oracle.success
    assert res.cost <= oracle.cost + 1e-4
    assert oracle.cost - res.cost <= 1e-4
