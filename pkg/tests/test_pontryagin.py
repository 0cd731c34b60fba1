import math

import numpy as np
import pytest

from riemctrl import fd
from riemctrl.dynamics import ControlCurve, State
from riemctrl.errors import DimensionMismatch, NoConvergence
from riemctrl.models import builtin_model
from riemctrl.pontryagin import (
    Costate,
    FixedEndpoint,
    FreeEndpoint,
    GenericControlProblem,
    adjoint_rhs_generic,
    cost,
    cost_gradient,
    directional_derivative,
    integrate_symplectic,
    optimal_control,
    reduced_hamiltonian,
    robotic_hamiltonian,
    robotic_problem,
    shoot,
    symplectic_rhs,
)

from conftest import MODEL_NAMES, random_state


def random_costate(model, rng, scale=1.0):
    return Costate(scale * rng.normal(size=model.dim), scale * rng.normal(size=model.dim))


def smooth_curve(rng, dim):
    a = rng.normal(size=(3, dim))
    w = rng.uniform(1.0, 4.0)
    return lambda t: a[0] + a[1] * np.sin(w * t) + a[2] * t * t


def hamiltonian_gradients(model, state, costate):
    """Central differences of the reduced Hamiltonian in q and qdot."""
    dq = fd.central_grad(lambda q: reduced_hamiltonian(model, State(q, state.qdot), costate), state.q)
    dv = fd.central_grad(lambda v: reduced_hamiltonian(model, State(state.q, v), costate), state.qdot)
    return dq, dv


class TestGenericAdjoint:
    def test_independent_of_state(self):
        pr = GenericControlProblem(f=lambda y, l, t: l, g=lambda y, l, t: 0.5 * float(l @ l), x=[0.0], T=1.0, control_dim=1)
        assert adjoint_rhs_generic(pr, [0.7], [2.0], [0.3], 0.1) == pytest.approx([0.0])

    def test_linear_state(self):
        pr = GenericControlProblem(f=lambda y, l, t: y, g=lambda y, l, t: 0.0, x=[1.0], T=1.0, control_dim=1)
        assert adjoint_rhs_generic(pr, [0.4], [1.0], [0.0], 0.0) == pytest.approx([-1.0], abs=1e-10)

    @pytest.mark.parametrize("name", MODEL_NAMES)
    def test_generic_matches_specialised(self, name, rng):
        m = builtin_model(name)
        for _ in range(10):
            q, v = random_state(m, rng)
            c = random_costate(m, rng)
            s = State(q, v)
            pr = robotic_problem(m, s, 1.0)
            u = optimal_control(m, s, c)
            dP = adjoint_rhs_generic(pr, np.concatenate([q, v]), c.as_vector(), u, 0.0)
            _, _, pdot, xidot = symplectic_rhs(m, s, c)
            np.testing.assert_allclose(dP, np.concatenate([pdot, xidot]), atol=1e-6)

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            GenericControlProblem(f=lambda y, l, t: l, g=lambda y, l, t: 0.0, x=[0.0], T=0.0, control_dim=1)


class TestCostGradient:
    def test_pure_control_cost(self):
        pr = GenericControlProblem(
            f=lambda y, l, t: np.zeros(1), g=lambda y, l, t: 0.5 * float(l @ l), x=[0.0], T=1.0, control_dim=1
        )
        lam = lambda t: np.array([math.cos(3 * t)])
        g = cost_gradient(pr, lam, steps=50)
        np.testing.assert_allclose(g.values[:, 0], np.cos(3 * g.times), atol=1e-14)

    def test_scalar_lq_directional(self, rng):
        pr = GenericControlProblem(
            f=lambda y, l, t: -y + l,
            g=lambda y, l, t: 0.5 * float(y @ y + l @ l),
            x=[1.0],
            T=1.0,
            control_dim=1,
            dfdy=lambda y, l, t: [[-1.0]],
            dgdy=lambda y, l, t: y,
        )
        for _ in range(3):
            lam, dl = smooth_curve(rng, 1), smooth_curve(rng, 1)
            eps = 1e-5
            fd_dir = (cost(pr, lambda t: lam(t) + eps * dl(t), 200) - cost(pr, lambda t: lam(t) - eps * dl(t), 200)) / (2 * eps)
            ad = directional_derivative(cost_gradient(pr, lam, 200), dl)
            assert ad == pytest.approx(fd_dir, rel=1e-4)

    @pytest.mark.parametrize("name,q0", [("pendulum", [0.3]), ("double_pendulum", [0.3, -0.5])])
    def test_robotic_directional(self, name, q0, rng):
        m = builtin_model(name)
        pr = robotic_problem(m, State(q0, np.zeros(m.dim)), 1.0)
        lam, dl = smooth_curve(rng, m.dim), smooth_curve(rng, m.dim)
        eps = 1e-5
        fd_dir = (cost(pr, lambda t: lam(t) + eps * dl(t), 200) - cost(pr, lambda t: lam(t) - eps * dl(t), 200)) / (2 * eps)
        ad = directional_derivative(cost_gradient(pr, lam, 200), dl)
        assert ad == pytest.approx(fd_dir, rel=1e-4)

    def test_vanishes_at_flat_optimum(self):
        m = builtin_model("flat2d")
        s0 = State([0.0, 0.0], [0.0, 0.0])
        res = shoot(m, s0, FixedEndpoint([1.0, 0.0], [0.0, 0.0]), 1.0, steps=200)
        lam = ControlCurve(res.trajectory.times, res.trajectory.u)
        g = cost_gradient(robotic_problem(m, s0, 1.0), lam, 200, terminal_costate=res.terminal_costate)
        assert np.abs(g.values).max() <= 1e-6


class TestHamiltonians:
    def test_flat_value(self):
        m = builtin_model("flat2d")
        h = robotic_hamiltonian(m, State([0.0, 0.0], [2.0, 0.0]), Costate([1.0, 0.0], [1.0, 1.0]), [1.0, 0.0])
        assert h == pytest.approx(2.5, abs=1e-15)

    def test_reduced_flat(self):
        m = builtin_model("flat2d")
        assert reduced_hamiltonian(m, State([0.3, 0.1], [1.0, -2.0]), Costate([0.0, 0.0], [3.0, 4.0])) == 12.5

    def test_reduced_is_value_at_optimum(self, model, rng):
        for _ in range(20):
            q, v = random_state(model, rng)
            s, c = State(q, v), random_costate(model, rng)
            u = optimal_control(model, s, c)
            assert reduced_hamiltonian(model, s, c) == pytest.approx(robotic_hamiltonian(model, s, c, u), abs=1e-12)

    def test_pendulum_blocks(self, rng):
        m = builtin_model("pendulum")
        s = State([0.7], [-0.4])
        c, u = random_costate(m, rng), rng.normal(size=1)
        f = np.concatenate([s.qdot, [-9.81 * math.sin(0.7) + u[0]]])
        g = 0.5 * u[0] ** 2
        assert robotic_hamiltonian(m, s, c, u) == pytest.approx(float(c.as_vector() @ f) - g, abs=1e-12)

    def test_optimal_force_maximises(self, model, rng):
        for _ in range(20):
            q, v = random_state(model, rng)
            s, c = State(q, v), random_costate(model, rng)
            u = optimal_control(model, s, c)
            grad = fd.central_grad(lambda w: robotic_hamiltonian(model, s, c, w), u)
            assert np.abs(grad).max() <= 1e-8
            h0 = robotic_hamiltonian(model, s, c, u)
            for _ in range(5):
                assert robotic_hamiltonian(model, s, c, u + 0.1 * rng.normal(size=model.dim)) < h0


class TestSymplecticRhs:
    def test_flat(self, rng):
        m = builtin_model("flat2d")
        s, c = State(rng.normal(size=2), rng.normal(size=2)), random_costate(m, rng)
        _, qdd, pdot, xidot = symplectic_rhs(m, s, c)
        np.testing.assert_array_equal(pdot, 0.0)
        np.testing.assert_array_equal(xidot, -c.p)
        np.testing.assert_array_equal(qdd, c.xi)

    def test_pendulum_at_rest(self):
        m = builtin_model("pendulum")
        _, _, pdot, xidot = symplectic_rhs(m, State([0.4], [0.0]), Costate([0.8], [0.0]))
        np.testing.assert_array_equal(pdot, [0.0])
        np.testing.assert_array_equal(xidot, [-0.8])

    def test_matches_hamiltonian_gradient(self, model, rng):
        for _ in range(20):
            q, v = random_state(model, rng)
            s, c = State(q, v), random_costate(model, rng)
            _, _, pdot, xidot = symplectic_rhs(model, s, c)
            dq, dv = hamiltonian_gradients(model, s, c)
            np.testing.assert_allclose(pdot, -dq, atol=1e-5)
            np.testing.assert_allclose(xidot, -dv, atol=1e-5)

    def test_fd_model_agrees(self, model, rng):
        num = model.fd_only()
        q, v = random_state(model, rng)
        s, c = State(q, v), random_costate(model, rng)
        for a, b in zip(symplectic_rhs(num, s, c), symplectic_rhs(model, s, c)):
            np.testing.assert_allclose(a, b, atol=1e-5)


class TestIntegrateSymplectic:
    def test_zero_costate(self):
        m = builtin_model("flat2d")
        tr = integrate_symplectic(m, State([0.0, 1.0], [0.5, 0.0]), Costate([0.0, 0.0], [0.0, 0.0]), 1.0, 100)
        assert np.all(tr.u == 0.0)
        np.testing.assert_allclose(tr.q[:, 0], 0.5 * tr.times, atol=1e-15)

    def test_minimum_energy_fixture(self):
        # xi' = -p, so the force 6 - 12t needs p0 = +12
        m = builtin_model("flat2d")
        tr = integrate_symplectic(m, State([0.0, 0.0], [0.0, 0.0]), Costate([12.0, 0.0], [6.0, 0.0]), 1.0)
        np.testing.assert_allclose(tr.q[-1], [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(tr.qdot[-1], [0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(tr.u[:, 0], 6 - 12 * tr.times, atol=1e-12)
        assert tr.cost == pytest.approx(6.0, abs=1e-12)

    def test_hamiltonian_conserved(self, rng):
        m = builtin_model("double_pendulum")
        tr = integrate_symplectic(m, State(rng.uniform(-1, 1, 2), rng.normal(size=2)), random_costate(m, rng), 1.0, 1000)
        assert np.abs(tr.H - tr.H[0]).max() <= 1e-6

    def test_hamiltonian_fourth_order(self, rng):
        m = builtin_model("double_pendulum")
        s, c = State(rng.uniform(-1, 1, 2), 0.5 * rng.normal(size=2)), random_costate(m, rng, 0.5)
        drift = [np.abs(tr.H - tr.H[0]).max() for tr in (integrate_symplectic(m, s, c, 1.0, n) for n in (125, 250, 500))]
        for a, b in zip(drift, drift[1:]):
            assert 3.5 <= math.log2(a / b) <= 4.5


class TestShoot:
    @pytest.mark.parametrize("name", ["flat2d", "pendulum", "curved_fixture"])
    def test_free_endpoint(self, name):
        m = builtin_model(name)
        q0 = np.full(m.dim, 0.5) if name != "curved_fixture" else np.array([1.0, 0.2])
        res = shoot(m, State(q0, np.full(m.dim, 0.1)), FreeEndpoint(), 1.0, steps=200)
        assert res.converged and res.iterations == 0
        assert res.cost == 0.0 and np.all(res.trajectory.u == 0.0)

    def test_flat_fixed(self):
        m = builtin_model("flat2d")
        res = shoot(m, State([0.0, 0.0], [0.0, 0.0]), FixedEndpoint([1.0, 0.0], [0.0, 0.0]), 1.0, steps=500)
        assert res.converged and res.residual <= 1e-8
        assert res.cost == pytest.approx(6.0, abs=1e-6)
        np.testing.assert_allclose(res.trajectory.u[0], [6.0, 0.0], atol=1e-6)
        np.testing.assert_allclose(res.trajectory.u[-1], [-6.0, 0.0], atol=1e-6)
        np.testing.assert_allclose(res.costate0.as_vector(), [12.0, 0.0, 6.0, 0.0], atol=1e-6)

    def test_no_convergence(self):
        m = builtin_model("double_pendulum")
        with pytest.raises(NoConvergence) as info:
            shoot(m, State([0.0, 0.0], [0.0, 0.0]), FixedEndpoint([3.0, -1.0], [0.0, 0.0]), 2.0, steps=400, max_iters=1)
        assert info.value.iterations == 1
        assert info.value.residual > 1e-8
        assert info.value.result is not None and not info.value.result.converged

    def test_no_raise(self):
        m = builtin_model("pendulum")
        res = shoot(
            m, State([0.0], [0.0]), FixedEndpoint([1.0], [0.0]), 1.0, steps=200, max_iters=1, tol=1e-14, raise_on_failure=False
        )
        assert not res.converged and res.iterations == 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            shoot(builtin_model("pendulum"), State([0.0], [0.0]), FixedEndpoint([1.0, 0.0], [0.0, 0.0]), 1.0)

    def test_warm_start(self):
        m = builtin_model("flat2d")
        guess = Costate([12.0, 0.0], [6.0, 0.0])
        res = shoot(m, State([0.0, 0.0], [0.0, 0.0]), FixedEndpoint([1.0, 0.0], [0.0, 0.0]), 1.0, steps=200, guess=guess)
        assert res.converged and res.iterations == 0
