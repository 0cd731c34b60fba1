import math

import numpy as np
import pytest

from riemctrl import fd
from riemctrl.errors import ChartDomain, DimensionMismatch, NotPositiveDefinite
from riemctrl.geometry import (
    check_spd,
    christoffel_at,
    christoffel_grad_at,
    covariant_derivative_covector,
    covariant_derivative_vector,
    inverse_metric_at,
    inverse_metric_grad_at,
    lower_index,
    metric_at,
    metric_grad_at,
    raise_index,
    ricci_residuals,
    riemann_at,
    second_gradient_at,
)
from riemctrl.models import builtin_model, map_point

from conftest import MODEL_NAMES


def christoffel_oracle(metric, q):
    """Defining formula with central differences of the metric only."""
    q = np.asarray(q, dtype=float)
    n = q.size
    dm = np.empty((n, n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1e-6
        dm[i] = (metric(q + e) - metric(q - e)) / 2e-6
    minv = np.linalg.inv(metric(q))
    g = np.empty((n, n, n))
    for j in range(n):
        for i in range(n):
            for k in range(n):
                g[j, i, k] = 0.5 * sum(minv[j, l] * (dm[i, l, k] + dm[k, l, i] - dm[l, i, k]) for l in range(n))
    return g


def riemann_from_field(gamma, q, h=1e-5):
    """Riemann tensor from a Christoffel field by central differences."""
    q = np.asarray(q, dtype=float)
    n = q.size
    dg = np.empty((n, n, n, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        dg[m] = (gamma(q + e) - gamma(q - e)) / (2 * h)
    G = gamma(q)
    r = np.zeros((n, n, n, n))
    for j in range(n):
        for i in range(n):
            for k in range(n):
                for l in range(n):
                    r[j, i, k, l] = dg[l, j, i, k] - dg[k, j, i, l] + sum(
                        G[p, i, k] * G[j, p, l] - G[p, i, l] * G[j, p, k] for p in range(n)
                    )
    return r


def sphere_christoffel(q):
    # hand derivation for M = diag(1, sin^2 q1):
    # Gamma^1_22 = -sin q1 cos q1, Gamma^2_12 = Gamma^2_21 = cot q1
    s, c = math.sin(q[0]), math.cos(q[0])
    g = np.zeros((2, 2, 2))
    g[0, 1, 1] = -s * c
    g[1, 0, 1] = g[1, 1, 0] = c / s
    return g


class TestMetric:
    def test_flat_identity(self):
        m = builtin_model("flat2d")
        np.testing.assert_array_equal(metric_at(m, [0.3, -1.2]), np.eye(2))

    def test_polar_diagonal(self):
        m = builtin_model("polar2d")
        np.testing.assert_allclose(metric_at(m, [2.0, 0.7]), np.diag([1.0, 4.0]), rtol=0, atol=1e-15)

    def test_stored_symmetric(self, model, rng):
        for _ in range(20):
            M = metric_at(model, model.chart.sample(rng))
            np.testing.assert_array_equal(M, M.T)

    def test_inverse(self, model, rng):
        for _ in range(20):
            q = model.chart.sample(rng)
            M, Minv = metric_at(model, q), inverse_metric_at(model, q)
            np.testing.assert_allclose(M @ Minv, np.eye(model.dim), atol=1e-12 * np.linalg.cond(M))

    def test_polar_origin_outside_chart(self):
        with pytest.raises(ChartDomain):
            metric_at(builtin_model("polar2d"), [0.0, 0.3])
        with pytest.raises(ChartDomain):
            metric_at(builtin_model("curved_fixture"), [0.05, 0.0])

    def test_wrong_length(self):
        with pytest.raises(DimensionMismatch):
            metric_at(builtin_model("pendulum"), [0.1, 0.2])

    def test_spd_failures(self):
        with pytest.raises(NotPositiveDefinite):
            check_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(NotPositiveDefinite):
            check_spd(np.diag([1.0, 1e-14]))
        np.testing.assert_allclose(check_spd(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))


class TestChristoffel:
    def test_flat_zero(self, rng):
        m = builtin_model("flat2d")
        g = christoffel_at(m, m.chart.sample(rng))
        assert g.shape == (2, 2, 2)
        assert np.all(g == 0.0)

    def test_pendulum_zero(self):
        assert np.all(christoffel_at(builtin_model("pendulum"), [1.3]) == 0.0)

    def test_polar_values(self):
        m = builtin_model("polar2d")
        for theta in (-2.0, 0.0, 1.1):
            g = christoffel_at(m, [2.0, theta])
            expected = np.zeros((2, 2, 2))
            expected[0, 1, 1] = -2.0
            expected[1, 0, 1] = expected[1, 1, 0] = 0.5
            np.testing.assert_allclose(g, expected, atol=1e-14)
            np.testing.assert_allclose(g, christoffel_oracle(m.metric, [2.0, theta]), atol=1e-8)

    def test_exact_lower_symmetry(self, model, rng):
        for _ in range(50):
            g = christoffel_at(model, model.chart.sample(rng))
            assert np.array_equal(g, np.transpose(g, (0, 2, 1)))

    def test_fd_matches_analytic(self, model, rng):
        num = model.fd_only()
        for _ in range(20):
            q = model.chart.sample(rng)
            np.testing.assert_allclose(christoffel_at(num, q), christoffel_at(model, q), atol=1e-7)

    def test_gradient_matches_fd(self, model, rng):
        for _ in range(10):
            q = model.chart.sample(rng)
            num = fd.central_grad(lambda x: christoffel_at(model, x), q)
            np.testing.assert_allclose(christoffel_grad_at(model, q), num, atol=1e-7)


class TestRiemann:
    def test_flat_exact_zero(self, rng):
        m = builtin_model("flat2d")
        assert np.all(riemann_at(m, m.chart.sample(rng)) == 0.0)

    def test_polar_flat(self, rng):
        for m in (builtin_model("polar2d"), builtin_model("polar2d").fd_only()):
            for _ in range(20):
                assert np.abs(riemann_at(m, m.chart.sample(rng))).max() <= 1e-6

    def test_sphere_component(self):
        m = builtin_model("curved_fixture")
        q = [math.pi / 2, 0.4]
        oracle = riemann_from_field(sphere_christoffel, q)
        # -sin^2(q1) in this sign convention
        assert oracle[0, 1, 0, 1] == pytest.approx(-1.0, abs=1e-5)
        R = riemann_at(m, q)
        np.testing.assert_allclose(R, oracle, atol=1e-6)
        assert R[0, 1, 0, 1] == pytest.approx(-1.0, abs=1e-12)
        assert R[0, 1, 1, 0] == pytest.approx(1.0, abs=1e-12)

    def test_sphere_field(self, rng):
        m = builtin_model("curved_fixture")
        for _ in range(10):
            q = m.chart.sample(rng)
            R = riemann_at(m, q)
            assert R[0, 1, 0, 1] == pytest.approx(-math.sin(q[0]) ** 2, abs=1e-12)
            assert R[1, 0, 1, 0] == pytest.approx(-1.0, abs=1e-12)

    def test_antisymmetry(self, model, rng):
        for num in (False, True):
            mm = model.fd_only() if num else model
            tol = 1e-5 if num else 1e-9
            for _ in range(10):
                R = riemann_at(mm, mm.chart.sample(rng))
                assert np.abs(R + np.transpose(R, (0, 1, 3, 2))).max() <= tol


class TestIndexConversion:
    def test_identity(self):
        np.testing.assert_array_equal(lower_index(np.eye(2), [3.0, -1.0]), [3.0, -1.0])

    def test_diagonal(self):
        np.testing.assert_array_equal(lower_index(np.diag([1.0, 4.0]), [1.0, 1.0]), [1.0, 4.0])

    def test_round_trip(self, rng):
        for _ in range(20):
            a = rng.normal(size=(3, 3))
            M = a @ a.T + 3 * np.eye(3)
            v = rng.normal(size=3)
            np.testing.assert_allclose(raise_index(np.linalg.inv(M), lower_index(M, v)), v, atol=1e-10)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            lower_index(np.eye(2), [1.0, 2.0, 3.0])
        with pytest.raises(DimensionMismatch):
            raise_index(np.eye(3), [1.0])


class TestRicci:
    def test_flat_exact(self):
        r1, r2 = ricci_residuals(builtin_model("flat2d"), [0.4, 0.2])
        assert np.all(r1 == 0.0) and np.all(r2 == 0.0)

    def test_analytic(self, model, rng):
        for _ in range(20):
            r1, r2 = ricci_residuals(model, model.chart.sample(rng))
            assert max(np.abs(r1).max(), np.abs(r2).max()) <= 1e-10

    def test_polar_fd(self):
        r1, r2 = ricci_residuals(builtin_model("polar2d").fd_only(), [2.0, 1.0])
        assert max(np.abs(r1).max(), np.abs(r2).max()) <= 1e-6

    def test_inverse_gradient(self, model, rng):
        q = model.chart.sample(rng)
        num = fd.central_grad(lambda x: inverse_metric_at(model, x), q)
        np.testing.assert_allclose(inverse_metric_grad_at(model, q), num, atol=1e-8)
        np.testing.assert_allclose(
            metric_grad_at(model, q), fd.central_grad(lambda x: metric_at(model, x), q), atol=1e-8
        )


class TestSecondGradient:
    def test_constant_potential(self):
        m = builtin_model("curved_fixture")
        assert np.all(second_gradient_at(m, [1.0, 0.5]) == 0.0)

    def test_flat_quadratic(self):
        m = builtin_model("flat2d", {"potential": "quadratic", "k": 1.0})
        np.testing.assert_array_equal(second_gradient_at(m, [0.3, 0.9]), np.eye(2))

    def test_polar_quadratic(self, rng):
        m = builtin_model("polar2d", {"k": 1.0})
        for _ in range(10):
            q = m.chart.sample(rng)
            # identity Hessian pulled back through the chart: J^T J
            J = m.chart.jacobian(q)
            np.testing.assert_allclose(second_gradient_at(m, q), J.T @ J, atol=1e-12)
            np.testing.assert_allclose(second_gradient_at(m, q), np.diag([1.0, q[0] ** 2]), atol=1e-12)

    def test_symmetric(self, model, rng):
        for _ in range(20):
            h = second_gradient_at(model, model.chart.sample(rng))
            assert np.abs(h - h.T).max() <= 1e-9

    def test_chart_covariance(self, rng):
        # k != 0 gives a genuinely curved-coordinate potential
        pol = builtin_model("polar2d", {"k": 2.5})
        cart = builtin_model("flat2d", {"k": 2.5})
        for _ in range(10):
            q = pol.chart.sample(rng)
            J = pol.chart.jacobian(q)
            h_cart = second_gradient_at(cart, map_point(pol, cart, q))
            np.testing.assert_allclose(second_gradient_at(pol, q), J.T @ h_cart @ J, atol=1e-7)


class TestCovariantDerivatives:
    def test_flat_reduces_to_partials(self, rng):
        gamma = np.zeros((2, 2, 2))
        phi, dphi = rng.normal(size=2), rng.normal(size=(2, 2))
        np.testing.assert_array_equal(covariant_derivative_vector(gamma, phi, dphi), dphi)
        np.testing.assert_array_equal(covariant_derivative_covector(gamma, phi, dphi), dphi)

    def test_covector_of_gradient_is_second_gradient(self, model, rng):
        q = model.chart.sample(rng)
        dv = model.potential_grad(q)
        d2v = model.potential_hess(q)
        np.testing.assert_allclose(
            covariant_derivative_covector(christoffel_at(model, q), dv, d2v),
            second_gradient_at(model, q),
            atol=1e-14,
        )

    def test_position_field_in_polar(self):
        # x-translation field d/dx written in polar components is parallel: nabla = 0
        m = builtin_model("polar2d")
        q = np.array([1.7, 0.6])

        def field(x):
            return np.linalg.solve(m.chart.jacobian(x), [1.0, 0.0])

        dphi = fd.central_grad(field, q)
        np.testing.assert_allclose(covariant_derivative_vector(christoffel_at(m, q), field(q), dphi), 0.0, atol=1e-9)


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_fd_only_model_agrees(name, rng):
    m = builtin_model(name)
    num = m.fd_only()
    for _ in range(10):
        q = m.chart.sample(rng)
        np.testing.assert_allclose(riemann_at(num, q), riemann_at(m, q), atol=1e-5)
        np.testing.assert_allclose(second_gradient_at(num, q), second_gradient_at(m, q), atol=1e-6)
