import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riemctrl import _pykernels as py
from riemctrl import kernels

compiled = pytest.importorskip("riemctrl._ckernels")


def arrays(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    m = a @ a.T + n * np.eye(n)
    minv = np.linalg.inv(m)
    dm = rng.normal(size=(n, n, n))
    dm = 0.5 * (dm + dm.transpose(0, 2, 1))
    d2m = rng.normal(size=(n, n, n, n))
    d2m = 0.5 * (d2m + d2m.transpose(1, 0, 2, 3))
    d2m = 0.5 * (d2m + d2m.transpose(0, 1, 3, 2))
    d2v = rng.normal(size=(n, n))
    return dict(
        m=m,
        minv=minv,
        dm=dm,
        d2m=d2m,
        dv=rng.normal(size=n),
        d2v=d2v + d2v.T,
        v=rng.normal(size=n),
        u=rng.normal(size=n),
        p=rng.normal(size=n),
        xi=rng.normal(size=n),
    )


def close(a, b):
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            close(x, y)
        return
    np.testing.assert_allclose(np.asarray(a), np.asarray(b), rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_backends_agree(seed, n):
    a = arrays(seed, n)
    results = {}
    for mod in (py, compiled):
        g = mod.christoffel(a["minv"], a["dm"])
        dg = mod.christoffel_grad(a["minv"], a["dm"], g, a["d2m"])
        dminv = mod.inverse_metric_grad(a["minv"], a["dm"])
        r = mod.riemann(g, dg)
        h = mod.second_gradient(a["d2v"], g, a["dv"])
        results[mod] = (
            g,
            dg,
            dminv,
            r,
            h,
            mod.geodesic_accel(g, a["minv"], a["dv"], a["v"], a["u"]),
            mod.symplectic_rhs(a["v"], a["p"], a["xi"], g, dg, a["minv"], dminv, a["dv"], a["d2v"]),
            mod.covariant_rhs(a["v"], a["xi"], a["p"], g, r, a["minv"], a["dv"], h),
            mod.spd_inverse(a["m"], 1e-12),
        )
    close(results[py], results[compiled])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_structural_symmetries(seed, n):
    a = arrays(seed, n)
    g = kernels.christoffel(a["minv"], a["dm"])
    assert np.array_equal(g, np.transpose(g, (0, 2, 1)))
    r = kernels.riemann(g, kernels.christoffel_grad(a["minv"], a["dm"], g, a["d2m"]))
    assert np.abs(r + np.transpose(r, (0, 1, 3, 2))).max() <= 1e-12
    np.testing.assert_allclose(kernels.spd_inverse(a["m"], 1e-12) @ a["m"], np.eye(n), atol=1e-12)


@pytest.mark.parametrize("mod", [py, compiled], ids=["python", "cython"])
def test_spd_inverse_rejects(mod):
    assert mod.spd_inverse(np.array([[1.0, 2.0], [2.0, 1.0]]), 1e-12) is None
    assert mod.spd_inverse(np.array([[1.0, 0.0], [0.0, 0.0]]), 1e-12) is None
    assert mod.spd_inverse(np.array([[np.nan]]), 1e-12) is None


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
