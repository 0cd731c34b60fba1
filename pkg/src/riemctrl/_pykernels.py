"""Pure-numpy tensor contraction kernels.

Reference implementation of the hot contractions. ``_ckernels`` (Cython) mirrors
every function here with identical signatures and results to round-off.

Storage conventions, used throughout the package:

* ``dm[i, k, l]``       = d_i M_{kl}
* ``d2m[m, i, k, l]``   = d_m d_i M_{kl}
* ``gamma[j, i, k]``    = Gamma^j_{ik}
* ``dgamma[m, j, i, k]`` = d_m Gamma^j_{ik}
* ``riem[j, i, k, l]``  = R^j_{ikl}
* ``dminv[j, k, l]``    = d_j M^{kl}
"""

import numpy as np


def christoffel(minv, dm):
    # c[l, i, k] = d_i M_lk + d_k M_li - d_l M_ik
    c = np.transpose(dm, (1, 0, 2)) + np.transpose(dm, (1, 2, 0)) - dm
    return 0.5 * np.einsum("jl,lik->jik", minv, c)


def christoffel_grad(minv, dm, gamma, d2m):
    # d_m c[l, i, k]
    dc = (
        np.transpose(d2m, (0, 2, 1, 3))
        + np.transpose(d2m, (0, 2, 3, 1))
        - d2m
    )
    inner = 0.5 * dc - np.einsum("mlb,bik->mlik", dm, gamma)
    return np.einsum("jl,mlik->mjik", minv, inner)


def inverse_metric_grad(minv, dm):
    return -np.einsum("ka,jab,bl->jkl", minv, dm, minv)


def riemann(gamma, dgamma):
    r = np.einsum("ljik->jikl", dgamma) - np.einsum("kjil->jikl", dgamma)
    r += np.einsum("pik,jpl->jikl", gamma, gamma)
    r -= np.einsum("pil,jpk->jikl", gamma, gamma)
    return r


def second_gradient(d2v, gamma, dv):
    return d2v - np.einsum("jkl,j->kl", gamma, dv)


def geodesic_accel(gamma, minv, dv, qdot, u):
    return -np.einsum("jkl,k,l->j", gamma, qdot, qdot) - minv @ dv + u


def symplectic_rhs(qdot, p, xi, gamma, dgamma, minv, dminv, dv, d2v):
    qddot = geodesic_accel(gamma, minv, dv, qdot, minv @ xi)
    # d_j (M^{il} d_l V)
    dforce = np.einsum("jil,l->ji", dminv, dv) + np.einsum("il,jl->ji", minv, d2v)
    pdot = (
        np.einsum("jikl,k,l,i->j", dgamma, qdot, qdot, xi)
        + dforce @ xi
        - 0.5 * np.einsum("jkl,k,l->j", dminv, xi, xi)
    )
    xidot = 2.0 * np.einsum("ikj,k,i->j", gamma, qdot, xi) - p
    return qddot, pdot, xidot


def covariant_rhs(qdot, ucov, du, gamma, riem, minv, dv, hess):
    ucon = minv @ ucov
    qddot = geodesic_accel(gamma, minv, dv, qdot, ucon)
    d2u = -np.einsum("iklj,k,l,i->j", riem, qdot, qdot, ucov) - hess @ ucon
    conn = np.einsum("ijk,k->ji", gamma, qdot)
    udot = du + conn @ ucov
    dudot = d2u + conn @ du
    return qddot, udot, dudot


def spd_inverse(m, rel_pivot):
    """Inverse of a symmetric matrix via Cholesky, or None when a pivot fails.

    A pivot fails when it is not above ``rel_pivot * max|m|``.
    """
    n = m.shape[0]
    tol = rel_pivot * np.max(np.abs(m))
    chol = np.zeros_like(m)
    for j in range(n):
        d = m[j, j] - chol[j, :j] @ chol[j, :j]
        if not d > tol:
            return None
        chol[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            chol[i, j] = (m[i, j] - chol[i, :j] @ chol[j, :j]) / chol[j, j]
    linv = np.linalg.inv(chol)
    inv = linv.T @ linv
    return 0.5 * (inv + inv.T)
