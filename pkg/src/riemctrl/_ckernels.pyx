# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tensor contraction kernels.

Loop-level twins of ``riemctrl._pykernels``; see that module for the index
storage conventions. Inputs must be C-contiguous float64 arrays.
"""

import numpy as np
from libc.math cimport sqrt


def christoffel(const double[:, ::1] minv, const double[:, :, ::1] dm):
    cdef Py_ssize_t n = minv.shape[0]
    cdef Py_ssize_t j, i, k, l
    cdef double s
    out = np.empty((n, n, n))
    cdef double[:, :, ::1] g = out
    for j in range(n):
        for i in range(n):
            for k in range(i, n):
                s = 0.0
                for l in range(n):
                    s += minv[j, l] * (dm[i, l, k] + dm[k, l, i] - dm[l, i, k])
                g[j, i, k] = 0.5 * s
                g[j, k, i] = 0.5 * s
    return out


def christoffel_grad(const double[:, ::1] minv, const double[:, :, ::1] dm,
                     const double[:, :, ::1] gamma, const double[:, :, :, ::1] d2m):
    cdef Py_ssize_t n = minv.shape[0]
    cdef Py_ssize_t m, j, i, k, l, b
    cdef double s, t
    inner_arr = np.empty((n, n, n, n))
    cdef double[:, :, :, ::1] inner = inner_arr
    for m in range(n):
        for l in range(n):
            for i in range(n):
                for k in range(n):
                    t = 0.5 * (d2m[m, i, l, k] + d2m[m, k, l, i] - d2m[m, l, i, k])
                    for b in range(n):
                        t -= dm[m, l, b] * gamma[b, i, k]
                    inner[m, l, i, k] = t
    out = np.empty((n, n, n, n))
    cdef double[:, :, :, ::1] dg = out
    for m in range(n):
        for j in range(n):
            for i in range(n):
                for k in range(n):
                    s = 0.0
                    for l in range(n):
                        s += minv[j, l] * inner[m, l, i, k]
                    dg[m, j, i, k] = s
    return out


def inverse_metric_grad(const double[:, ::1] minv, const double[:, :, ::1] dm):
    cdef Py_ssize_t n = minv.shape[0]
    cdef Py_ssize_t j, k, l, a, b
    cdef double s
    tmp_arr = np.empty((n, n))
    cdef double[:, ::1] tmp = tmp_arr
    out = np.empty((n, n, n))
    cdef double[:, :, ::1] d = out
    for j in range(n):
        # tmp = dm_j @ minv
        for a in range(n):
            for l in range(n):
                s = 0.0
                for b in range(n):
                    s += dm[j, a, b] * minv[b, l]
                tmp[a, l] = s
        for k in range(n):
            for l in range(n):
                s = 0.0
                for a in range(n):
                    s += minv[k, a] * tmp[a, l]
                d[j, k, l] = -s
    return out


def riemann(const double[:, :, ::1] gamma, const double[:, :, :, ::1] dgamma):
    cdef Py_ssize_t n = gamma.shape[0]
    cdef Py_ssize_t j, i, k, l, p
    cdef double s
    out = np.empty((n, n, n, n))
    cdef double[:, :, :, ::1] r = out
    for j in range(n):
        for i in range(n):
            for k in range(n):
                r[j, i, k, k] = 0.0
                for l in range(k + 1, n):
                    s = dgamma[l, j, i, k] - dgamma[k, j, i, l]
                    for p in range(n):
                        s += gamma[p, i, k] * gamma[j, p, l] - gamma[p, i, l] * gamma[j, p, k]
                    r[j, i, k, l] = s
                    r[j, i, l, k] = -s
    return out


def second_gradient(const double[:, ::1] d2v, const double[:, :, ::1] gamma,
                    const double[::1] dv):
    cdef Py_ssize_t n = d2v.shape[0]
    cdef Py_ssize_t j, k, l
    cdef double s
    out = np.empty((n, n))
    cdef double[:, ::1] h = out
    for k in range(n):
        for l in range(n):
            s = d2v[k, l]
            for j in range(n):
                s -= gamma[j, k, l] * dv[j]
            h[k, l] = s
    return out


cdef void _accel(const double[:, :, ::1] gamma, const double[:, ::1] minv,
                 const double[::1] dv, const double[::1] qdot,
                 const double[::1] u, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = minv.shape[0]
    cdef Py_ssize_t j, k, l
    cdef double s
    for j in range(n):
        s = u[j]
        for l in range(n):
            s -= minv[j, l] * dv[l]
            for k in range(n):
                s -= gamma[j, k, l] * qdot[k] * qdot[l]
        out[j] = s


def geodesic_accel(const double[:, :, ::1] gamma, const double[:, ::1] minv,
                   const double[::1] dv, const double[::1] qdot, const double[::1] u):
    out = np.empty(minv.shape[0])
    cdef double[::1] o = out
    _accel(gamma, minv, dv, qdot, u, o)
    return out


def symplectic_rhs(const double[::1] qdot, const double[::1] p, const double[::1] xi,
                   const double[:, :, ::1] gamma, const double[:, :, :, ::1] dgamma,
                   const double[:, ::1] minv, const double[:, :, ::1] dminv,
                   const double[::1] dv, const double[:, ::1] d2v):
    cdef Py_ssize_t n = minv.shape[0]
    cdef Py_ssize_t j, i, k, l
    cdef double s, f
    ucon_arr = np.empty(n)
    cdef double[::1] ucon = ucon_arr
    for j in range(n):
        s = 0.0
        for l in range(n):
            s += minv[j, l] * xi[l]
        ucon[j] = s
    qddot = np.empty(n)
    pdot = np.empty(n)
    xidot = np.empty(n)
    cdef double[::1] qdd = qddot, pd = pdot, xd = xidot
    _accel(gamma, minv, dv, qdot, ucon, qdd)
    for j in range(n):
        s = 0.0
        for i in range(n):
            # d_j (M^{il} d_l V)
            f = 0.0
            for l in range(n):
                f += dminv[j, i, l] * dv[l] + minv[i, l] * d2v[j, l]
                for k in range(n):
                    s += dgamma[j, i, k, l] * qdot[k] * qdot[l] * xi[i]
            s += f * xi[i]
        for k in range(n):
            for l in range(n):
                s -= 0.5 * dminv[j, k, l] * xi[k] * xi[l]
        pd[j] = s
        s = 0.0
        for i in range(n):
            for k in range(n):
                s += gamma[i, k, j] * qdot[k] * xi[i]
        xd[j] = 2.0 * s - p[j]
    return qddot, pdot, xidot


def covariant_rhs(const double[::1] qdot, const double[::1] ucov, const double[::1] du,
                  const double[:, :, ::1] gamma, const double[:, :, :, ::1] riem,
                  const double[:, ::1] minv, const double[::1] dv,
                  const double[:, ::1] hess):
    cdef Py_ssize_t n = minv.shape[0]
    cdef Py_ssize_t j, i, k, l
    cdef double s, c
    ucon_arr = np.empty(n)
    cdef double[::1] ucon = ucon_arr
    for j in range(n):
        s = 0.0
        for l in range(n):
            s += minv[j, l] * ucov[l]
        ucon[j] = s
    qddot = np.empty(n)
    udot = np.empty(n)
    dudot = np.empty(n)
    cdef double[::1] qdd = qddot, ud = udot, dud = dudot
    _accel(gamma, minv, dv, qdot, ucon, qdd)
    for j in range(n):
        s = 0.0
        for i in range(n):
            for k in range(n):
                for l in range(n):
                    s -= riem[i, k, l, j] * qdot[k] * qdot[l] * ucov[i]
        for k in range(n):
            s -= hess[j, k] * ucon[k]
        dud[j] = s
        s = du[j]
        for i in range(n):
            c = 0.0
            for k in range(n):
                c += gamma[i, j, k] * qdot[k]
            s += c * ucov[i]
            dud[j] += c * du[i]
        ud[j] = s
    return qddot, udot, dudot


def spd_inverse(const double[:, ::1] m, double rel_pivot):
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double d, s, tol = 0.0
    for i in range(n):
        for j in range(n):
            if m[i, j] > tol:
                tol = m[i, j]
            elif -m[i, j] > tol:
                tol = -m[i, j]
    tol *= rel_pivot
    chol_arr = np.zeros((n, n))
    linv_arr = np.zeros((n, n))
    cdef double[:, ::1] c = chol_arr, li = linv_arr
    for j in range(n):
        d = m[j, j]
        for k in range(j):
            d -= c[j, k] * c[j, k]
        if not d > tol:
            return None
        c[j, j] = sqrt(d)
        for i in range(j + 1, n):
            s = m[i, j]
            for k in range(j):
                s -= c[i, k] * c[j, k]
            c[i, j] = s / c[j, j]
    # inverse of the lower factor by forward substitution
    for j in range(n):
        li[j, j] = 1.0 / c[j, j]
        for i in range(j + 1, n):
            s = 0.0
            for k in range(j, i):
                s -= c[i, k] * li[k, j]
            li[i, j] = s / c[i, i]
    out = np.empty((n, n))
    cdef double[:, ::1] o = out
    for i in range(n):
        for j in range(i, n):
            s = 0.0
            for k in range(j, n):
                s += li[k, i] * li[k, j]
            o[i, j] = s
            o[j, i] = s
    return out
