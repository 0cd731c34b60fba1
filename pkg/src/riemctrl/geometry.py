"""Pointwise Riemannian geometry of the mass-tensor metric.

All objects are plain component arrays in the model's chart. Index storage
order is fixed package-wide (see :mod:`riemctrl._pykernels`):
``gamma[j, i, k] = Gamma^j_{ik}`` and ``riem[j, i, k, l] = R^j_{ikl}`` with

    R^j_{ikl} = d_l Gamma^j_{ik} - d_k Gamma^j_{il}
                + Gamma^p_{ik} Gamma^j_{pl} - Gamma^p_{il} Gamma^j_{pk}.

Derivatives a model does not supply analytically are taken by central finite
differences (:mod:`riemctrl.fd`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from riemctrl import fd, kernels
from riemctrl.errors import DimensionMismatch, NonFinite, NotPositiveDefinite

SPD_PIVOT = 1e-12


def check_spd(m, what="metric"):
    """Return the inverse of ``m``; raise unless ``m`` is symmetric positive definite.

    Every Cholesky pivot must exceed ``SPD_PIVOT * max|m|``.
    """
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{what} must be square, got {m.shape}")
    inv = kernels.spd_inverse(m, SPD_PIVOT)
    if inv is None:
        if not np.all(np.isfinite(m)):
            raise NonFinite(f"non-finite {what}")
        raise NotPositiveDefinite(f"{what} is not positive definite: {m.tolist()}")
    return np.asarray(inv)


# Unchecked evaluators: q is already validated against the chart.

def _metric(model, q):
    m = np.array(model.metric(q), dtype=float)
    # exact symmetry makes Gamma exactly symmetric in its lower pair
    m = 0.5 * (m + m.T)
    return m, check_spd(m)


def _dmetric(model, q):
    if model.metric_grad is not None:
        return np.ascontiguousarray(model.metric_grad(q), dtype=float)
    dm = fd.central_grad(lambda x: _metric(model, x)[0], q)
    return np.ascontiguousarray(0.5 * (dm + np.transpose(dm, (0, 2, 1))))


def _d2metric(model, q):
    if model.metric_hess is not None:
        return np.ascontiguousarray(model.metric_hess(q), dtype=float)
    scale = fd.FIRST if model.metric_grad is not None else fd.SECOND
    return np.ascontiguousarray(fd.central_grad(lambda x: _dmetric(model, x), q, scale))


def _dpotential(model, q):
    if model.potential_grad is not None:
        return np.ascontiguousarray(model.potential_grad(q), dtype=float)
    return fd.central_grad(model.potential, q)


def _d2potential(model, q):
    if model.potential_hess is not None:
        h = np.asarray(model.potential_hess(q), dtype=float)
    elif model.potential_grad is not None:
        h = fd.central_grad(model.potential_grad, q)
    else:
        h = fd.central_hessian(model.potential, q)
    return np.ascontiguousarray(0.5 * (h + h.T))


def _gamma(model, q):
    _, minv = _metric(model, q)
    return np.asarray(kernels.christoffel(minv, _dmetric(model, q)))


def _dgamma(model, q, minv, dm, gamma):
    if model.metric_hess is not None:
        return np.asarray(kernels.christoffel_grad(minv, dm, gamma, _d2metric(model, q)))
    # nested difference when the connection itself came from differences
    scale = fd.FIRST if model.metric_grad is not None else fd.SECOND
    return np.ascontiguousarray(fd.central_grad(lambda x: _gamma(model, x), q, scale))


def _dinverse(minv, dm):
    # -M^-1 (dM) M^-1 from whichever dM the model has; differencing M^-1 itself
    # loses accuracy where the metric nearly degenerates
    return np.asarray(kernels.inverse_metric_grad(minv, dm))


# Public, validated entry points.

def metric_at(model, q):
    """Mass tensor ``M_kl(q)``, symmetric and positive definite."""
    return _metric(model, model.check_domain(q))[0]


def inverse_metric_at(model, q):
    return _metric(model, model.check_domain(q))[1]


def metric_grad_at(model, q):
    """``dm[i, k, l] = d_i M_kl``, analytic when the model provides it."""
    return _dmetric(model, model.check_domain(q))


def metric_hess_at(model, q):
    """``d2m[m, i, k, l] = d_m d_i M_kl``."""
    return _d2metric(model, model.check_domain(q))


def inverse_metric_grad_at(model, q):
    """``dminv[j, k, l] = d_j M^{kl} = -(M^-1 (d_j M) M^-1)^{kl}``."""
    q = model.check_domain(q)
    _, minv = _metric(model, q)
    return _dinverse(minv, _dmetric(model, q))


def potential_grad_at(model, q):
    return _dpotential(model, model.check_domain(q))


def potential_hess_at(model, q):
    return _d2potential(model, model.check_domain(q))


def christoffel_at(model, q):
    """``gamma[j, i, k] = Gamma^j_{ik}``; exactly symmetric in ``(i, k)``."""
    return _gamma(model, model.check_domain(q))


def christoffel_grad_at(model, q):
    """``dgamma[m, j, i, k] = d_m Gamma^j_{ik}``.

    Analytic when the model has second metric derivatives, otherwise a central
    difference of :func:`christoffel_at`.
    """
    q = model.check_domain(q)
    _, minv = _metric(model, q)
    dm = _dmetric(model, q)
    gamma = np.asarray(kernels.christoffel(minv, dm))
    return _dgamma(model, q, minv, dm, gamma)


def riemann_at(model, q):
    """``riem[j, i, k, l] = R^j_{ikl}``, antisymmetric in ``(k, l)``."""
    return point_geometry(model, q, curvature=True).riemann


def second_gradient_at(model, q):
    """Covariant Hessian ``(nabla^2 V)_kl = d_k d_l V - Gamma^j_{kl} d_j V``."""
    q = model.check_domain(q)
    return np.asarray(
        kernels.second_gradient(_d2potential(model, q), _gamma(model, q), _dpotential(model, q))
    )


def lower_index(metric, v):
    metric = np.asarray(metric, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.shape != metric.shape[:1]:
        raise DimensionMismatch(f"vector of shape {v.shape} vs metric {metric.shape}")
    return metric @ v


def raise_index(inverse, w):
    inverse = np.asarray(inverse, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape != inverse.shape[:1]:
        raise DimensionMismatch(f"covector of shape {w.shape} vs inverse metric {inverse.shape}")
    return inverse @ w


def covariant_derivative_vector(gamma, phi, dphi):
    """``(nabla_l phi)^j = d_l phi^j + Gamma^j_{lk} phi^k``, returned as ``[l, j]``.

    ``dphi[l, j] = d_l phi^j``.
    """
    return np.asarray(dphi) + np.einsum("jlk,k->lj", gamma, phi)


def covariant_derivative_covector(gamma, phi, dphi):
    """``(nabla phi)_{kl} = d_k phi_l - Gamma^j_{kl} phi_j`` with ``dphi[k, l] = d_k phi_l``."""
    return np.asarray(dphi) - np.einsum("jkl,j->kl", gamma, phi)


def ricci_residuals(model, q):
    """Residuals of the two metric-compatibility (Ricci) identities.

    ``res1[j, k, l] = d_j M_kl - Gamma^p_{jk} M_lp - Gamma^p_{jl} M_kp``
    ``res2[j, k, l] = d_j M^{kl} + Gamma^k_{jp} M^{pl} + Gamma^l_{jp} M^{pk}``
    """
    g = point_geometry(model, q, second_order=True)
    m, minv, gamma = g.metric, g.inverse, g.gamma
    res1 = g.dmetric - np.einsum("pjk,lp->jkl", gamma, m) - np.einsum("pjl,kp->jkl", gamma, m)
    res2 = (
        g.dinverse
        + np.einsum("kjp,pl->jkl", gamma, minv)
        + np.einsum("ljp,pk->jkl", gamma, minv)
    )
    return res1, res2


@dataclass(frozen=True)
class PointGeometry:
    """Every geometric quantity the dynamics needs at one configuration."""

    q: np.ndarray
    metric: np.ndarray
    inverse: np.ndarray
    dmetric: np.ndarray
    gamma: np.ndarray
    dv: np.ndarray
    dgamma: Optional[np.ndarray] = None
    dinverse: Optional[np.ndarray] = None
    d2v: Optional[np.ndarray] = None
    riemann: Optional[np.ndarray] = None
    hessian: Optional[np.ndarray] = None


def point_geometry(model, q, second_order=False, curvature=False):
    """Evaluate the geometry bundle at ``q``.

    ``second_order`` adds derivatives of the connection, inverse metric and
    potential gradient (needed by the adjoint equations); ``curvature`` adds the
    Riemann tensor and the covariant Hessian of ``V``.
    """
    q = model.check_domain(q)
    m, minv = _metric(model, q)
    dm = _dmetric(model, q)
    gamma = np.asarray(kernels.christoffel(minv, dm))
    dv = _dpotential(model, q)
    extra = {}
    if second_order or curvature:
        dgamma = _dgamma(model, q, minv, dm, gamma)
        d2v = _d2potential(model, q)
        extra.update(dgamma=dgamma, d2v=d2v)
        if second_order:
            extra["dinverse"] = _dinverse(minv, dm)
        if curvature:
            extra["riemann"] = np.asarray(kernels.riemann(gamma, dgamma))
            extra["hessian"] = np.asarray(kernels.second_gradient(d2v, gamma, dv))
    return PointGeometry(q=q, metric=m, inverse=minv, dmetric=dm, gamma=gamma, dv=dv, **extra)
