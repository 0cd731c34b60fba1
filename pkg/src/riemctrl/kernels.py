"""Backend selection for the tensor contraction kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy implementation in ``_pykernels`` is used. Setting ``RIEMCTRL_PURE_PYTHON=1``
forces the fallback.
"""

import os

from riemctrl import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("RIEMCTRL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from riemctrl import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

christoffel = _impl.christoffel
christoffel_grad = _impl.christoffel_grad
inverse_metric_grad = _impl.inverse_metric_grad
riemann = _impl.riemann
second_gradient = _impl.second_gradient
geodesic_accel = _impl.geodesic_accel
symplectic_rhs = _impl.symplectic_rhs
covariant_rhs = _impl.covariant_rhs
spd_inverse = _impl.spd_inverse

__all__ = [
    "BACKEND",
    "christoffel",
    "christoffel_grad",
    "inverse_metric_grad",
    "riemann",
    "second_gradient",
    "geodesic_accel",
    "symplectic_rhs",
    "covariant_rhs",
    "spd_inverse",
]
