"""Built-in mechanical models and chart maps.

A model is a mass tensor ``M(q)`` and a potential ``V(q)`` on one coordinate
chart, with optional analytic derivatives. Missing derivatives are supplied by
finite differences in :mod:`riemctrl.geometry`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from riemctrl.errors import (
    ChartDomain,
    DimensionMismatch,
    InvalidParams,
    NoChartLink,
    UnknownModel,
)

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class ChartInfo:
    """Coordinate chart of a model.

    ``lower``/``upper`` bound the open domain per coordinate. ``sample_lower`` and
    ``sample_upper`` give a finite box used when drawing random interior points.
    When ``reference`` is set, the chart is linked to that reference chart through
    ``to_reference``, ``from_reference`` and ``jacobian`` (d q_ref / d q).
    """

    name: str
    lower: tuple
    upper: tuple
    sample_lower: tuple
    sample_upper: tuple
    reference: Optional[str] = None
    to_reference: Optional[Callable[[Array], Array]] = None
    from_reference: Optional[Callable[[Array], Array]] = None
    jacobian: Optional[Callable[[Array], Array]] = None

    def contains(self, q) -> bool:
        # NaN fails both comparisons
        return all(lo < x < hi for x, lo, hi in zip(q, self.lower, self.upper))

    def sample(self, rng, size=None) -> Array:
        lo = np.asarray(self.sample_lower, dtype=float)
        hi = np.asarray(self.sample_upper, dtype=float)
        shape = lo.shape if size is None else (size,) + lo.shape
        return rng.uniform(lo, hi, size=shape)


@dataclass(frozen=True, eq=False)
class MechanicalModel:
    """Mass tensor, potential and derivative providers on one chart.

    Derivative array layouts: ``metric_grad(q)[i, k, l] = d_i M_kl``,
    ``metric_hess(q)[m, i, k, l] = d_m d_i M_kl``.
    ``mass_points(q)`` returns ``(masses, positions)`` of the constituent point
    masses in a Cartesian frame, for physical models only.
    """

    name: str
    dim: int
    params: Mapping[str, float]
    metric: Callable[[Array], Array]
    potential: Callable[[Array], float]
    chart: ChartInfo
    metric_grad: Optional[Callable[[Array], Array]] = None
    metric_hess: Optional[Callable[[Array], Array]] = None
    potential_grad: Optional[Callable[[Array], Array]] = None
    potential_hess: Optional[Callable[[Array], Array]] = None
    mass_points: Optional[Callable[[Array], tuple]] = None
    extra: Mapping[str, object] = field(default_factory=dict)

    @property
    def analytic(self) -> bool:
        return self.metric_grad is not None

    def check_domain(self, q) -> Array:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise DimensionMismatch(f"{self.name}: expected q of length {self.dim}, got {q.shape}")
        if not self.chart.contains(q):
            raise ChartDomain(f"{self.name}: q={q.tolist()} outside chart {self.chart.name}")
        return q

    def fd_only(self) -> "MechanicalModel":
        """Copy of the model with every analytic derivative removed."""
        return dataclasses.replace(
            self,
            metric_grad=None,
            metric_hess=None,
            potential_grad=None,
            potential_hess=None,
        )


def _diag2(a, b):
    return np.array([[a, 0.0], [0.0, b]])


def _positive(params, *names):
    for n in names:
        if not (params[n] > 0 and math.isfinite(params[n])):
            raise InvalidParams(f"parameter {n!r} must be positive, got {params[n]!r}")


def _merge(defaults, params, model):
    params = dict(params or {})
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidParams(f"{model}: unknown parameters {sorted(unknown)}")
    out = dict(defaults)
    out.update(params)
    return out


CARTESIAN = "cartesian2d"
_INF = math.inf


def _cartesian_chart():
    return ChartInfo(
        name=CARTESIAN,
        lower=(-_INF, -_INF),
        upper=(_INF, _INF),
        sample_lower=(-2.0, -2.0),
        sample_upper=(2.0, 2.0),
        reference=CARTESIAN,
        to_reference=lambda q: np.array(q, dtype=float),
        from_reference=lambda x: np.array(x, dtype=float),
        jacobian=lambda q: np.eye(2),
    )


def _polar_chart():
    def to_ref(q):
        r, th = q
        return np.array([r * math.cos(th), r * math.sin(th)])

    def from_ref(x):
        return np.array([math.hypot(x[0], x[1]), math.atan2(x[1], x[0])])

    def jac(q):
        r, th = q
        c, s = math.cos(th), math.sin(th)
        return np.array([[c, -r * s], [s, r * c]])

    return ChartInfo(
        name="polar",
        lower=(1e-6, -math.pi),
        upper=(_INF, math.pi),
        sample_lower=(0.5, -3.0),
        sample_upper=(3.0, 3.0),
        reference=CARTESIAN,
        to_reference=to_ref,
        from_reference=from_ref,
        jacobian=jac,
    )


def _stiffness(p):
    pot = p.pop("potential", None)
    if pot is None:
        return float(p["k"])
    if pot == "zero":
        return 0.0
    if pot == "quadratic":
        return float(p["k"]) if p["k"] else 1.0
    raise InvalidParams(f"potential must be 'zero' or 'quadratic', got {pot!r}")


def flat2d(params=None) -> MechanicalModel:
    p = _merge({"m": 1.0, "k": 0.0, "potential": None}, params, "flat2d")
    k = _stiffness(p)
    p["k"] = k
    m = float(p["m"])
    _positive(p, "m")
    zero3 = np.zeros((2, 2, 2))
    zero4 = np.zeros((2, 2, 2, 2))
    return MechanicalModel(
        name="flat2d",
        dim=2,
        params=p,
        metric=lambda q: m * np.eye(2),
        metric_grad=lambda q: zero3.copy(),
        metric_hess=lambda q: zero4.copy(),
        potential=lambda q: 0.5 * k * (q[0] * q[0] + q[1] * q[1]),
        potential_grad=lambda q: k * np.array(q, dtype=float),
        potential_hess=lambda q: k * np.eye(2),
        mass_points=lambda q: ((m,), np.array([[q[0], q[1]]])),
        chart=_cartesian_chart(),
    )


def polar2d(params=None) -> MechanicalModel:
    p = _merge({"m": 1.0, "k": 0.0, "potential": None}, params, "polar2d")
    k = _stiffness(p)
    p["k"] = k
    m = float(p["m"])
    _positive(p, "m")

    def dmetric(q):
        d = np.zeros((2, 2, 2))
        d[0, 1, 1] = 2.0 * m * q[0]
        return d

    def d2metric(q):
        d = np.zeros((2, 2, 2, 2))
        d[0, 0, 1, 1] = 2.0 * m
        return d

    def points(q):
        r, th = q
        return (m,), np.array([[r * math.cos(th), r * math.sin(th)]])

    return MechanicalModel(
        name="polar2d",
        dim=2,
        params=p,
        metric=lambda q: _diag2(m, m * q[0] * q[0]),
        metric_grad=dmetric,
        metric_hess=d2metric,
        potential=lambda q: 0.5 * k * q[0] * q[0],
        potential_grad=lambda q: np.array([k * q[0], 0.0]),
        potential_hess=lambda q: _diag2(k, 0.0),
        mass_points=points,
        chart=_polar_chart(),
    )


def pendulum(params=None) -> MechanicalModel:
    p = _merge({"m": 1.0, "l": 1.0, "g": 9.81}, params, "pendulum")
    _positive(p, "m", "l")
    m, l, g = float(p["m"]), float(p["l"]), float(p["g"])
    mll = m * l * l
    mgl = m * g * l
    return MechanicalModel(
        name="pendulum",
        dim=1,
        params=p,
        metric=lambda q: np.array([[mll]]),
        metric_grad=lambda q: np.zeros((1, 1, 1)),
        metric_hess=lambda q: np.zeros((1, 1, 1, 1)),
        potential=lambda q: -mgl * math.cos(q[0]),
        potential_grad=lambda q: np.array([mgl * math.sin(q[0])]),
        potential_hess=lambda q: np.array([[mgl * math.cos(q[0])]]),
        mass_points=lambda q: ((m,), np.array([[l * math.sin(q[0]), -l * math.cos(q[0])]])),
        chart=ChartInfo(
            name="angle",
            lower=(-_INF,),
            upper=(_INF,),
            sample_lower=(-math.pi,),
            sample_upper=(math.pi,),
        ),
    )


def double_pendulum(params=None) -> MechanicalModel:
    """Two point masses on rigid massless links.

    ``q[0]`` is the shoulder angle from the downward vertical, ``q[1]`` the elbow
    angle relative to the first link.
    """
    p = _merge({"m1": 1.0, "m2": 1.0, "l1": 1.0, "l2": 1.0, "g": 9.81}, params, "double_pendulum")
    _positive(p, "m1", "m2", "l1", "l2")
    m1, m2, l1, l2, g = (float(p[k]) for k in ("m1", "m2", "l1", "l2", "g"))
    a = (m1 + m2) * l1 * l1 + m2 * l2 * l2
    b = m2 * l1 * l2
    c = m2 * l2 * l2

    def metric(q):
        cb = b * math.cos(q[1])
        return np.array([[a + 2.0 * cb, c + cb], [c + cb, c]])

    def dmetric(q):
        sb = b * math.sin(q[1])
        d = np.zeros((2, 2, 2))
        d[1] = [[-2.0 * sb, -sb], [-sb, 0.0]]
        return d

    def d2metric(q):
        cb = b * math.cos(q[1])
        d = np.zeros((2, 2, 2, 2))
        d[1, 1] = [[-2.0 * cb, -cb], [-cb, 0.0]]
        return d

    w1 = (m1 + m2) * g * l1
    w2 = m2 * g * l2

    def potential(q):
        return -w1 * math.cos(q[0]) - w2 * math.cos(q[0] + q[1])

    def dpotential(q):
        s12 = w2 * math.sin(q[0] + q[1])
        return np.array([w1 * math.sin(q[0]) + s12, s12])

    def d2potential(q):
        c12 = w2 * math.cos(q[0] + q[1])
        return np.array([[w1 * math.cos(q[0]) + c12, c12], [c12, c12]])

    def points(q):
        x1, y1 = l1 * math.sin(q[0]), -l1 * math.cos(q[0])
        x2, y2 = x1 + l2 * math.sin(q[0] + q[1]), y1 - l2 * math.cos(q[0] + q[1])
        return (m1, m2), np.array([[x1, y1], [x2, y2]])

    return MechanicalModel(
        name="double_pendulum",
        dim=2,
        params=p,
        metric=metric,
        metric_grad=dmetric,
        metric_hess=d2metric,
        potential=potential,
        potential_grad=dpotential,
        potential_hess=d2potential,
        mass_points=points,
        chart=ChartInfo(
            name="joint_angles",
            lower=(-_INF, -_INF),
            upper=(_INF, _INF),
            sample_lower=(-math.pi, -math.pi),
            sample_upper=(math.pi, math.pi),
        ),
    )


def curved_fixture(params=None) -> MechanicalModel:
    """Unit-sphere metric ``diag(1, sin^2 q0)``; a geometry fixture, not a mechanism."""
    p = _merge({}, params, "curved_fixture")

    def dmetric(q):
        d = np.zeros((2, 2, 2))
        d[0, 1, 1] = math.sin(2.0 * q[0])
        return d

    def d2metric(q):
        d = np.zeros((2, 2, 2, 2))
        d[0, 0, 1, 1] = 2.0 * math.cos(2.0 * q[0])
        return d

    return MechanicalModel(
        name="curved_fixture",
        dim=2,
        params=p,
        metric=lambda q: _diag2(1.0, math.sin(q[0]) ** 2),
        metric_grad=dmetric,
        metric_hess=d2metric,
        potential=lambda q: 0.0,
        potential_grad=lambda q: np.zeros(2),
        potential_hess=lambda q: np.zeros((2, 2)),
        chart=ChartInfo(
            name="sphere_angles",
            lower=(0.1, -_INF),
            upper=(math.pi - 0.1, _INF),
            sample_lower=(0.1, -math.pi),
            sample_upper=(math.pi - 0.1, math.pi),
        ),
    )


BUILTIN_MODELS = {
    "flat2d": flat2d,
    "polar2d": polar2d,
    "pendulum": pendulum,
    "double_pendulum": double_pendulum,
    "curved_fixture": curved_fixture,
}


def builtin_model(name: str, params=None) -> MechanicalModel:
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; choose from {sorted(BUILTIN_MODELS)}") from None
    return factory(params)


def _linked(model_from, model_to):
    a, b = model_from.chart, model_to.chart
    if a.reference is None or a.reference != b.reference:
        raise NoChartLink(f"no chart link between {model_from.name} and {model_to.name}")
    return a, b


def map_point(model_from, model_to, q) -> Array:
    a, b = _linked(model_from, model_to)
    q = model_from.check_domain(q)
    return model_to.check_domain(b.from_reference(a.to_reference(q)))


def map_state(model_from, model_to, q, qdot):
    """Map a configuration and its (contravariant) velocity between linked charts."""
    a, b = _linked(model_from, model_to)
    q2 = map_point(model_from, model_to, q)
    v_ref = a.jacobian(np.asarray(q, dtype=float)) @ np.asarray(qdot, dtype=float)
    return q2, np.linalg.solve(b.jacobian(q2), v_ref)


def map_control_contravariant(model_from, model_to, q, u) -> Array:
    a, b = _linked(model_from, model_to)
    q2 = map_point(model_from, model_to, q)
    return np.linalg.solve(b.jacobian(q2), a.jacobian(np.asarray(q, dtype=float)) @ np.asarray(u, dtype=float))


def map_covector(model_from, model_to, q, w) -> Array:
    """Covariant components transform with the transposed inverse Jacobian."""
    a, b = _linked(model_from, model_to)
    q2 = map_point(model_from, model_to, q)
    w_ref = np.linalg.solve(a.jacobian(np.asarray(q, dtype=float)).T, np.asarray(w, dtype=float))
    return b.jacobian(q2).T @ w_ref
