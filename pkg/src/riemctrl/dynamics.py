"""Controlled equations of motion on the configuration manifold."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from riemctrl import fd, kernels
from riemctrl.errors import DimensionMismatch, NonFinite
from riemctrl.geometry import metric_at, point_geometry

STEPS_PER_UNIT_TIME = 2000


@dataclass(frozen=True)
class State:
    """Configuration ``q`` and contravariant velocity ``qdot``."""

    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        qdot = np.array(self.qdot, dtype=float).reshape(-1)
        if q.shape != qdot.shape:
            raise DimensionMismatch(f"q {q.shape} and qdot {qdot.shape} differ")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qdot)

    @property
    def dim(self):
        return self.q.size


@dataclass(frozen=True)
class ControlCurve:
    """Uniformly sampled contravariant control, linearly interpolated."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or t.size < 2 or v.shape[0] != t.size:
            raise DimensionMismatch("control curve needs >= 2 nodes and one row per node")
        if np.any(np.diff(t) <= 0):
            raise ValueError("control curve times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, u, T):
        u = np.asarray(u, dtype=float)
        return cls(np.array([0.0, T]), np.vstack([u, u]))

    @classmethod
    def zero(cls, dim, T):
        return cls.constant(np.zeros(dim), T)

    @classmethod
    def sample(cls, fun: Callable[[float], np.ndarray], T, nodes):
        t = np.linspace(0.0, T, nodes)
        return cls(t, np.array([np.asarray(fun(s), dtype=float) for s in t]))

    @property
    def dim(self):
        return self.values.shape[1]

    def __call__(self, t):
        t0, t1 = self.times[0], self.times[-1]
        t = min(max(t, t0), t1)
        h = (t1 - t0) / (self.times.size - 1)
        i = min(int((t - t0) / h), self.times.size - 2)
        # guard against round-off in the uniform-grid index
        if t < self.times[i]:
            i -= 1
        elif t > self.times[i + 1]:
            i += 1
        s = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        return (1.0 - s) * self.values[i] + s * self.values[i + 1]


@dataclass
class Trajectory:
    """Time grid with states and optional per-node series.

    ``run_cost`` is the accumulated running cost from 0 to each node.
    """

    times: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    u: Optional[np.ndarray] = None
    u_cov: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None
    H: Optional[np.ndarray] = None
    energy: Optional[np.ndarray] = None
    run_cost: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.q.shape[1]

    def __len__(self):
        return self.times.size

    def state(self, i):
        return State(self.q[i], self.qdot[i])

    @property
    def cost(self):
        return None if self.run_cost is None else float(self.run_cost[-1])

    def with_series(self, **series):
        return replace(self, **series)


def default_steps(T):
    return max(2, int(round(STEPS_PER_UNIT_TIME * T)))


def rk4(rhs, y0, T, steps, t0=0.0):
    """Classical fixed-step RK4; returns node times and the state at every node."""
    if T <= 0:
        raise ValueError("horizon T must be positive")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    h = T / steps
    y = np.array(y0, dtype=float)
    ys = np.empty((steps + 1, y.size))
    ys[0] = y
    times = t0 + h * np.arange(steps + 1)
    for i in range(steps):
        t = times[i]
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"integration blew up at t={times[i + 1]:.6g}")
        ys[i + 1] = y
    return times, ys


def kinetic_energy(model, state: State):
    m = metric_at(model, state.q)
    return 0.5 * float(state.qdot @ m @ state.qdot)


def total_energy(model, state: State):
    return kinetic_energy(model, state) + float(model.potential(state.q))


def accel(model, state: State, u):
    """Contravariant acceleration ``-Gamma qdot qdot - M^-1 dV + u``."""
    g = point_geometry(model, state.q)
    u = np.asarray(u, dtype=float)
    if u.shape != state.qdot.shape:
        raise DimensionMismatch(f"control of shape {u.shape}, expected {state.qdot.shape}")
    return np.asarray(kernels.geodesic_accel(g.gamma, g.inverse, g.dv, state.qdot, u))


def euler_lagrange_residual(model, state: State, qddot):
    """Covariant residual ``M (qddot + Gamma qdot qdot) + dV`` of the motion equation."""
    g = point_geometry(model, state.q)
    qddot = np.asarray(qddot, dtype=float)
    corr = np.einsum("lij,i,j->l", g.gamma, state.qdot, state.qdot)
    return g.metric @ (qddot + corr) + g.dv


def lagrangian(model, q, qdot):
    return 0.5 * float(qdot @ metric_at(model, q) @ qdot) - float(model.potential(q))


def euler_lagrange_fd(model, state: State, qddot):
    """``d/dt (dL/dqdot) - dL/dq`` by finite differences of ``L = K - V`` only.

    Time derivative is taken along the path ``q + s qdot + s^2 qddot / 2`` at s=0.
    """
    q, v = state.q, state.qdot
    a = np.asarray(qddot, dtype=float)

    def momentum(s):
        qs = q + s * v + 0.5 * s * s * a
        vs = v + s * a
        return fd.central_grad(lambda w: lagrangian(model, qs, w), vs, fd.SECOND)

    hs = fd.SECOND
    dmom = (momentum(hs) - momentum(-hs)) / (2.0 * hs)
    dLdq = fd.central_grad(lambda x: lagrangian(model, x, v), q)
    return dmom - dLdq


def _as_control(control, dim, T):
    if control is None:
        return ControlCurve.zero(dim, T)
    if isinstance(control, ControlCurve):
        return control
    if callable(control):
        return control
    return ControlCurve.constant(control, T)


def simulate(model, state0: State, control=None, T=1.0, steps=None):
    """Integrate the controlled motion with RK4.

    ``control`` is a :class:`ControlCurve`, a callable ``t -> u``, a constant
    vector or None (uncontrolled). The trajectory carries the contravariant and
    covariant control, total energy ``K + V`` and the accumulated cost
    ``1/2 int M_kl u^k u^l dt``.
    """
    n = model.dim
    steps = default_steps(T) if steps is None else int(steps)
    model.check_domain(state0.q)
    control = _as_control(control, n, T)

    def rhs(t, y):
        q, v = y[:n], y[n : 2 * n]
        u = np.asarray(control(t), dtype=float)
        g = point_geometry(model, q)
        a = np.asarray(kernels.geodesic_accel(g.gamma, g.inverse, g.dv, v, u))
        return np.concatenate([v, a, [0.5 * float(u @ g.metric @ u)]])

    times, ys = rk4(rhs, np.concatenate([state0.q, state0.qdot, [0.0]]), T, steps)
    q, qdot = ys[:, :n], ys[:, n : 2 * n]
    u = np.array([np.asarray(control(t), dtype=float) for t in times])
    u_cov = np.array([metric_at(model, qi) @ ui for qi, ui in zip(q, u)])
    energy = np.array([total_energy(model, State(qi, vi)) for qi, vi in zip(q, qdot)])
    return Trajectory(
        times=times,
        q=q,
        qdot=qdot,
        u=u,
        u_cov=u_cov,
        energy=energy,
        run_cost=ys[:, 2 * n],
        meta={"model": model.name, "mode": "simulate", "steps": steps, "T": T},
    )
