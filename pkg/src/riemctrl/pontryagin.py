"""Pontryagin layer: generic adjoint/gradient machinery and the robotic system.

The generic part works for any ``dy/dt = f(y, lam, t)`` with running cost
``g(y, lam, t)``. The costate ``p`` is a row vector: the adjoint equation reads
``dp/dt = -p df/dy + dg/dy`` and the cost gradient is ``dg/dlam - p df/dlam``.

The robotic part specialises to ``y = (q, qdot)``, ``lam = u`` (contravariant
control) and the invariant cost ``1/2 int M_kl u^k u^l dt``; its costate splits
into ``(p, xi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson

from riemctrl import fd, kernels
from riemctrl.dynamics import (
    ControlCurve,
    State,
    Trajectory,
    default_steps,
    rk4,
    total_energy,
)
from riemctrl.errors import DimensionMismatch, NoConvergence, NonFinite, NumericError
from riemctrl.geometry import point_geometry

# ---------------------------------------------------------------------------
# generic layer


@dataclass(frozen=True, eq=False)
class GenericControlProblem:
    """``dy/dt = f(y, lam, t)``, ``y(0) = x``, minimise ``int_0^T g(y, lam, t) dt``.

    Jacobian providers are optional; missing ones are central differences.
    ``dfdy(y, lam, t)`` has shape ``(ny, ny)`` with ``[a, b] = d f_a / d y_b``.
    """

    f: Callable
    g: Callable
    x: np.ndarray
    T: float
    control_dim: int
    dfdy: Optional[Callable] = None
    dfdlam: Optional[Callable] = None
    dgdy: Optional[Callable] = None
    dgdlam: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        if not self.T > 0:
            raise ValueError("horizon T must be positive")

    @property
    def state_dim(self):
        return self.x.size

    def jac_f_y(self, y, lam, t):
        if self.dfdy is not None:
            return np.atleast_2d(self.dfdy(y, lam, t))
        return fd.central_grad(lambda z: self.f(z, lam, t), y).T

    def jac_f_lam(self, y, lam, t):
        if self.dfdlam is not None:
            return np.atleast_2d(self.dfdlam(y, lam, t))
        return fd.central_grad(lambda z: self.f(y, z, t), lam).T.reshape(y.size, -1)

    def grad_g_y(self, y, lam, t):
        if self.dgdy is not None:
            return np.atleast_1d(self.dgdy(y, lam, t))
        return fd.central_grad(lambda z: self.g(z, lam, t), y)

    def grad_g_lam(self, y, lam, t):
        if self.dgdlam is not None:
            return np.atleast_1d(self.dgdlam(y, lam, t))
        return fd.central_grad(lambda z: self.g(y, z, t), lam)


def _lam(curve, t):
    return np.atleast_1d(np.asarray(curve(t), dtype=float))


def adjoint_rhs_generic(problem, y, p, lam, t):
    """``dp/dt = -p df/dy + dg/dy``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = -p @ problem.jac_f_y(y, lam, t) + problem.grad_g_y(y, lam, t)
    if not np.all(np.isfinite(out)):
        raise NonFinite(f"adjoint right-hand side at t={t}")
    return out


def forward_solve(problem, lam, steps):
    """Integrate state and accumulated cost; returns ``(times, y, J)``."""
    ny = problem.state_dim

    def rhs(t, z):
        y = z[:ny]
        u = _lam(lam, t)
        return np.concatenate([np.atleast_1d(problem.f(y, u, t)), [problem.g(y, u, t)]])

    times, zs = rk4(rhs, np.concatenate([problem.x, [0.0]]), problem.T, steps)
    return times, zs[:, :ny], float(zs[-1, ny])


def cost(problem, lam, steps=None):
    steps = default_steps(problem.T) if steps is None else steps
    return forward_solve(problem, lam, steps)[2]


@dataclass
class AdjointSolution:
    times: np.ndarray
    y: np.ndarray
    p: np.ndarray
    gradient: np.ndarray
    J: float

    def gradient_curve(self):
        return ControlCurve(self.times, self.gradient)


def adjoint_solve(problem, lam, steps=None, terminal_costate=None):
    """Forward state, backward costate and the cost gradient on a uniform grid.

    The forward pass runs at half the step so that the backward RK4 finds the
    state at its stage times. ``terminal_costate`` defaults to zero (free end);
    a fixed-endpoint solution passes its terminal multiplier instead.
    """
    steps = default_steps(problem.T) if steps is None else int(steps)
    t_fine, y_fine, J = forward_solve(problem, lam, 2 * steps)
    h = problem.T / steps
    ny = problem.state_dim
    p = np.zeros((steps + 1, ny))
    if terminal_costate is not None:
        p[-1] = np.asarray(terminal_costate, dtype=float)
    for i in range(steps, 0, -1):
        t = i * h
        y0, ym, y1 = y_fine[2 * i], y_fine[2 * i - 1], y_fine[2 * i - 2]
        pi = p[i]
        k1 = adjoint_rhs_generic(problem, y0, pi, _lam(lam, t), t)
        lm = _lam(lam, t - 0.5 * h)
        k2 = adjoint_rhs_generic(problem, ym, pi - 0.5 * h * k1, lm, t - 0.5 * h)
        k3 = adjoint_rhs_generic(problem, ym, pi - 0.5 * h * k2, lm, t - 0.5 * h)
        k4 = adjoint_rhs_generic(problem, y1, pi - h * k3, _lam(lam, t - h), t - h)
        p[i - 1] = pi - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    times = h * np.arange(steps + 1)
    y = y_fine[::2]
    grad = np.empty((steps + 1, problem.control_dim))
    for i, t in enumerate(times):
        u = _lam(lam, t)
        grad[i] = problem.grad_g_lam(y[i], u, t) - p[i] @ problem.jac_f_lam(y[i], u, t)
    return AdjointSolution(times=times, y=y, p=p, gradient=grad, J=J)


def cost_gradient(problem, lam, steps=None, terminal_costate=None):
    """Cost gradient ``dg/dlam - p df/dlam`` as a sampled curve."""
    return adjoint_solve(problem, lam, steps, terminal_costate).gradient_curve()


def directional_derivative(gradient, dlam):
    """``int gradient . dlam dt`` by Simpson's rule on the gradient's grid."""
    t = gradient.times
    vals = np.einsum("ij,ij->i", gradient.values, np.array([_lam(dlam, s) for s in t]))
    return float(simpson(vals, x=t))


# ---------------------------------------------------------------------------
# robotic system


@dataclass(frozen=True)
class Costate:
    """Covariant adjoint pair ``(p, xi)`` of ``(q, qdot)``."""

    p: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        xi = np.array(self.xi, dtype=float).reshape(-1)
        if p.shape != xi.shape:
            raise DimensionMismatch(f"p {p.shape} and xi {xi.shape} differ")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(xi))):
            raise NonFinite("costate")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "xi", xi)

    def as_vector(self):
        return np.concatenate([self.p, self.xi])

    @classmethod
    def from_vector(cls, z):
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return cls(z[:n], z[n:])


def robotic_problem(model, state0: State, T):
    """The robotic system as a :class:`GenericControlProblem` with ``y = (q, qdot)``."""
    n = model.dim

    def f(y, u, t):
        g = point_geometry(model, y[:n])
        v = np.ascontiguousarray(y[n:])
        a = kernels.geodesic_accel(g.gamma, g.inverse, g.dv, v, np.ascontiguousarray(u))
        return np.concatenate([v, a])

    def g(y, u, t):
        geo = point_geometry(model, y[:n])
        return 0.5 * float(u @ geo.metric @ u)

    def dfdlam(y, u, t):
        return np.vstack([np.zeros((n, n)), np.eye(n)])

    def dgdlam(y, u, t):
        return point_geometry(model, y[:n]).metric @ u

    return GenericControlProblem(
        f=f,
        g=g,
        x=np.concatenate([state0.q, state0.qdot]),
        T=T,
        control_dim=n,
        dfdlam=dfdlam,
        dgdlam=dgdlam,
    )


def _drift(geo, qdot):
    """``-Gamma^j_kl qdot^k qdot^l - M^{jl} d_l V``."""
    return np.asarray(kernels.geodesic_accel(geo.gamma, geo.inverse, geo.dv, qdot, np.zeros_like(qdot)))


def robotic_hamiltonian(model, state: State, costate: Costate, u):
    """``p.qdot + xi.(drift + u) - 1/2 M_kl u^k u^l``."""
    geo = point_geometry(model, state.q)
    u = np.asarray(u, dtype=float)
    return float(
        costate.p @ state.qdot
        + costate.xi @ (_drift(geo, state.qdot) + u)
        - 0.5 * u @ geo.metric @ u
    )


def reduced_hamiltonian(model, state: State, costate: Costate):
    """Hamiltonian at the optimal control ``u = M^-1 xi``."""
    geo = point_geometry(model, state.q)
    xi = costate.xi
    return float(
        costate.p @ state.qdot
        + xi @ _drift(geo, state.qdot)
        + 0.5 * xi @ geo.inverse @ xi
    )


def optimal_control(model, state: State, costate: Costate):
    """Contravariant optimal control ``u^j = M^{jl} xi_l``."""
    return point_geometry(model, state.q).inverse @ costate.xi


def symplectic_rhs(model, state: State, costate: Costate):
    """Right-hand side ``(qdot, qddot, pdot, xidot)`` of the optimal symplectic system."""
    geo = point_geometry(model, state.q, second_order=True)
    qddot, pdot, xidot = kernels.symplectic_rhs(
        state.qdot,
        costate.p,
        costate.xi,
        geo.gamma,
        geo.dgamma,
        geo.inverse,
        geo.dinverse,
        geo.dv,
        geo.d2v,
    )
    return state.qdot.copy(), np.asarray(qddot), np.asarray(pdot), np.asarray(xidot)


def _symplectic_flow(model):
    n = model.dim

    def rhs(t, y):
        q = y[:n]
        v = np.ascontiguousarray(y[n : 2 * n])
        p = np.ascontiguousarray(y[2 * n : 3 * n])
        xi = np.ascontiguousarray(y[3 * n : 4 * n])
        geo = point_geometry(model, q, second_order=True)
        qddot, pdot, xidot = kernels.symplectic_rhs(
            v, p, xi, geo.gamma, geo.dgamma, geo.inverse, geo.dinverse, geo.dv, geo.d2v
        )
        return np.concatenate([v, qddot, pdot, xidot, [0.5 * float(xi @ geo.inverse @ xi)]])

    return rhs


def integrate_symplectic(model, state0: State, costate0: Costate, T, steps=None):
    """RK4 on the optimal system; records ``u = M^-1 xi``, ``u_cov = xi`` and ``H``."""
    n = model.dim
    steps = default_steps(T) if steps is None else int(steps)
    model.check_domain(state0.q)
    y0 = np.concatenate([state0.q, state0.qdot, costate0.p, costate0.xi, [0.0]])
    times, ys = rk4(_symplectic_flow(model), y0, T, steps)
    return _symplectic_trajectory(model, times, ys, steps, T)


def _symplectic_trajectory(model, times, ys, steps, T):
    n = model.dim
    q, qdot = ys[:, :n], ys[:, n : 2 * n]
    p, xi = ys[:, 2 * n : 3 * n], ys[:, 3 * n : 4 * n]
    u = np.empty_like(xi)
    H = np.empty(times.size)
    energy = np.empty(times.size)
    for i in range(times.size):
        s, c = State(q[i], qdot[i]), Costate(p[i], xi[i])
        u[i] = optimal_control(model, s, c)
        H[i] = reduced_hamiltonian(model, s, c)
        energy[i] = total_energy(model, s)
    return Trajectory(
        times=times,
        q=q,
        qdot=qdot,
        u=u,
        u_cov=xi.copy(),
        p=p,
        xi=xi,
        H=H,
        energy=energy,
        run_cost=ys[:, 4 * n],
        meta={"model": model.name, "mode": "symplectic", "steps": steps, "T": T},
    )


# ---------------------------------------------------------------------------
# shooting


@dataclass(frozen=True)
class FreeEndpoint:
    """Terminal costate vanishes: ``p(T) = 0`` and ``xi(T) = 0``."""

    kind = "free"


@dataclass(frozen=True)
class FixedEndpoint:
    q_T: np.ndarray
    qdot_T: np.ndarray
    kind = "fixed"

    def __post_init__(self):
        object.__setattr__(self, "q_T", np.array(self.q_T, dtype=float).reshape(-1))
        object.__setattr__(self, "qdot_T", np.array(self.qdot_T, dtype=float).reshape(-1))


@dataclass
class ShootingResult:
    converged: bool
    costate0: Costate
    residual: float
    iterations: int
    trajectory: Optional[Trajectory]
    cost: float
    history: list = field(default_factory=list)

    @property
    def terminal_costate(self):
        tr = self.trajectory
        return np.concatenate([tr.p[-1], tr.xi[-1]])


def _terminal_residual(model, state0, boundary, T, steps, z):
    n = model.dim
    y0 = np.concatenate([state0.q, state0.qdot, z, [0.0]])
    _, ys = rk4(_symplectic_flow(model), y0, T, steps)
    yT = ys[-1]
    if boundary.kind == "free":
        r = yT[2 * n : 4 * n]
    else:
        r = np.concatenate([yT[:n] - boundary.q_T, yT[n : 2 * n] - boundary.qdot_T])
    return r


def shoot(
    model,
    state0: State,
    boundary,
    T,
    steps=None,
    tol=1e-8,
    max_iters=50,
    guess: Optional[Costate] = None,
    raise_on_failure=True,
):
    """Damped Newton on the initial costate ``(p0, xi0)``.

    The terminal residual is ``(p(T), xi(T))`` for :class:`FreeEndpoint` and the
    state mismatch at ``T`` for :class:`FixedEndpoint`. Its Jacobian is a forward
    difference; steps are halved (at most 20 times) until the residual norm drops.
    """
    n = model.dim
    steps = default_steps(T) if steps is None else int(steps)
    if boundary.kind == "fixed" and (boundary.q_T.size != n or boundary.qdot_T.size != n):
        raise DimensionMismatch("terminal state does not match the model dimension")
    z = np.zeros(2 * n) if guess is None else guess.as_vector()

    def residual(z):
        return _terminal_residual(model, state0, boundary, T, steps, z)

    r = residual(z)
    norm = float(np.linalg.norm(r))
    history = [norm]
    it = 0
    while norm > tol and it < max_iters:
        it += 1
        jac = np.empty((2 * n, 2 * n))
        for k in range(2 * n):
            dz = np.zeros(2 * n)
            dz[k] = np.sqrt(fd.EPS) * max(1.0, abs(z[k]))
            jac[:, k] = (residual(z + dz) - r) / dz[k]
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        alpha = 1.0
        for _ in range(21):
            try:
                r_new = residual(z + alpha * step)
                norm_new = float(np.linalg.norm(r_new))
            except NumericError:
                # overlong step left the chart or blew up
                norm_new = np.inf
            if norm_new < norm:
                break
            alpha *= 0.5
        else:
            break
        z = z + alpha * step
        r, norm = r_new, norm_new
        history.append(norm)

    converged = norm <= tol
    costate0 = Costate.from_vector(z)
    trajectory = integrate_symplectic(model, state0, costate0, T, steps)
    result = ShootingResult(
        converged=converged,
        costate0=costate0,
        residual=norm,
        iterations=it,
        trajectory=trajectory,
        cost=trajectory.cost,
        history=history,
    )
    if not converged and raise_on_failure:
        raise NoConvergence(it, norm, result)
    return result
