"""Direct transcription baseline for fixed-endpoint minimum-effort problems.

Discretise-then-optimise: the control is piecewise constant on a uniform grid,
each interval is one RK4 step of the controlled motion plus the cost
``1/2 M_kl u^k u^l``, and the finite-dimensional problem is solved with SLSQP
under the terminal-state equality constraint. Derivatives come from finite
differences of the one-interval map chained in reverse; nothing here uses the
costate equations, so it serves as an independent check on the shooting solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from riemctrl import fd, kernels
from riemctrl.geometry import point_geometry


@dataclass
class TranscriptionResult:
    times: np.ndarray
    u: np.ndarray
    cost: float
    terminal_residual: float
    success: bool
    message: str
    iterations: int

    def control_at(self, t):
        i = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.u.shape[0] - 1)
        return self.u[i]


def _interval_map(model, h):
    n = model.dim

    def rhs(z, u):
        q, v = z[:n], np.ascontiguousarray(z[n : 2 * n])
        geo = point_geometry(model, q)
        a = np.asarray(kernels.geodesic_accel(geo.gamma, geo.inverse, geo.dv, v, u))
        return np.concatenate([v, a, [0.5 * float(u @ geo.metric @ u)]])

    def step(z, u):
        k1 = rhs(z, u)
        k2 = rhs(z + 0.5 * h * k1, u)
        k3 = rhs(z + 0.5 * h * k2, u)
        k4 = rhs(z + h * k3, u)
        return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return step


def direct_transcription(model, state0, q_T, qdot_T, T, nodes=200, u_guess=None, tol=1e-12, maxiter=300):
    """Minimise ``1/2 sum_i int M u_i u_i dt`` with ``u`` constant on ``nodes`` intervals."""
    n = model.dim
    h = T / nodes
    step = _interval_map(model, h)
    target = np.concatenate([np.asarray(q_T, dtype=float), np.asarray(qdot_T, dtype=float)])
    z0 = np.concatenate([state0.q, state0.qdot, [0.0]])
    cache = {}

    def evaluate(flat):
        key = flat.tobytes()
        if key in cache:
            return cache[key]
        U = flat.reshape(nodes, n)
        zs = [z0]
        for i in range(nodes):
            zs.append(step(zs[-1], U[i]))
        # reverse sweep over finite-difference Jacobians of the interval map;
        # the rows are (cost, terminal q, terminal qdot)
        m = 2 * n + 1
        sens = np.zeros((m, m))
        sens[0, 2 * n] = 1.0
        sens[1:, : 2 * n] = np.eye(2 * n)
        grad = np.empty((m, nodes, n))
        for i in range(nodes - 1, -1, -1):
            B = fd.central_grad(lambda u: step(zs[i], u), U[i]).T
            grad[:, i, :] = sens @ B
            if i > 0:
                A = fd.central_grad(lambda z: step(z, U[i]), zs[i]).T
                sens = sens @ A
        out = (zs[-1], grad.reshape(m, nodes * n))
        cache.clear()
        cache[key] = out
        return out

    def objective(flat):
        return evaluate(flat)[0][2 * n]

    def objective_grad(flat):
        return evaluate(flat)[1][0]

    def constraint(flat):
        return evaluate(flat)[0][: 2 * n] - target

    def constraint_jac(flat):
        return evaluate(flat)[1][1:]

    x0 = np.zeros(nodes * n) if u_guess is None else np.asarray(u_guess, dtype=float).reshape(-1)
    res = minimize(
        objective,
        x0,
        jac=objective_grad,
        method="SLSQP",
        constraints=[{"type": "eq", "fun": constraint, "jac": constraint_jac}],
        options={"ftol": tol, "maxiter": maxiter},
    )
    zT = evaluate(res.x)[0]
    return TranscriptionResult(
        times=h * np.arange(nodes + 1),
        u=res.x.reshape(nodes, n),
        cost=float(zT[2 * n]),
        terminal_residual=float(np.linalg.norm(zT[: 2 * n] - target)),
        success=bool(res.success),
        message=str(res.message),
        iterations=int(res.nit),
    )
