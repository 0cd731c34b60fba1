"""Covariant second-order evolution of the optimal force.

Along an optimal arc the covariant force ``u_j = xi_j`` obeys

    (D^2 u / dt^2)_j = -R^i_{klj} qdot^k qdot^l u_i - (nabla^2 V)_{jk} u^k

where ``D/dt`` is the covariant time derivative along ``q(t)``. This module
integrates that equation coupled to the motion and compares it with the
symplectic (costate) formulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from riemctrl import kernels
from riemctrl.dynamics import State, Trajectory, default_steps, rk4, total_energy
from riemctrl.errors import DimensionMismatch
from riemctrl.geometry import point_geometry
from riemctrl.pontryagin import Costate, integrate_symplectic


@dataclass(frozen=True)
class ForceJet:
    """Covariant force and its covariant time derivative at one instant."""

    u_cov: np.ndarray
    du_cov: np.ndarray

    def __post_init__(self):
        u = np.array(self.u_cov, dtype=float).reshape(-1)
        du = np.array(self.du_cov, dtype=float).reshape(-1)
        if u.shape != du.shape:
            raise DimensionMismatch(f"u_cov {u.shape} and du_cov {du.shape} differ")
        object.__setattr__(self, "u_cov", u)
        object.__setattr__(self, "du_cov", du)


def _connection(gamma, qdot):
    """``conn[j, i] = Gamma^i_{jk} qdot^k``."""
    return np.einsum("ijk,k->ji", gamma, qdot)


def covariant_time_derivative(model, q, qdot, w, wdot):
    """``(Dw/dt)_j = wdot_j - Gamma^i_{jk} qdot^k w_i`` for a covector ``w(t)``."""
    geo = point_geometry(model, q)
    return np.asarray(wdot, dtype=float) - _connection(geo.gamma, np.asarray(qdot, dtype=float)) @ np.asarray(w, dtype=float)


def covariant_force_acceleration(model, state: State, u_cov):
    """Second covariant time derivative of the optimal covariant force."""
    geo = point_geometry(model, state.q, curvature=True)
    u_cov = np.asarray(u_cov, dtype=float)
    return -np.einsum("iklj,k,l,i->j", geo.riemann, state.qdot, state.qdot, u_cov) - geo.hessian @ (
        geo.inverse @ u_cov
    )


def curvature_term_proof_form(model, state: State, u_cov):
    """Curvature contraction written with the index order ``R^i_{kjl}``.

    Equals ``-R^i_{klj} qdot^k qdot^l u_i`` by antisymmetry in the last pair.
    """
    geo = point_geometry(model, state.q, curvature=True)
    return np.einsum("ikjl,k,l,i->j", geo.riemann, state.qdot, state.qdot, np.asarray(u_cov, dtype=float))


def bridge_costate_to_jet(model, state: State, costate: Costate) -> ForceJet:
    """``u_cov = xi`` and ``Du_cov = Gamma^i_{jk} qdot^k xi_i - p_j``."""
    geo = point_geometry(model, state.q)
    du = _connection(geo.gamma, state.qdot) @ costate.xi - costate.p
    return ForceJet(costate.xi.copy(), du)


def bridge_jet_to_costate(model, state: State, jet: ForceJet) -> Costate:
    geo = point_geometry(model, state.q)
    p = _connection(geo.gamma, state.qdot) @ jet.u_cov - jet.du_cov
    return Costate(p, jet.u_cov.copy())


def _covariant_flow(model):
    n = model.dim

    def rhs(t, y):
        q = y[:n]
        v = np.ascontiguousarray(y[n : 2 * n])
        u = np.ascontiguousarray(y[2 * n : 3 * n])
        du = np.ascontiguousarray(y[3 * n : 4 * n])
        geo = point_geometry(model, q, curvature=True)
        qddot, udot, dudot = kernels.covariant_rhs(
            v, u, du, geo.gamma, geo.riemann, geo.inverse, geo.dv, geo.hessian
        )
        return np.concatenate([v, qddot, udot, dudot, [0.5 * float(u @ geo.inverse @ u)]])

    return rhs


def integrate_covariant(model, state0: State, jet0: ForceJet, T, steps=None):
    """RK4 on ``(q, qdot, u_cov, Du_cov)``.

    The covariant pair is the integrated state; connection terms convert it to
    ordinary time derivatives inside the right-hand side only.
    """
    n = model.dim
    steps = default_steps(T) if steps is None else int(steps)
    model.check_domain(state0.q)
    y0 = np.concatenate([state0.q, state0.qdot, jet0.u_cov, jet0.du_cov, [0.0]])
    times, ys = rk4(_covariant_flow(model), y0, T, steps)
    q, qdot = ys[:, :n], ys[:, n : 2 * n]
    u_cov = ys[:, 2 * n : 3 * n]
    u = np.empty_like(u_cov)
    energy = np.empty(times.size)
    for i in range(times.size):
        geo = point_geometry(model, q[i])
        u[i] = geo.inverse @ u_cov[i]
        energy[i] = total_energy(model, State(q[i], qdot[i]))
    return Trajectory(
        times=times,
        q=q,
        qdot=qdot,
        u=u,
        u_cov=u_cov,
        energy=energy,
        run_cost=ys[:, 4 * n],
        meta={
            "model": model.name,
            "mode": "covariant",
            "steps": steps,
            "T": T,
            "du_cov": ys[:, 3 * n : 4 * n],
        },
    )


@dataclass
class EquivalenceReport:
    model: str
    T: float
    steps: int
    max_control_diff: float
    max_state_diff: float
    times: np.ndarray
    u_symplectic: np.ndarray
    u_covariant: np.ndarray
    q_symplectic: np.ndarray
    q_covariant: np.ndarray

    def table(self):
        """Per-node rows ``(t, |du|, |dq|)``."""
        du = np.linalg.norm(self.u_symplectic - self.u_covariant, axis=1)
        dq = np.linalg.norm(self.q_symplectic - self.q_covariant, axis=1)
        return np.column_stack([self.times, du, dq])


def equivalence_check(model, state0: State, costate0: Costate, T, steps=None):
    """Integrate both optimal-force formulations from the same data and compare.

    Discrepancies are sup-norms over the grid of the Euclidean norm of the
    difference in contravariant controls (and in configurations).
    """
    steps = default_steps(T) if steps is None else int(steps)
    sym = integrate_symplectic(model, state0, costate0, T, steps)
    jet0 = bridge_costate_to_jet(model, state0, costate0)
    cov = integrate_covariant(model, state0, jet0, T, steps)
    du = np.linalg.norm(sym.u - cov.u, axis=1)
    dq = np.linalg.norm(sym.q - cov.q, axis=1)
    return EquivalenceReport(
        model=model.name,
        T=T,
        steps=steps,
        max_control_diff=float(du.max()),
        max_state_diff=float(dq.max()),
        times=sym.times,
        u_symplectic=sym.u,
        u_covariant=cov.u,
        q_symplectic=sym.q,
        q_covariant=cov.q,
    )


def convergence_order(model, state0: State, costate0: Costate, T, steps):
    """Observed order of the control discrepancy between ``steps`` and ``2*steps``.

    Returns ``(diff_coarse, diff_fine, log2 ratio)``.
    """
    coarse = equivalence_check(model, state0, costate0, T, steps).max_control_diff
    fine = equivalence_check(model, state0, costate0, T, 2 * steps).max_control_diff
    return coarse, fine, float(np.log2(coarse / fine))
