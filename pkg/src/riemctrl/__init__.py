"""Riemannian geometry of mechanical systems and Pontryagin optimal control.

The mass tensor of a mechanical model is used as a Riemannian metric on its
configuration space. The package computes the connection and curvature of that
metric, integrates the controlled motion, solves minimum-effort control problems
by indirect shooting, and checks the covariant evolution law of the optimal force
against the costate formulation.
"""

from riemctrl.errors import (
    ChartDomain,
    ConfigError,
    DimensionMismatch,
    InvalidParams,
    IoError,
    NoChartLink,
    NoConvergence,
    NonFinite,
    NotPositiveDefinite,
    NumericError,
    ParseError,
    RiemctrlError,
    UnknownModel,
    ValidationError,
)
from riemctrl.models import BUILTIN_MODELS, ChartInfo, MechanicalModel, builtin_model
from riemctrl.geometry import (
    christoffel_at,
    christoffel_grad_at,
    inverse_metric_at,
    lower_index,
    metric_at,
    point_geometry,
    raise_index,
    ricci_residuals,
    riemann_at,
    second_gradient_at,
)
from riemctrl.dynamics import ControlCurve, State, Trajectory, simulate
from riemctrl.pontryagin import (
    Costate,
    FixedEndpoint,
    FreeEndpoint,
    GenericControlProblem,
    ShootingResult,
    cost_gradient,
    integrate_symplectic,
    reduced_hamiltonian,
    robotic_hamiltonian,
    shoot,
    symplectic_rhs,
)
from riemctrl.covariant import (
    ForceJet,
    bridge_costate_to_jet,
    bridge_jet_to_costate,
    covariant_force_acceleration,
    equivalence_check,
    integrate_covariant,
)
from riemctrl.kernels import BACKEND

__version__ = "0.1.0"
