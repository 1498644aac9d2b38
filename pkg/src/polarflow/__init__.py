"""Polar decomposition as the limit of a vertical gradient flow."""

from .errors import (
    DimensionMismatch,
    IllConditioned,
    NegativeDeterminant,
    NotConverged,
    NotSpd,
    NumericalError,
    OffFiber,
    PolarFlowError,
    Singular,
)
from .flow import FlowOptions, FlowState, FlowTrace, compute_omega, djdt, integrate, lie_euler_step
from .geometry import MongeInstance, cost_j, distance, fiber_residual, metric_g, tangent_split
from .polar import PolarFactors, polar_oracle, polar_via_flow, verify_decomposition
from .sylvester import solve_lyapunov, solve_lyapunov_kron

__version__ = "0.1.0"
