"""Vertical gradient flow of the Monge cost, in right-reduced form.

The flow moves ``B`` inside its fiber by ``dB/dt = Omega B`` where ``Omega``
solves the Lyapunov equation

    S1 Omega + Omega S1 = 2 S1 (B^{-1} - B^{-T}).

``B^{-1}`` never needs a factorization: on the fiber it equals
``S0 B^T A^{-T} S0^{-1} A^{-1}``. Time stepping uses the Lie-Euler scheme
``B_{k+1} = exp(h Omega_k) B_k``; ``exp(h Omega)`` lies in ``O(n, S1)`` so the
iterates stay on the fiber.

The step is carried out in balanced coordinates ``C = S1^{-1/2} B S0^{1/2}``,
which are orthogonal exactly when ``B`` is on the fiber. There
``exp(h Omega)`` becomes ``exp(h K)`` with ``K = S1^{-1/2} Omega S1^{1/2}``
skew-symmetric, so rounding errors no longer grow with the condition number
of ``S1`` from step to step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NegativeDeterminant, OffFiber
from .geometry import MongeInstance, fiber_residual, weighted_sq_norm
from .matcore import _mat_exp, frob, inverse_det
from .sylvester import solve_in_eigbasis

log = logging.getLogger(__name__)

OFF_FIBER_LIMIT = 1e-6
INVERSE_CHECK_RTOL = 1e-8


@dataclass(frozen=True)
class FlowState:
    b: np.ndarray
    step_index: int = 0
    time: float = 0.0


@dataclass(frozen=True)
class FlowOptions:
    h: float = 0.1
    max_steps: int = 300
    # None runs exactly max_steps steps
    omega_tol: float | None = 1e-10
    record_every: int = 1
    # cross-check the inverse-free B^{-1} against LU inversion at recorded steps
    debug: bool = False

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.omega_tol is not None and self.omega_tol < 0:
            raise ValueError(f"omega_tol must be nonnegative, got {self.omega_tol}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")


@dataclass
class FlowTrace:
    states: list[FlowState] = field(default_factory=list)
    cost: list[float] = field(default_factory=list)
    omega_norm: list[float] = field(default_factory=list)
    fiber_res: list[float] = field(default_factory=list)
    dist_to_ref_sq: list[float] | None = None
    # max relative deviation of the inverse-free B^{-1} (debug mode only)
    inverse_check: list[float] | None = None
    # largest single-step increase of the cost seen during integration
    max_cost_increase: float = 0.0
    # over every visited state, not only recorded ones
    max_fiber_res: float = 0.0
    converged: bool = False

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    def __len__(self):
        return len(self.states)


def _check_on_fiber(b: np.ndarray, inst: MongeInstance) -> float:
    res = fiber_residual(b, inst)
    if not res <= OFF_FIBER_LIMIT:
        raise OffFiber(f"B is off the fiber (relative residual {res:.3e})", residual=res)
    return res


def _b_inverse(b: np.ndarray, inst: MongeInstance) -> np.ndarray:
    return inst.sigma0 @ b.T @ inst.fiber_tail


def b_inverse_fiber(b, inst: MongeInstance) -> np.ndarray:
    """Inverse of a fiber point ``B`` without factorizing ``B``.

    Valid only on the fiber; raises :class:`OffFiber` when the relative
    residual of ``B S0 B^T = S1`` exceeds ``1e-6``.
    """
    b = np.asarray(b, dtype=float)
    _check_on_fiber(b, inst)
    return _b_inverse(b, inst)


def _omega(b: np.ndarray, inst: MongeInstance) -> np.ndarray:
    b_inv = _b_inverse(b, inst)
    rhs = 2.0 * inst.sigma1 @ (b_inv - b_inv.T)
    return solve_in_eigbasis(inst.sigma1_eig, rhs)


def _balanced_generator(omega: np.ndarray, inst: MongeInstance) -> np.ndarray:
    """``S1^{-1/2} Omega S1^{1/2}``, projected onto the skew matrices."""
    k = inst.sigma1_inv_sqrt @ omega @ inst.sigma1_sqrt
    return 0.5 * (k - k.T)


def _to_balanced(b: np.ndarray, inst: MongeInstance) -> np.ndarray:
    return inst.sigma1_inv_sqrt @ b @ inst.sigma0_sqrt


def _from_balanced(c: np.ndarray, inst: MongeInstance) -> np.ndarray:
    return inst.sigma1_sqrt @ c @ inst.sigma0_inv_sqrt


def compute_omega(b, inst: MongeInstance) -> np.ndarray:
    """Right-reduced velocity ``Omega`` at the fiber point ``b``."""
    b = np.asarray(b, dtype=float)
    _check_on_fiber(b, inst)
    return _omega(b, inst)


def omega_rhs(b, inst: MongeInstance) -> np.ndarray:
    """Right-hand side ``2 S1 (B^{-1} - B^{-T})`` of the Lyapunov equation for ``Omega``."""
    b_inv = b_inverse_fiber(b, inst)
    return 2.0 * inst.sigma1 @ (b_inv - b_inv.T)


def lie_euler_step(state: FlowState, inst: MongeInstance, h: float) -> FlowState:
    b = np.asarray(state.b, dtype=float)
    _check_on_fiber(b, inst)
    omega = _omega(b, inst)
    c = _mat_exp(h * _balanced_generator(omega, inst)) @ _to_balanced(b, inst)
    k = state.step_index + 1
    return FlowState(_from_balanced(c, inst), k, k * h)


def djdt(b, omega, inst: MongeInstance) -> float:
    """Rate of change of the cost along the flow, ``-2 Tr(S0 Omega B)``."""
    b = np.asarray(b, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return -2.0 * float(np.sum(inst.sigma0 * (omega @ b).T))


def integrate(
    inst: MongeInstance,
    opts: FlowOptions | None = None,
    reference: np.ndarray | None = None,
    callback=None,
) -> FlowTrace:
    """Run Lie-Euler steps from ``B_0 = inst.a``.

    Stops once ``|Omega_k|_F <= opts.omega_tol`` or after ``opts.max_steps``
    steps (always the latter when ``omega_tol`` is None). Every
    ``record_every``-th state and the final state are recorded. If
    ``reference`` is given (normally the polar factor), the squared distance
    of each recorded state to it is recorded as well.

    ``callback(k, b, omega)``, if given, is called for every visited state
    before stepping; it is the hook the invariant checks use.

    Raises
    ------
    NegativeDeterminant
        If ``det(inst.a) <= 0`` and the instance does not allow it.
    OffFiber
        If the iterate drifts more than ``1e-6`` (relative) off the fiber.
    """
    opts = opts or FlowOptions()
    if inst.det_a <= 0 and not inst.allow_negative_det:
        raise NegativeDeterminant(f"det(A) = {inst.det_a:.3e} <= 0")

    trace = FlowTrace()
    if reference is not None:
        reference = np.asarray(reference, dtype=float)
        trace.dist_to_ref_sq = []
    if opts.debug:
        trace.inverse_check = []
    eye = np.eye(inst.n)

    def record(k, b, omega_norm, res, cost):
        trace.states.append(FlowState(b, k, k * opts.h))
        trace.cost.append(cost)
        trace.omega_norm.append(omega_norm)
        trace.fiber_res.append(res)
        if reference is not None:
            trace.dist_to_ref_sq.append(weighted_sq_norm(b - reference, inst.sigma0))
        if opts.debug:
            direct = inverse_det(b)[0]
            dev = frob(_b_inverse(b, inst) - direct) / frob(direct)
            trace.inverse_check.append(dev)
            if dev > INVERSE_CHECK_RTOL:
                log.warning("inverse-free B^-1 deviates by %.3e at step %d", dev, k)

    b = inst.a.copy()
    c = _to_balanced(b, inst)
    prev_cost = None
    k = 0
    while True:
        res = _check_on_fiber(b, inst)
        trace.max_fiber_res = max(trace.max_fiber_res, res)
        omega = _omega(b, inst)
        omega_norm = frob(omega)
        cost = weighted_sq_norm(eye - b, inst.sigma0)
        if prev_cost is not None:
            trace.max_cost_increase = max(trace.max_cost_increase, cost - prev_cost)
        prev_cost = cost
        if callback is not None:
            callback(k, b, omega)
        done = opts.omega_tol is not None and omega_norm <= opts.omega_tol
        if done or k >= opts.max_steps or k % opts.record_every == 0:
            record(k, b, omega_norm, res, cost)
        if done:
            trace.converged = True
            break
        if k >= opts.max_steps:
            break
        c = _mat_exp(opts.h * _balanced_generator(omega, inst)) @ c
        b = _from_balanced(c, inst)
        k += 1
    return trace
