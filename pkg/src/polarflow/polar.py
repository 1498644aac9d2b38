"""Polar decomposition ``A = P Q`` with ``P`` SPD and ``Q S0 Q^T = S0``.

Two routes: a direct oracle (SVD when ``S0 = I``, a closed form through
square roots otherwise) and the limit of the vertical gradient flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import IllConditioned, NegativeDeterminant, NotConverged, NotSpd, PolarFlowError
from .flow import FlowOptions, FlowTrace, integrate
from .geometry import MongeInstance, in_generalized_orthogonal
from .matcore import (
    as_square,
    frob,
    inverse_det,
    is_symmetric,
    spd_inv_sqrt,
    spd_sqrt,
    svd,
    sym,
    sym_eig,
)

ILL_CONDITIONED_RATIO = 1e-10
FLOW_CONVERGED_OMEGA = 1e-6
# the flow converges linearly; its rate depends on the spectrum of S1, so the
# library default leaves generous room beyond the 300 steps of the benchmark
DEFAULT_FLOW_OPTIONS = FlowOptions(h=0.1, max_steps=20000, omega_tol=1e-10)


@dataclass
class PolarFactors:
    p: np.ndarray
    q: np.ndarray
    method: Literal["flow", "oracle"]
    trace: FlowTrace | None = field(default=None, repr=False)


def _guard(inst: MongeInstance) -> None:
    w = inst.sigma1_eig.eigenvalues
    if w[-1] / w[0] < ILL_CONDITIONED_RATIO:
        raise IllConditioned(f"target covariance too ill-conditioned (ratio {w[-1] / w[0]:.3e})")
    if inst.det_a <= 0 and not inst.allow_negative_det:
        raise NegativeDeterminant(f"det(A) = {inst.det_a:.3e} <= 0")


def polar_svd(a) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal polar factors ``(P, Q)`` of ``a`` from its SVD.

    For ``n <= 3`` the right singular vectors come from the eigenbasis of
    ``A^T A`` and the left ones are reconciled as ``A V / s`` (so their signs
    always match). Larger matrices go through the one-sided Jacobi SVD.
    """
    a = as_square(a, "A")
    n = a.shape[0]
    if n <= 3:
        w, v = sym_eig(sym(a.T @ a))
        if not w[-1] > 0:
            raise NotSpd("A^T A is not positive definite; A is singular")
        s = np.sqrt(w)
        u = (a @ v) / s
    else:
        u, s, v = svd(a)
    p = sym((u * s) @ u.T)
    q = u @ v.T
    return p, q


def polar_closed_form(sigma0, sigma1) -> np.ndarray:
    """SPD ``P`` with ``P sigma0 P = sigma1``.

    ``P = S0^{-1/2} (S0^{1/2} S1 S0^{1/2})^{1/2} S0^{-1/2}``.
    """
    r = spd_sqrt(sigma0)
    r_inv = spd_inv_sqrt(sigma0)
    mid = spd_sqrt(sym(r @ sigma1 @ r))
    return sym(r_inv @ mid @ r_inv)


def polar_oracle(inst: MongeInstance) -> PolarFactors:
    """Polar factors of ``inst.a`` computed directly (no flow)."""
    _guard(inst)
    if np.array_equal(inst.sigma0, np.eye(inst.n)):
        p, q = polar_svd(inst.a)
    else:
        p = polar_closed_form(inst.sigma0, inst.sigma1)
        q = inverse_det(p)[0] @ inst.a
    return PolarFactors(p, q, "oracle")


def polar_via_flow(
    inst: MongeInstance, opts: FlowOptions | None = None, reference=None, callback=None
) -> PolarFactors:
    """Polar factors from the limit of the vertical gradient flow.

    ``P`` is the symmetric part of the last flow iterate and ``Q = P^{-1} A``.
    Raises :class:`NotConverged` (with the factors attached) if the reduced
    gradient is still above ``1e-6`` when the step budget runs out.
    ``reference`` and ``callback`` are passed through to :func:`integrate`.
    """
    _guard(inst)
    opts = opts or DEFAULT_FLOW_OPTIONS
    trace = integrate(inst, opts, reference=reference, callback=callback)
    b = trace.final.b
    omega_norm = trace.omega_norm[-1]
    try:
        p = _as_spd_or_raise(sym(b))
    except NotSpd as exc:
        raise NotConverged(
            f"flow iterate has no SPD symmetric part after {trace.final.step_index} steps",
            omega_norm=omega_norm,
        ) from exc
    factors = PolarFactors(p, inverse_det(p)[0] @ inst.a, "flow", trace)
    if omega_norm > FLOW_CONVERGED_OMEGA:
        raise NotConverged(
            f"|Omega|_F = {omega_norm:.3e} after {trace.final.step_index} steps",
            factors=factors,
            omega_norm=omega_norm,
        )
    return factors


def _as_spd_or_raise(p: np.ndarray) -> np.ndarray:
    if not sym_eig(p).eigenvalues[-1] > 0:
        raise NotSpd("not positive definite")
    return p


def verify_decomposition(a, factors: PolarFactors, sigma0, tol: float = 1e-8) -> dict[str, bool]:
    """Named checks that ``factors`` form a polar decomposition of ``a``."""
    a = np.asarray(a, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    p = np.asarray(factors.p, dtype=float)
    q = np.asarray(factors.q, dtype=float)
    sigma1 = a @ sigma0 @ a.T
    try:
        positive = bool(sym_eig(sym(p)).eigenvalues[-1] > 0)
    except PolarFlowError:
        positive = False
    return {
        "reconstructs": frob(p @ q - a) <= tol * frob(a),
        "p_symmetric": is_symmetric(p, tol),
        "p_positive_definite": positive,
        "q_isotropy": in_generalized_orthogonal(q, sigma0, tol),
        "p_on_fiber": frob(p @ sigma0 @ p.T - sigma1) <= tol * frob(sigma1),
    }
