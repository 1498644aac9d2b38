"""Geometry of the Gaussian Monge problem.

A transport candidate ``A`` (invertible) moves the covariance ``S0`` to
``A S0 A^T``. The set of all ``A`` reaching a fixed target ``S1`` is the
fiber; it is a copy of the generalized orthogonal group
``O(n, S0) = {Q : Q S0 Q^T = S0}``. ``GL(n)`` carries the weighted metric
``<X, Y>_A = Tr(S0 X^T Y)``, and the cost of ``A`` is its squared distance to
the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import rng
from .errors import NegativeDeterminant
from .matcore import (
    SymEig,
    as_spd,
    as_square,
    check_same_shape,
    frob,
    inverse_det,
    spd_inv_sqrt,
    spd_sqrt,
    sym,
    sym_eig,
)
from .sylvester import solve_lyapunov

DEFAULT_ORTHO_TOL = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def congruence_push(a, sigma) -> np.ndarray:
    """``A sigma A^T``, symmetrized and validated as SPD."""
    a = as_square(a, "A")
    s = as_spd(sigma, "sigma")
    check_same_shape(a, s)
    inverse_det(a)  # raises Singular
    return as_spd(sym(a @ s @ a.T), "A sigma A^T")


@dataclass(frozen=True)
class MongeInstance:
    """Source covariance, transport candidate and the target it induces.

    ``sigma1`` is derived as ``a @ sigma0 @ a.T``. Inverses of ``a`` and
    ``sigma0``, square roots of both covariances and the eigendecomposition
    of ``sigma1`` are computed once here because the flow needs them at
    every step.
    """

    sigma0: np.ndarray
    a: np.ndarray
    allow_negative_det: bool = False
    sigma1: np.ndarray = field(init=False, repr=False)
    a_inv: np.ndarray = field(init=False, repr=False)
    det_a: float = field(init=False, repr=False)
    sigma0_inv: np.ndarray = field(init=False, repr=False)
    sigma1_eig: SymEig = field(init=False, repr=False)
    fiber_tail: np.ndarray = field(init=False, repr=False)
    sigma0_sqrt: np.ndarray = field(init=False, repr=False)
    sigma0_inv_sqrt: np.ndarray = field(init=False, repr=False)
    sigma1_sqrt: np.ndarray = field(init=False, repr=False)
    sigma1_inv_sqrt: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = as_square(self.a, "A")
        s0 = as_spd(self.sigma0, "sigma0")
        check_same_shape(a, s0)
        a_inv, det_a = inverse_det(a)
        if det_a <= 0 and not self.allow_negative_det:
            raise NegativeDeterminant(
                f"det(A) = {det_a:.3e} <= 0; A is outside the identity component of GL(n)"
            )
        s1 = congruence_push(a, s0)
        s0_inv = sym(inverse_det(s0)[0])
        w, q = sym_eig(s1)
        setattr_ = object.__setattr__
        setattr_(self, "a", _readonly(a))
        setattr_(self, "sigma0", _readonly(s0))
        setattr_(self, "sigma1", _readonly(s1))
        setattr_(self, "a_inv", _readonly(a_inv))
        setattr_(self, "det_a", det_a)
        setattr_(self, "sigma0_inv", _readonly(s0_inv))
        setattr_(self, "sigma1_eig", SymEig(_readonly(w), _readonly(q)))
        # A^-T S0^-1 A^-1, the fixed right factor of the inverse-free B^-1
        setattr_(self, "fiber_tail", _readonly(a_inv.T @ s0_inv @ a_inv))
        setattr_(self, "sigma0_sqrt", _readonly(spd_sqrt(s0)))
        setattr_(self, "sigma0_inv_sqrt", _readonly(spd_inv_sqrt(s0)))
        setattr_(self, "sigma1_sqrt", _readonly(sym((q * np.sqrt(w)) @ q.T)))
        setattr_(self, "sigma1_inv_sqrt", _readonly(sym((q / np.sqrt(w)) @ q.T)))

    @classmethod
    def from_target(cls, a, sigma0=None, **kwargs) -> "MongeInstance":
        a = as_square(a, "A")
        if sigma0 is None:
            sigma0 = np.eye(a.shape[0])
        return cls(sigma0=sigma0, a=a, **kwargs)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def sigma1_condition(self) -> float:
        w = self.sigma1_eig.eigenvalues
        return float(w[0] / w[-1])


def weighted_sq_norm(d: np.ndarray, sigma0: np.ndarray) -> float:
    """``Tr(sigma0 D^T D)``."""
    return max(float(np.vdot(d @ sigma0, d)), 0.0)


def cost_j(a, sigma0) -> float:
    """Monge cost ``Tr(S0 (I - A)^T (I - A))``."""
    a = np.asarray(a, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    check_same_shape(a, sigma0)
    return weighted_sq_norm(np.eye(a.shape[0]) - a, sigma0)


def cost_j_monte_carlo(a, sigma0, samples: int, seed: int) -> tuple[float, float]:
    """Sample mean of ``|x - A x|^2`` over ``x ~ N(0, sigma0)``.

    Returns the estimate and its standard error.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    a = as_square(a, "A")
    s0 = as_spd(sigma0, "sigma0")
    n = check_same_shape(a, s0)
    z = rng.standard_normal(seed, (samples, n))
    x = z @ spd_sqrt(s0)  # sqrt is symmetric, so rows are S0^{1/2} z
    r = x @ (np.eye(n) - a).T
    vals = np.sum(r * r, axis=1)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(samples))
    return est, se


def distance(a0, a1, sigma0) -> float:
    a0 = np.asarray(a0, dtype=float)
    a1 = np.asarray(a1, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    check_same_shape(a0, a1, sigma0)
    return float(np.sqrt(weighted_sq_norm(a0 - a1, sigma0)))


def metric_g(a, adot1, adot2, sigma0) -> float:
    """Riemannian metric ``Tr(S0 adot1^T adot2)`` (independent of the base point ``a``)."""
    adot1 = np.asarray(adot1, dtype=float)
    adot2 = np.asarray(adot2, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    check_same_shape(np.asarray(a, dtype=float), adot1, adot2, sigma0)
    return float(np.sum((adot1 @ sigma0) * adot2))


def fiber_residual(b, inst: MongeInstance) -> float:
    b = np.asarray(b, dtype=float)
    return frob(b @ inst.sigma0 @ b.T - inst.sigma1) / frob(inst.sigma1)


def in_generalized_orthogonal(q, sigma0, tol: float = DEFAULT_ORTHO_TOL) -> bool:
    """Whether ``Q sigma0 Q^T = sigma0`` to relative tolerance ``tol``."""
    q = np.asarray(q, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    if q.shape != sigma0.shape:
        return False
    return frob(q @ sigma0 @ q.T - sigma0) <= tol * frob(sigma0)


def random_isotropy_generator(sigma0, seed: int, scale: float = 1.0) -> np.ndarray:
    """Random element ``V`` of the Lie algebra ``{V : V S0 + S0 V^T = 0}``.

    Built as ``K S0^{-1}`` with ``K`` a random skew matrix.
    """
    s0 = as_spd(sigma0, "sigma0")
    n = s0.shape[0]
    g = rng.standard_normal(seed, (n, n))
    k = scale * (g - g.T) / 2.0
    return k @ inverse_det(s0)[0]


class TangentSplit(NamedTuple):
    vertical_coeff: np.ndarray
    horizontal_coeff: np.ndarray
    base_point: np.ndarray
    sigma: np.ndarray


def tangent_split(adot, a, sigma0) -> TangentSplit:
    """Split ``adot`` at ``a`` into vertical ``V a`` and horizontal ``U a``.

    With ``S = a S0 a^T`` and ``M = adot a^{-1}``, the horizontal coefficient
    ``U`` is the symmetric solution of ``U S + S U = M S + S M^T``; then
    ``V = M - U`` satisfies ``V S + S V^T = 0``.
    """
    adot = as_square(adot, "adot")
    a = as_square(a, "A")
    s0 = as_spd(sigma0, "sigma0")
    check_same_shape(adot, a, s0)
    a_inv = inverse_det(a)[0]
    s = congruence_push(a, s0)
    m = adot @ a_inv
    u = sym(solve_lyapunov(s, m @ s + s @ m.T))
    return TangentSplit(m - u, u, a, s)
