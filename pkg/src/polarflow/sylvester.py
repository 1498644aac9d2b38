"""Lyapunov-form Sylvester equations ``S X + X S = C`` with ``S`` SPD.

Two independent routes are provided. :func:`solve_lyapunov` diagonalizes
``S`` and divides componentwise in the eigenbasis; :func:`solve_lyapunov_kron`
forms the ``n^2 x n^2`` Kronecker-sum operator and solves it densely. The
second is an oracle for the first and is capped at small ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DimensionTooLarge
from .matcore import SymEig, as_spd, as_square, check_same_shape, frob, sym_eig

KRON_MAX_N = 32


@dataclass(frozen=True)
class LyapunovSystem:
    sigma: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        sigma = as_spd(self.sigma, "sigma")
        rhs = as_square(self.rhs, "rhs")
        check_same_shape(sigma, rhs)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rhs", rhs)

    def solve(self) -> np.ndarray:
        return solve_lyapunov(self.sigma, self.rhs)

    def solve_kron(self) -> np.ndarray:
        return solve_lyapunov_kron(self.sigma, self.rhs)


def solve_in_eigbasis(eig: SymEig, rhs: np.ndarray) -> np.ndarray:
    """Solve ``S X + X S = rhs`` given the eigendecomposition of ``S``."""
    w, q = eig
    ct = q.T @ rhs @ q
    return q @ (ct / (w[:, None] + w[None, :])) @ q.T


def solve_lyapunov(sigma, rhs, eig: SymEig | None = None) -> np.ndarray:
    """Unique solution ``X`` of ``sigma @ X + X @ sigma = rhs``.

    Parameters
    ----------
    sigma : (n, n) array_like
        Symmetric positive-definite coefficient.
    rhs : (n, n) array_like
        Right-hand side ``C``.
    eig : SymEig, optional
        Precomputed eigendecomposition of ``sigma``; skips validation when
        given (the caller vouches for it).

    Notes
    -----
    With ``sigma = Q diag(w) Q^T`` and ``C~ = Q^T C Q`` the solution is
    ``Q [C~_ij / (w_i + w_j)] Q^T``. Every denominator is positive for SPD
    ``sigma``, which is also why the solution is unique.
    """
    c = as_square(rhs, "rhs")
    if eig is None:
        s = as_spd(sigma, "sigma")
        check_same_shape(s, c)
        eig = sym_eig(s)
    return solve_in_eigbasis(eig, c)


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


def kron_operator(sigma) -> np.ndarray:
    """``I (x) S + S (x) I``, acting on column-stacked ``vec(X)``."""
    s = as_square(sigma, "sigma")
    n = s.shape[0]
    eye = np.eye(n)
    return np.kron(eye, s) + np.kron(s, eye)


def solve_lyapunov_kron(sigma, rhs) -> np.ndarray:
    """Brute-force oracle: dense solve of the vectorized system."""
    s = as_spd(sigma, "sigma")
    c = as_square(rhs, "rhs")
    n = check_same_shape(s, c)
    if n > KRON_MAX_N:
        raise DimensionTooLarge(f"Kronecker oracle limited to n <= {KRON_MAX_N}, got n = {n}")
    x = np.linalg.solve(kron_operator(s), vec(c))
    return unvec(x, n)


def sep(sigma) -> float:
    """Separation of the Lyapunov operator, ``2 * lambda_min(sigma)``."""
    s = as_spd(sigma, "sigma")
    return 2.0 * float(sym_eig(s).eigenvalues[-1])


def sep_ratio(sigma: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``|X S + S X|_F / |X|_F`` for one matrix or a stack of matrices."""
    img = x @ sigma + sigma @ x
    return np.sqrt(np.sum(img**2, axis=(-2, -1)) / np.sum(x**2, axis=(-2, -1)))


def sep_sample(sigma, samples: int, seed: int) -> float:
    """Sampled upper estimate of ``min_X |X S + S X|_F / |X|_F``.

    The minimum is taken over ``samples`` Gaussian matrices together with the
    eigenprojector ``v v^T`` of the smallest eigenvalue, which attains the
    true minimum ``2 * lambda_min``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    s = as_spd(sigma, "sigma")
    n = s.shape[0]
    v = sym_eig(s).basis[:, -1]
    witness = np.outer(v, v)
    xs = rng.standard_normal(seed, (samples, n, n))
    ratios = sep_ratio(s, xs)
    return float(min(ratios.min(), sep_ratio(s, witness)))


def residual(sigma, x, rhs) -> float:
    return frob(sigma @ x + x @ sigma - rhs)
