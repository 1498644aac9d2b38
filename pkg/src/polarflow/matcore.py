"""Dense small-matrix kernels.

Everything here works on plain ``numpy`` float arrays of shape ``(n, n)``.
The kernels are written out (cyclic Jacobi, Taylor scaling-and-squaring,
partial-pivot LU) rather than delegated to LAPACK so that their accuracy
contracts can be stated and tested in isolation; ``numpy.linalg`` is used
only by the test oracles.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NotFinite, NotSpd, NotSymmetric, Singular

SYMMETRY_RTOL = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
EXP_SCALE_TARGET = 0.5
EXP_TAYLOR_DEGREE = 13
SINGULAR_RTOL = 1e-12


class SymEig(NamedTuple):
    eigenvalues: np.ndarray
    basis: np.ndarray


def as_square(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a finite float ``(n, n)`` array (a copy)."""
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotFinite(f"{name} has non-finite entries")
    return a


def check_same_shape(*mats) -> int:
    n = mats[0].shape[0]
    for m in mats[1:]:
        if m.shape != mats[0].shape:
            raise DimensionMismatch(f"shape {m.shape} does not match {mats[0].shape}")
    return n


def frob(m) -> float:
    return math.sqrt(float(np.vdot(m, m)))


def sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def skew(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m - m.T)


def is_symmetric(s: np.ndarray, rtol: float = SYMMETRY_RTOL) -> bool:
    return frob(s - s.T) <= rtol * frob(s)


def _require_symmetric(s: np.ndarray, rtol: float) -> None:
    if not is_symmetric(s, rtol):
        raise NotSymmetric(
            f"matrix is not symmetric: |S - S^T|_F = {frob(s - s.T):.3e} > {rtol:g}*|S|_F"
        )


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def sym_eig(s, rtol: float = SYMMETRY_RTOL) -> SymEig:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    s : (n, n) array_like
        Symmetric matrix. Symmetry is checked to relative tolerance ``rtol``
        in the Frobenius norm; the symmetric part is then diagonalized.

    Returns
    -------
    SymEig
        Eigenvalues sorted in descending order and an orthonormal basis whose
        columns are the matching eigenvectors. Column signs are fixed so that
        the largest-magnitude entry of each column is positive.

    Raises
    ------
    NotSymmetric
        If ``s`` fails the symmetry check.
    NoConvergence
        If the off-diagonal mass is still above tolerance after
        ``JACOBI_MAX_SWEEPS`` sweeps.
    """
    a = as_square(s, "S")
    _require_symmetric(a, rtol)
    a = sym(a)
    n = a.shape[0]
    v = np.eye(n)
    scale = frob(a)
    target = JACOBI_TOL * scale

    def off_mass(x):
        return frob(x - np.diag(np.diag(x)))

    sweeps = 0
    while off_mass(a) > target:
        if sweeps >= JACOBI_MAX_SWEEPS:
            raise NoConvergence(
                f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps",
                iterations=sweeps,
            )
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return SymEig(w[order], _fix_signs(v[:, order]))


def lambda_min(s) -> float:
    return float(sym_eig(s).eigenvalues[-1])


def as_spd(s, name: str = "matrix") -> np.ndarray:
    """Validate ``s`` as symmetric positive definite; return its symmetric part."""
    a = as_square(s, name)
    if not is_symmetric(a):
        raise NotSpd(f"{name} is not symmetric")
    a = sym(a)
    lam = sym_eig(a).eigenvalues[-1]
    if not lam > 0.0:
        raise NotSpd(f"{name} is not positive definite (smallest eigenvalue {lam:.3e})")
    return a


def spd_sqrt(s) -> np.ndarray:
    """Symmetric positive-definite square root ``R`` with ``R @ R = S``."""
    a = as_square(s, "S")
    if not is_symmetric(a):
        raise NotSpd("matrix is not symmetric")
    w, q = sym_eig(a)
    if not w[-1] > 0.0:
        raise NotSpd(f"matrix is not positive definite (smallest eigenvalue {w[-1]:.3e})")
    return sym((q * np.sqrt(w)) @ q.T)


def spd_inv_sqrt(s) -> np.ndarray:
    a = as_square(s, "S")
    if not is_symmetric(a):
        raise NotSpd("matrix is not symmetric")
    w, q = sym_eig(a)
    if not w[-1] > 0.0:
        raise NotSpd(f"matrix is not positive definite (smallest eigenvalue {w[-1]:.3e})")
    return sym((q / np.sqrt(w)) @ q.T)


def mat_exp(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring.

    ``M`` is scaled by ``2**-s`` until its Frobenius norm is at most 0.5, the
    degree-13 Taylor polynomial is evaluated (Paterson-Stockmeyer, six matrix
    products), and the result is squared ``s`` times.
    """
    a = as_square(m, "M")
    return _mat_exp(a)


_TAYLOR = [1.0 / math.factorial(k) for k in range(EXP_TAYLOR_DEGREE + 1)]


def _mat_exp(a: np.ndarray) -> np.ndarray:
    norm = frob(a)
    s = 0
    if norm > EXP_SCALE_TARGET:
        s = max(0, math.ceil(math.log2(norm / EXP_SCALE_TARGET)))
        a = a / 2.0**s
    c = _TAYLOR
    a2 = a @ a
    a3 = a2 @ a
    a4 = a2 @ a2
    # p(A) = B0 + A^4 (B1 + A^4 (B2 + A^4 B3)), each Bj a cubic in A
    r = c[13] * a
    _add_eye(r, c[12])
    r = c[9] * a + c[10] * a2 + c[11] * a3 + a4 @ r
    _add_eye(r, c[8])
    r = c[5] * a + c[6] * a2 + c[7] * a3 + a4 @ r
    _add_eye(r, c[4])
    r = a + c[2] * a2 + c[3] * a3 + a4 @ r
    _add_eye(r, 1.0)
    for _ in range(s):
        r = r @ r
    return r


def _add_eye(m: np.ndarray, alpha: float) -> None:
    m.flat[:: m.shape[0] + 1] += alpha


def _lu(a: np.ndarray):
    """In-place LU with partial pivoting. Returns (lu, perm, sign)."""
    n = a.shape[0]
    perm = np.arange(n)
    sign = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        piv = a[k, k]
        if piv == 0.0:
            continue
        a[k + 1 :, k] /= piv
        a[k + 1 :, k + 1 :] -= np.outer(a[k + 1 :, k], a[k, k + 1 :])
    return a, perm, sign


def inverse_det(m) -> tuple[np.ndarray, float]:
    """Inverse and determinant via LU with partial pivoting.

    Raises :class:`Singular` when ``|det| <= 1e-12 * (|M|_F / sqrt(n))**n``.
    """
    a = as_square(m, "M")
    n = a.shape[0]
    threshold = SINGULAR_RTOL * (frob(a) / math.sqrt(n)) ** n
    lu, perm, sign = _lu(a.copy())
    det = sign * float(np.prod(np.diag(lu)))
    if not abs(det) > threshold:
        raise Singular(f"matrix is singular to working tolerance (det = {det:.3e})")

    x = np.eye(n)[perm]
    for k in range(n):
        x[k + 1 :] -= np.outer(lu[k + 1 :, k], x[k])
    for k in range(n - 1, -1, -1):
        x[k] /= lu[k, k]
        x[:k] -= np.outer(lu[:k, k], x[k])
    return x, det


def inv(m) -> np.ndarray:
    return inverse_det(m)[0]


def det(m) -> float:
    """Determinant without the singularity check."""
    lu, _, sign = _lu(as_square(m, "M"))
    return sign * float(np.prod(np.diag(lu)))


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided (Hestenes) Jacobi SVD of a square matrix.

    Returns ``(u, s, v)`` with ``m = u @ diag(s) @ v.T`` and ``s`` sorted in
    descending order. Columns of ``m @ v`` are orthogonalized pairwise by
    plane rotations until every pair is orthogonal to ``JACOBI_TOL``.
    """
    a = as_square(m, "M")
    n = a.shape[0]
    v = np.eye(n)
    for sweep in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(a[:, p] @ a[:, p])
                beta = float(a[:, q] @ a[:, q])
                gamma = float(a[:, p] @ a[:, q])
                if abs(gamma) <= JACOBI_TOL * math.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(zeta, 1.0))
                c = 1.0 / math.sqrt(1.0 + t * t)
                sn = c * t
                ap = a[:, p].copy()
                a[:, p] = c * ap - sn * a[:, q]
                a[:, q] = sn * ap + c * a[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - sn * v[:, q]
                v[:, q] = sn * vp + c * v[:, q]
        if not rotated:
            break
    else:
        raise NoConvergence(
            f"Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps", iterations=JACOBI_MAX_SWEEPS
        )
    s = np.sqrt(np.sum(a * a, axis=0))
    order = np.argsort(-s, kind="stable")
    s, a, v = s[order], a[:, order], v[:, order]
    if s[-1] == 0.0:
        raise Singular("matrix is singular; left singular vectors are not determined")
    return a / s, s, v
