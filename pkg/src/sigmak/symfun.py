"""Elementary symmetric functions, Newton transforms and the H tensors.

Symmetric 2-tensors are plain ``numpy`` arrays holding components in an
orthonormal frame of the background metric.  Functions that act on matrices
accept leading batch dimensions, ``(..., n, n)``, so whole grids of Schouten
tensors can be processed at once.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import CapacityError, DomainError, NumericError, ValidationError

SYMMETRY_TOL = 1e-12
DELTA_MAX_DIM = 5


def as_spectrum(values) -> np.ndarray:
    lam = np.asarray(values, dtype=float)
    if lam.ndim != 1:
        raise ValidationError(f"spectrum must be one-dimensional, got shape {lam.shape}")
    if lam.size < 2:
        raise ValidationError("spectrum needs at least two eigenvalues")
    if not np.all(np.isfinite(lam)):
        raise ValidationError("spectrum has non-finite entries")
    return lam


def as_sym_matrix(A) -> np.ndarray:
    """Validate a (batch of) symmetric matrices and return the symmetrized copy.

    Asymmetry up to ``SYMMETRY_TOL`` (absolute) is averaged away; anything
    larger is rejected.
    """
    M = np.asarray(A, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ValidationError(f"expected square matrices, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries")
    MT = np.swapaxes(M, -1, -2)
    if M.size and np.max(np.abs(M - MT)) > SYMMETRY_TOL:
        raise ValidationError("matrix is not symmetric")
    return 0.5 * (M + MT)


def elem_sym_all(lam) -> np.ndarray:
    """All elementary symmetric functions e_0..e_n of the last axis.

    Uses the Pascal recurrence e_j <- e_j + x * e_{j-1}, which never forms
    subsets and is exact for integer input.
    """
    x = np.asarray(lam, dtype=float)
    n = x.shape[-1]
    e = np.zeros(x.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        xi = x[..., i, None]
        e[..., 1 : i + 2] = e[..., 1 : i + 2] + xi * e[..., 0 : i + 1]
    return e


def elem_sym(lam, k: int) -> float:
    """sigma_k of a spectrum; sigma_0 = 1."""
    x = as_spectrum(lam)
    n = x.size
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside [0, {n}]")
    return float(elem_sym_all(x)[k])


def elem_sym_subsets(lam, k: int) -> float:
    """Brute-force sigma_k by summing over all k-subsets (test oracle)."""
    x = [float(v) for v in lam]
    return float(sum(math.prod(c) for c in itertools.combinations(x, k)))


def in_positive_cone(lam, k: int) -> bool:
    """True iff sigma_1..sigma_k are all strictly positive (the Garding cone)."""
    x = as_spectrum(lam)
    if not 1 <= k <= x.size:
        raise DomainError(f"k={k} outside [1, {x.size}]")
    e = elem_sym_all(x)
    return bool(np.all(e[1 : k + 1] > 0.0))


def _newton_chain(M: np.ndarray, k: int):
    """Faddeev-LeVerrier recursion up to T_{k-1}.

    Returns (T_{k-1}, sigma_1..sigma_k) with
    T_0 = I, sigma_j = tr(T_{j-1} M) / j, T_j = sigma_j I - T_{j-1} M.
    """
    n = M.shape[-1]
    eye = np.broadcast_to(np.eye(n), M.shape)
    T = eye.copy()
    sigmas = []
    for j in range(1, k + 1):
        TM = T @ M
        s = np.trace(TM, axis1=-2, axis2=-1) / j
        sigmas.append(s)
        if j < k:
            T = s[..., None, None] * eye - TM
    return T, sigmas


def sigma_matrix(A, k: int):
    """sigma_k of the eigenvalues of a symmetric matrix, without diagonalizing."""
    M = np.asarray(A, dtype=float)
    n = M.shape[-1]
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside [0, {n}]")
    if k == 0:
        return np.ones(M.shape[:-2]) if M.ndim > 2 else 1.0
    _, sigmas = _newton_chain(M, k)
    return sigmas[-1]


def newton_transform(A, k: int) -> np.ndarray:
    """T_{k-1}(A) = sum_j (-1)^j sigma_{k-1-j}(A) A^j, the derivative of sigma_k."""
    M = as_sym_matrix(A)
    n = M.shape[-1]
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside [1, {n}]")
    T, _ = _newton_chain(M, k)
    return T


def _perm_sign(p) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def newton_transform_delta(A, k: int) -> np.ndarray:
    """T_{k-1} from the generalized Kronecker delta sum, by enumeration.

    T^b_c = 1/(k-1)! sum delta(i_1..i_{k-1} b ; j_1..j_{k-1} c) A_{i_1 j_1}...A_{i_{k-1} j_{k-1}}.
    Factorial cost; only meant as an independent check of newton_transform.
    """
    M = as_sym_matrix(A)
    if M.ndim != 2:
        raise ValidationError("newton_transform_delta takes a single matrix")
    n = M.shape[0]
    if n > DELTA_MAX_DIM:
        raise CapacityError(f"delta enumeration limited to n <= {DELTA_MAX_DIM}, got {n}")
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside [1, {n}]")
    m = k - 1
    perms = [(p, _perm_sign(p)) for p in itertools.permutations(range(k))]
    T = np.zeros((n, n))
    for b in range(n):
        others = [i for i in range(n) if i != b]
        for upper in itertools.permutations(others, m):
            top = upper + (b,)
            for p, sgn in perms:
                lower = tuple(top[q] for q in p)
                term = float(sgn)
                for r in range(m):
                    term *= M[top[r], lower[r]]
                    if term == 0.0:
                        break
                T[b, lower[m]] += term
    return T / math.factorial(m)


def h_tensors(A, k: int):
    """H = T_{k-1}(A) A and its trace-free part.

    Returns ``(H, Hring)``; trace(H) = k sigma_k(A).
    """
    M = as_sym_matrix(A)
    n = M.shape[-1]
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside [1, {n}]")
    T, _ = _newton_chain(M, k)
    H = T @ M
    H = 0.5 * (H + np.swapaxes(H, -1, -2))
    tr = np.trace(H, axis1=-2, axis2=-1)
    Hring = H - (tr / n)[..., None, None] * np.eye(n)
    return H, Hring


def eigenvalues(A, max_sweeps: int = 50, tol: float = 1e-15) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    M = as_sym_matrix(A)
    if M.ndim != 2:
        raise ValidationError("eigenvalues takes a single matrix")
    a = M.copy()
    n = a.shape[0]
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
    raise NumericError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
