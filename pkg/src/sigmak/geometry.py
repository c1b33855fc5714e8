"""Schouten tensors and sigma_k curvature of conformal metrics g = u^{4/(n-2)} g_b.

Three conformally flat backgrounds are supported: Euclidean space, the
cylinder R x S^{n-1} with g_c = dt^2 + dtheta^2, and the round sphere.  All
tensors are expressed in an orthonormal frame of the background; on the
cylinder the first frame vector is d/dt.

Charts
------
A :class:`Chart` fixes the coordinates in which conformal factors are sampled:

``euclidean``  coordinates x_1..x_n
``cylinder``   t followed by hyperspherical angles a_1..a_{n-1} on S^{n-1}
``radial``     t only, for factors that do not depend on the angles (any n)

The sphere embedding is omega_1 = cos a_1, omega_i = sin a_1..sin a_{i-1} cos a_i,
omega_n = sin a_1..sin a_{n-1}; the coordinate scale factors are
h_t = 1, h_{a_j} = prod_{i<j} sin a_i.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import symfun
from .errors import DomainError, ValidationError


class BackgroundKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    CYLINDER = "cylinder"
    SPHERE = "sphere"


@dataclass(frozen=True)
class Background:
    kind: BackgroundKind
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "kind", BackgroundKind(self.kind))
        if int(self.dim) != self.dim or self.dim < 3:
            raise ValidationError(f"background dimension must be an integer >= 3, got {self.dim}")


def background_schouten(bg: Background) -> np.ndarray:
    n = bg.dim
    if bg.kind is BackgroundKind.EUCLIDEAN:
        return np.zeros((n, n))
    if bg.kind is BackgroundKind.CYLINDER:
        A = 0.5 * np.eye(n)
        A[0, 0] = -0.5
        return A
    return 0.5 * np.eye(n)


@dataclass(frozen=True)
class ConformalJet:
    """Second-order jet of a conformal factor in the background frame.

    ``u`` may carry batch dimensions; ``grad_u`` then has shape (..., n) and
    ``hess_u`` shape (..., n, n).
    """

    background: Background
    u: np.ndarray
    grad_u: np.ndarray
    hess_u: np.ndarray

    def __post_init__(self):
        n = self.background.dim
        u = np.asarray(self.u, dtype=float)
        g = np.asarray(self.grad_u, dtype=float)
        H = np.asarray(self.hess_u, dtype=float)
        if g.shape != u.shape + (n,) or H.shape != u.shape + (n, n):
            raise ValidationError(
                f"jet shapes inconsistent with n={n}: u{u.shape}, grad{g.shape}, hess{H.shape}"
            )
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "grad_u", g)
        object.__setattr__(self, "hess_u", symfun.as_sym_matrix(H))

    @property
    def n(self) -> int:
        return self.background.dim


def normalized_constant(n: int, k: int) -> float:
    """binom(n, k) / 2^k, the sigma_k curvature of the round sphere."""
    return math.comb(n, k) * 0.5**k


def schouten_conformal(jet: ConformalJet) -> np.ndarray:
    """Frame components of the Schouten tensor of u^{4/(n-2)} g_b (as a 2-tensor)."""
    if np.any(~(jet.u > 0.0)):
        raise DomainError("conformal factor must be positive")
    n = jet.n
    u = jet.u[..., None, None]
    du = jet.grad_u
    outer = du[..., :, None] * du[..., None, :]
    sq = np.sum(du * du, axis=-1)[..., None, None]
    eye = np.eye(n)
    return (
        background_schouten(jet.background)
        - (2.0 / (n - 2)) * jet.hess_u / u
        + (2.0 * n / (n - 2) ** 2) * outer / u**2
        - (2.0 / (n - 2) ** 2) * sq / u**2 * eye
    )


def schouten_operator(jet: ConformalJet) -> np.ndarray:
    """Frame matrix of g^{-1}A, i.e. the Schouten tensor scaled by u^{-4/(n-2)}."""
    A = schouten_conformal(jet)
    return A * (jet.u ** (-4.0 / (jet.n - 2)))[..., None, None]


def sigma_k_curvature(jet: ConformalJet, k: int):
    """sigma_k(g^{-1}A_g) and its residual against binom(n,k)/2^k.

    Returns ``(sigma, residual)`` with residual = sigma - binom(n,k)/2^k.
    """
    n = jet.n
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside [1, {n}]")
    s = symfun.sigma_matrix(schouten_operator(jet), k)
    if np.ndim(s) == 0:
        s = float(s)
    return s, s - normalized_constant(n, k)


def hyperplane_2ff(v: float, dv_dxn: float, n: int) -> float:
    """Isotropic coefficient -(4/(n-2)) v^{-1} dv/dx_n of the 2nd fundamental form of {x_n = 0}.

    Only its sign is meaningful (positive: convex in this convention).
    """
    if not v > 0.0:
        raise DomainError("v must be positive")
    return -(4.0 / (n - 2)) * dv_dxn / v


# --- Euclidean / cylinder dictionary -------------------------------------------------


def euclidean_to_cylinder(u_euc: float, x) -> tuple[float, float]:
    """(t, u_cyl) with t = -ln|x| and u_cyl = |x|^{(n-2)/2} u_euc."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise DomainError("the origin has no cylinder coordinate")
    n = x.size
    return -math.log(r), r ** ((n - 2) / 2.0) * float(u_euc)


def cylinder_to_euclidean(t: float, u_cyl: float, n: int) -> tuple[float, float]:
    """(|x|, u_euc) for the inverse map: |x| = e^{-t}, u_euc = e^{(n-2)t/2} u_cyl."""
    return math.exp(-t), math.exp((n - 2) / 2.0 * t) * float(u_cyl)


def t0_from_r0(r0: float) -> float:
    """Cylinder height of a geodesic sphere of radius r0 about the pole: ln(tan(r0/2))^{-1}."""
    if not 0.0 < r0 < math.pi:
        raise DomainError("r0 must lie in (0, pi)")
    return -math.log(math.tan(0.5 * r0))


def _cylinder_frame_basis(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of R^n whose first column is -x/|x| (the direction of d/dt)."""
    n = x.size
    e0 = -x / np.linalg.norm(x)
    M = np.eye(n)
    M[:, 0] = e0
    Q, _ = np.linalg.qr(M)
    if Q[:, 0] @ e0 < 0:
        Q = -Q
    return Q


def transplant_jet(jet: ConformalJet, x) -> ConformalJet:
    """Carry a Euclidean jet at x != 0 to the cylinder picture at t = -ln|x|.

    The cylinder factor is f = |x|^{(n-2)/2} u.  Its g_c-Hessian is obtained
    from the Euclidean one through the conformal change g_c = e^{2 phi} g_E,
    phi = -ln|x|, and expressed in the frame {d/dt, angular}.
    """
    if jet.background.kind is not BackgroundKind.EUCLIDEAN:
        raise ValidationError("transplant_jet expects a Euclidean jet")
    x = np.asarray(x, dtype=float)
    n = jet.n
    r2 = float(x @ x)
    if r2 == 0.0:
        raise DomainError("the origin has no cylinder coordinate")
    m = (n - 2) / 2.0
    u, du, ddu = float(jet.u), jet.grad_u, jet.hess_u
    rm = r2 ** (m / 2.0)
    # derivatives of |x|^m
    d_rm = m * rm * x / r2
    dd_rm = m * rm / r2 * (np.eye(n) + (m - 2.0) * np.outer(x, x) / r2)
    f = rm * u
    df = d_rm * u + rm * du
    ddf = dd_rm * u + np.outer(d_rm, du) + np.outer(du, d_rm) + rm * ddu
    dphi = -x / r2
    hess_c = ddf - np.outer(dphi, df) - np.outer(df, dphi) + (dphi @ df) * np.eye(n)
    R = _cylinder_frame_basis(x)
    scale = math.sqrt(r2)  # g_c-unit vectors are |x| times Euclidean unit vectors
    grad_frame = scale * (R.T @ df)
    hess_frame = r2 * (R.T @ hess_c @ R)
    return ConformalJet(Background(BackgroundKind.CYLINDER, n), np.float64(f), grad_frame, hess_frame)


# --- closed-form factors -------------------------------------------------------------


def round_sphere_jet(x) -> ConformalJet:
    """Jet of u = (2/(1+|x|^2))^{(n-2)/2} on R^n, the stereographic round sphere."""
    x = np.asarray(x, dtype=float)
    n = x.size
    m = (n - 2) / 2.0
    s = 1.0 + float(x @ x)
    u = (2.0 / s) ** m
    grad = -2.0 * m * u * x / s
    hess = -2.0 * m * u / s * np.eye(n) + 4.0 * m * (m + 1.0) * u * np.outer(x, x) / s**2
    return ConformalJet(Background(BackgroundKind.EUCLIDEAN, n), np.float64(u), grad, hess)


def radial_cylinder_jet(u, p, utt, n: int) -> ConformalJet:
    """Jet of a t-only factor on the cylinder: grad = (u_t, 0..), Hess = diag(u_tt, 0..)."""
    u = np.asarray(u, dtype=float)
    grad = np.zeros(u.shape + (n,))
    grad[..., 0] = p
    hess = np.zeros(u.shape + (n, n))
    hess[..., 0, 0] = utt
    return ConformalJet(Background(BackgroundKind.CYLINDER, n), u, grad, hess)


# --- charts --------------------------------------------------------------------------


def sphere_embedding(angles) -> np.ndarray:
    """Unit vectors omega(a) in R^{m+1} for hyperspherical angles a of shape (..., m)."""
    a = np.asarray(angles, dtype=float)
    m = a.shape[-1]
    out = np.empty(a.shape[:-1] + (m + 1,))
    prod = np.ones(a.shape[:-1])
    for i in range(m):
        out[..., i] = prod * np.cos(a[..., i])
        prod = prod * np.sin(a[..., i])
    out[..., m] = prod
    return out


def sphere_tangents(angles) -> np.ndarray:
    """d omega / d a_j stacked as (..., m, m+1)."""
    a = np.asarray(angles, dtype=float)
    m = a.shape[-1]
    s, c = np.sin(a), np.cos(a)
    out = np.zeros(a.shape[:-1] + (m, m + 1))
    for j in range(m):
        for i in range(j, m + 1):
            val = np.ones(a.shape[:-1])
            for l in range(min(i, m)):
                val = val * (c[..., l] if l == j else s[..., l])
            if i < m:
                val = val * (-s[..., i] if i == j else c[..., i])
            out[..., j, i] = val
    return out


def angular_scale_factors(angles) -> np.ndarray:
    """h_{a_j} = prod_{i<j} sin a_i, shape (..., m)."""
    a = np.asarray(angles, dtype=float)
    s = np.sin(a)
    h = np.ones_like(a)
    for j in range(1, a.shape[-1]):
        h[..., j] = h[..., j - 1] * s[..., j - 1]
    return h


class ChartKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    CYLINDER = "cylinder"
    RADIAL = "radial"


@dataclass(frozen=True)
class Chart:
    kind: ChartKind
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ChartKind(self.kind))
        if self.n < 3:
            raise ValidationError("chart dimension must be >= 3")

    @property
    def d(self) -> int:
        """Number of coordinates."""
        return 1 if self.kind is ChartKind.RADIAL else self.n

    @property
    def background(self) -> Background:
        if self.kind is ChartKind.EUCLIDEAN:
            return Background(BackgroundKind.EUCLIDEAN, self.n)
        return Background(BackgroundKind.CYLINDER, self.n)

    @property
    def polar_axes(self) -> tuple[int, ...]:
        """Coordinate axes whose range is [0, pi] (hyperspherical polar angles)."""
        if self.kind is ChartKind.CYLINDER:
            return tuple(range(1, self.n - 1))
        return ()

    def scale_factors(self, points) -> np.ndarray:
        P = np.asarray(points, dtype=float)
        if self.kind is ChartKind.CYLINDER:
            h = np.ones(P.shape)
            h[..., 1:] = angular_scale_factors(P[..., 1:])
            return h
        return np.ones(P.shape)

    def volume_factor(self, points) -> np.ndarray:
        """sqrt(det g_b) in chart coordinates (times the omitted angular volume for radial)."""
        return np.prod(self.scale_factors(points), axis=-1)

    def to_euclidean(self, points) -> np.ndarray:
        P = np.asarray(points, dtype=float)
        if self.kind is ChartKind.EUCLIDEAN:
            return P
        if self.kind is ChartKind.RADIAL:
            raise ValidationError("radial chart points do not determine a Euclidean point")
        return np.exp(-P[..., :1]) * sphere_embedding(P[..., 1:])

    def covariant_hessian(self, points, grad_c, hess_c) -> np.ndarray:
        """Coordinate components of the background Hessian from partial derivatives."""
        H = np.array(hess_c, dtype=float, copy=True)
        if self.kind is not ChartKind.CYLINDER:
            return H
        P = np.asarray(points, dtype=float)
        a = P[..., 1:]
        s, c = np.sin(a), np.cos(a)
        m = a.shape[-1]
        g = np.asarray(grad_c, dtype=float)
        for i in range(m):
            for j in range(i + 1, m):
                # Gamma^{a_j}_{a_i a_j} = cot a_i
                corr = c[..., i] / s[..., i] * g[..., 1 + j]
                H[..., 1 + i, 1 + j] -= corr
                H[..., 1 + j, 1 + i] -= corr
        for j in range(m):
            for i in range(j):
                # -Gamma^{a_i}_{a_j a_j} = (h_j/h_i)^2 cot a_i = sin a_i cos a_i prod_{i<l<j} sin^2 a_l
                w = s[..., i] * c[..., i]
                for l in range(i + 1, j):
                    w = w * s[..., l] ** 2
                H[..., 1 + j, 1 + j] += w * g[..., 1 + i]
        return H

    def frame_jet(self, points, u, grad_c, hess_c) -> ConformalJet:
        """Convert coordinate partial derivatives into an orthonormal-frame jet."""
        u = np.asarray(u, dtype=float)
        if self.kind is ChartKind.RADIAL:
            g = np.asarray(grad_c)[..., 0]
            h = np.asarray(hess_c)[..., 0, 0]
            return radial_cylinder_jet(u, g, h, self.n)
        hs = self.scale_factors(points)
        H = self.covariant_hessian(points, grad_c, hess_c)
        grad_f = np.asarray(grad_c, dtype=float) / hs
        hess_f = H / (hs[..., :, None] * hs[..., None, :])
        return ConformalJet(self.background, u, grad_f, hess_f)
