"""k-Dilational Pohozaev invariants of metrics with an isolated puncture.

In cylinder coordinates about the puncture (t -> +inf), with X = d/dt and the
unit normal nu = u^{-2/(n-2)} d/dt pointing at the puncture, the flux through
the cross-section Sigma_t is

    D = int_{S^{n-1}} Hring^t_t u^{2n/(n-2)} dtheta,

where Hring is the trace-free part of T_{k-1}(g^{-1}A) g^{-1}A.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gamma as _gamma, roots_jacobi

from . import symfun
from .delaunay import OdeParams, Trajectory, cylinder_constant
from .errors import DomainError, ValidationError
from .geometry import Chart, ChartKind, ConformalJet, radial_cylinder_jet, schouten_operator


def sphere_volume(m: int) -> float:
    """Volume of the unit m-sphere, 2 pi^{(m+1)/2} / Gamma((m+1)/2)."""
    if int(m) != m or m < 1:
        raise DomainError("sphere dimension must be a positive integer")
    return float(2.0 * math.pi ** ((m + 1) / 2.0) / _gamma((m + 1) / 2.0))


@dataclass(frozen=True)
class SphereGrid:
    """Product quadrature on S^m in hyperspherical angles (a_1..a_m)."""

    n_minus_1: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != (self.weights.size, self.n_minus_1):
            raise ValidationError("nodes must have shape (len(weights), m)")
        if np.any(self.weights <= 0.0):
            raise ValidationError("quadrature weights must be positive")
        if abs(self.weights.sum() - sphere_volume(self.n_minus_1)) > 1e-10:
            raise ValidationError("weights do not sum to the sphere volume")

    def integrate(self, values) -> float:
        return float(np.sum(np.asarray(values) * self.weights))


def sphere_grid(m: int, n_polar: int = 12, n_azimuth: int | None = None) -> SphereGrid:
    """Gauss rule in cos(a_j) for each polar angle, trapezoid in the azimuth.

    The polar angle a_j carries the weight sin^{m-j} a_j; after x = cos a_j
    this is (1-x^2)^{(m-j-1)/2}, integrated exactly by Gauss-Jacobi
    (Gauss-Legendre for the innermost polar angle of S^2).
    """
    if m < 1:
        raise DomainError("sphere dimension must be >= 1")
    n_azimuth = 2 * n_polar if n_azimuth is None else n_azimuth
    axes, wts = [], []
    for j in range(1, m):
        alpha = (m - j - 1) / 2.0
        x, w = roots_jacobi(n_polar, alpha, alpha)
        axes.append(np.arccos(x)[::-1])
        wts.append(w[::-1])
    axes.append(2.0 * math.pi * np.arange(n_azimuth) / n_azimuth)
    wts.append(np.full(n_azimuth, 2.0 * math.pi / n_azimuth))
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    weights = np.ones(nodes.shape[0])
    for w in np.meshgrid(*wts, indexing="ij"):
        weights = weights * w.reshape(-1)
    weights *= sphere_volume(m) / weights.sum()
    return SphereGrid(m, nodes, weights)


# --- metrics --------------------------------------------------------------------------


class AnalyticRadial:
    """Closed-form radial factor on the whole cylinder: 'sphere', 'cylinder' or 'constant'."""

    kind = "analytic-radial"
    radial = True

    def __init__(self, params: OdeParams, profile: str = "sphere", value: float = 1.0):
        if profile not in ("sphere", "cylinder", "constant"):
            raise ValidationError(f"unknown radial profile {profile!r}")
        self.params = params
        self.profile = profile
        self.const = cylinder_constant(params)[0] if profile == "cylinder" else float(value)
        if profile != "sphere" and not self.const > 0.0:
            raise DomainError("constant factor must be positive")
        self.domain = (-math.inf, math.inf)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def chart(self) -> Chart:
        return Chart(ChartKind.RADIAL, self.n)

    @property
    def h(self) -> float | None:
        if self.profile == "sphere":
            return 0.0
        if self.profile == "cylinder":
            return cylinder_constant(self.params)[1]
        return None

    def radial_jet(self, t):
        t = np.asarray(t, dtype=float)
        if self.profile == "sphere":
            m = (self.n - 2) / 2.0
            u = np.cosh(t) ** (-m)
            th = np.tanh(t)
            return u, -m * th * u, u * (m * m * th * th - m / np.cosh(t) ** 2)
        z = np.zeros_like(t)
        return z + self.const, z, z

    def value(self, points):
        return self.radial_jet(np.asarray(points)[..., 0])[0]

    def jets(self, points) -> ConformalJet:
        u, p, utt = self.radial_jet(np.asarray(points)[..., 0])
        return radial_cylinder_jet(u, p, utt, self.n)


class ExactRadial:
    """Radial factor backed by an integrated Delaunay orbit."""

    kind = "exact-radial"
    radial = True

    def __init__(self, trajectory: Trajectory):
        self.trajectory = trajectory
        self.params = trajectory.params
        self.domain = trajectory.t_span
        self.h = trajectory.h_mean()

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def chart(self) -> Chart:
        return Chart(ChartKind.RADIAL, self.n)

    def radial_jet(self, t):
        return self.trajectory.jet_at(np.asarray(t, dtype=float))

    def value(self, points):
        return self.trajectory.at(np.asarray(points, dtype=float)[..., 0])[0]

    def jets(self, points) -> ConformalJet:
        u, p, utt = self.radial_jet(np.asarray(points, dtype=float)[..., 0])
        return radial_cylinder_jet(u, p, utt, self.n)


class Perturbed:
    """u = base(t) + eps * e^{-rate t} * cos(a_1), an angularly perturbed factor.

    cos(a_1) = x_1/|x| is a first spherical harmonic.  Jets are exact.
    """

    kind = "perturbed"
    radial = False

    def __init__(self, base, eps: float = 0.1, rate: float = 1.0):
        self.base = base
        self.params = base.params
        self.eps = float(eps)
        self.rate = float(rate)
        self.domain = base.domain
        self.h = None

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def chart(self) -> Chart:
        return Chart(ChartKind.CYLINDER, self.n)

    def _check(self, P):
        if P.shape[-1] != self.n:
            raise ValidationError(f"perturbed factors need full cylinder points (d={self.n})")

    def value(self, points):
        P = np.asarray(points, dtype=float)
        self._check(P)
        u0 = self.base.radial_jet(P[..., 0])[0]
        return u0 + self.eps * np.exp(-self.rate * P[..., 0]) * np.cos(P[..., 1])

    def jets(self, points) -> ConformalJet:
        P = np.asarray(points, dtype=float)
        self._check(P)
        t, a1 = P[..., 0], P[..., 1]
        u0, p0, q0 = self.base.radial_jet(t)
        e = self.eps * np.exp(-self.rate * t)
        c, s, r = np.cos(a1), np.sin(a1), self.rate
        d = self.n
        grad = np.zeros(P.shape)
        hess = np.zeros(P.shape + (d,))
        u = u0 + e * c
        grad[..., 0] = p0 - r * e * c
        grad[..., 1] = -e * s
        hess[..., 0, 0] = q0 + r * r * e * c
        hess[..., 0, 1] = hess[..., 1, 0] = r * e * s
        hess[..., 1, 1] = -e * c
        return self.chart.frame_jet(P, u, grad, hess)


# --- invariants -----------------------------------------------------------------------


def hring11_radial(u: float, p: float, params: OdeParams) -> float:
    """Closed radial expression for Hring^t_t (exact along radial solutions)."""
    if not u > 0.0:
        raise DomainError("u must be positive")
    n, k, a = params.n, params.k, params.a
    W = 1.0 - a * a * (p / u) ** 2
    pref = math.comb(n - 1, k - 1) * (n - k) / n * n / (2.0 * k) * 0.5 ** (k - 1)
    return pref * (1.0 - u ** (-4.0 * k / (n - 2)) * W**k)


def hring_frame(jet: ConformalJet, k: int) -> np.ndarray:
    """Trace-free H of the operator g^{-1}A in the background frame."""
    return symfun.h_tensors(schouten_operator(jet), k)[1]


def hring11_pipeline(u: float, p: float, utt: float, n: int, k: int) -> float:
    """Hring^t_t through schouten_conformal -> h_tensors for a radial jet."""
    return float(hring_frame(radial_cylinder_jet(u, p, utt, n), k)[0, 0])


def _check_t0(metric, t0: float) -> None:
    lo, hi = metric.domain
    if not lo <= t0 <= hi:
        raise DomainError(f"t0={t0} outside the metric domain [{lo}, {hi}]")


def boundary_flux(metric, t0: float, grid: SphereGrid | None, k: int, x_frame=None) -> float:
    """int_{Sigma_t0} Hring(X, nu) dsigma_g with nu along +d/dt.

    ``x_frame`` maps cylinder points (..., n) to frame components of X; the
    default is X = d/dt.
    """
    _check_t0(metric, t0)
    n = metric.n
    if metric.radial and x_frame is None:
        jet = metric.jets(np.array([t0]))
        dens = hring_frame(jet, k)[0, 0] * jet.u ** (2.0 * n / (n - 2))
        return float(dens) * sphere_volume(n - 1)
    if grid is None:
        raise ValidationError("a SphereGrid is needed for non-radial integrands")
    if grid.n_minus_1 != n - 1:
        raise ValidationError("SphereGrid dimension does not match the metric")
    P = np.concatenate([np.full((grid.weights.size, 1), float(t0)), grid.nodes], axis=1)
    jet = metric.jets(P)
    F = hring_frame(jet, k)
    if x_frame is None:
        row = F[:, 0, 0]
    else:
        row = np.einsum("ia,ia->i", F[:, 0, :], x_frame(P))
    return grid.integrate(row * jet.u ** (2.0 * n / (n - 2)))


def dk_quadrature(metric, t0: float, grid: SphereGrid | None, k: int) -> float:
    """D_k by quadrature over the cross-section Sigma_t0."""
    return boundary_flux(metric, t0, grid, k)


def dk_prefactor(params: OdeParams) -> float:
    n, k = params.n, params.k
    return math.comb(n - 1, k - 1) * (n - k) / n * n / (2.0 * k) * 0.5 ** (k - 1)


def dk_closed_form(h: float, params: OdeParams) -> float:
    """binom(n-1,k-1) (n-k)/n n/(2k) 2^{1-k} h |S^{n-1}|."""
    return dk_prefactor(params) * h * sphere_volume(params.n - 1)


@dataclass
class DkResult:
    n: int
    k: int
    h: float | None
    t0: float
    quadrature: float
    closed_form: float | None
    residual: float | None
    orientation: int = 1

    @property
    def value(self) -> float:
        """Invariant of this end: the flux paired with the end's normal orientation."""
        return self.orientation * self.quadrature

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)


def compute_dk(metric, t0: float, k: int | None = None, grid: SphereGrid | None = None,
               orientation: int = 1) -> DkResult:
    """Quadrature value, closed form (when h is known) and their difference."""
    k = metric.params.k if k is None else k
    if grid is None and not metric.radial:
        grid = sphere_grid(metric.n - 1)
    q = dk_quadrature(metric, t0, grid, k)
    h = metric.h
    cf = dk_closed_form(h, OdeParams(metric.n, k)) if h is not None else None
    res = abs(q - cf) if cf is not None else None
    return DkResult(metric.n, k, h, float(t0), q, cf, res, orientation)


def two_ended(metric, t_minus: float, t_plus: float, k: int | None = None,
              grid: SphereGrid | None = None) -> list[DkResult]:
    """Invariants of both ends of a cylinder for the global field X = d/dt.

    The end at t -> +inf is measured on Sigma_{t_plus} with nu = +d/dt; the
    end at t -> -inf on Sigma_{t_minus} with nu = -d/dt.
    """
    return [
        compute_dk(metric, t_plus, k, grid, orientation=1),
        compute_dk(metric, t_minus, k, grid, orientation=-1),
    ]


def puncture_sum(ends) -> float:
    """Signed sum of the invariants of all ends; vanishes for a global solution."""
    ends = list(ends)
    if not ends:
        raise DomainError("no ends given")
    return float(math.fsum(e.value for e in ends))


def t0_spread(metric, t0s, k: int | None = None, grid: SphereGrid | None = None):
    """DkResults over several cross-sections and their relative spread."""
    results = [compute_dk(metric, t, k, grid) for t in t0s]
    vals = np.array([r.quadrature for r in results])
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    return results, float((vals.max() - vals.min()) / scale)
