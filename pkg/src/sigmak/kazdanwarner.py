"""Conformal Killing fields and numerical checks of the Kazdan-Warner identity.

For a locally conformally flat metric g and a conformal Killing field X,

    (n-k)/n <X, grad sigma_k(g^{-1}A)> = div_g(V),   V^b = X^a Hring_a^b,

and integrating over an annulus N = [t_a, t_b] x S^{n-1} gives the balance
between a volume integral and the fluxes of V through the two ends.

Fields are evaluated in a chart.  On the cylinder chart a dilation about the
origin is d/dt, i.e. the pullback of -x.d/dx under t = -ln|x|.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import symfun
from .errors import DomainError, RangeError, ValidationError
from .geometry import Chart, ChartKind, ConformalJet, schouten_operator, sphere_embedding, sphere_tangents
from .gridfield import GridField, fd_gradient
from .pohozaev import SphereGrid, boundary_flux, hring_frame


class CkKind(str, enum.Enum):
    DILATION = "dilation"
    TRANSLATION = "translation"
    ROTATION = "rotation"
    SPECIAL_CONFORMAL = "special_conformal"


@dataclass(frozen=True)
class CkField:
    """A conformal Killing field of flat R^n.

    ``vector`` is the centre of a dilation or the unit direction of a
    translation / special conformal field; ``plane`` is the 1-based (i, j) of a
    rotation with X_i = -x_j, X_j = x_i.
    """

    kind: CkKind
    n: int
    vector: tuple = ()
    plane: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", CkKind(self.kind))
        if int(self.n) != self.n or self.n < 3:
            raise ValidationError("dimension must be an integer >= 3")
        if self.kind is CkKind.ROTATION:
            i, j = (int(v) for v in self.plane)
            if not (1 <= i <= self.n and 1 <= j <= self.n and i != j):
                raise ValidationError(f"bad rotation plane {self.plane} for n={self.n}")
            object.__setattr__(self, "plane", (i, j))
            return
        v = np.zeros(self.n) if self.kind is CkKind.DILATION and not len(self.vector) else np.asarray(self.vector, dtype=float)
        if v.shape != (self.n,) or not np.all(np.isfinite(v)):
            raise ValidationError(f"generator vector must have {self.n} finite entries")
        if self.kind is not CkKind.DILATION:
            norm = float(np.linalg.norm(v))
            if norm == 0.0:
                raise ValidationError("direction must be nonzero")
            v = v / norm
        object.__setattr__(self, "vector", tuple(float(c) for c in v))

    @classmethod
    def dilation(cls, n: int, center=None) -> "CkField":
        return cls(CkKind.DILATION, n, () if center is None else tuple(center))

    @classmethod
    def translation(cls, n: int, direction) -> "CkField":
        return cls(CkKind.TRANSLATION, n, tuple(_direction(n, direction)))

    @classmethod
    def rotation(cls, n: int, i: int, j: int) -> "CkField":
        return cls(CkKind.ROTATION, n, plane=(i, j))

    @classmethod
    def special_conformal(cls, n: int, direction) -> "CkField":
        return cls(CkKind.SPECIAL_CONFORMAL, n, tuple(_direction(n, direction)))

    @property
    def label(self) -> str:
        if self.kind is CkKind.ROTATION:
            return f"rotation:{self.plane[0]},{self.plane[1]}"
        return f"{self.kind.value}:" + ",".join(f"{c:g}" for c in self.vector)

    def euclidean(self, x) -> np.ndarray:
        """Components in R^n at points x of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValidationError(f"points must have {self.n} coordinates")
        if self.kind is CkKind.ROTATION:
            i, j = self.plane[0] - 1, self.plane[1] - 1
            out = np.zeros_like(x)
            out[..., i] = -x[..., j]
            out[..., j] = x[..., i]
            return out
        b = np.asarray(self.vector)
        if self.kind is CkKind.DILATION:
            return x - b
        if self.kind is CkKind.TRANSLATION:
            return np.broadcast_to(b, x.shape).copy()
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        return r2 * b - 2.0 * np.sum(x * b, axis=-1, keepdims=True) * x

    def coords(self, chart: Chart, points) -> np.ndarray:
        """Coordinate components in ``chart`` at chart points (..., chart.d)."""
        P = np.asarray(points, dtype=float)
        if chart.n != self.n:
            raise ValidationError("chart and field dimensions differ")
        if chart.kind is ChartKind.EUCLIDEAN:
            return self.euclidean(P)
        if chart.kind is ChartKind.RADIAL:
            if self.kind is not CkKind.DILATION or any(self.vector):
                raise ValidationError("the radial chart only carries the dilation about the origin")
            return np.ones(P.shape)
        t, ang = P[..., 0], P[..., 1:]
        omega = sphere_embedding(ang)
        x = np.exp(-t)[..., None] * omega
        X = self.euclidean(x)
        if self.kind is CkKind.DILATION:
            X = -X
        h = chart.scale_factors(P)[..., 1:]
        out = np.empty(P.shape)
        out[..., 0] = -np.sum(X * x, axis=-1) / np.sum(x * x, axis=-1)
        tang = sphere_tangents(ang)
        out[..., 1:] = np.exp(t)[..., None] * np.einsum("...jc,...c->...j", tang, X) / h**2
        return out

    def frame(self, chart: Chart, points) -> np.ndarray:
        """Components in the orthonormal background frame of ``chart``."""
        return self.coords(chart, points) * chart.scale_factors(points)


def _direction(n: int, d) -> np.ndarray:
    if np.ndim(d) == 0:
        i = int(d)
        if not 1 <= i <= n:
            raise ValidationError(f"axis {i} outside 1..{n}")
        v = np.zeros(n)
        v[i - 1] = 1.0
        return v
    return np.asarray(d, dtype=float)


def ck_eval(ck: CkField, point, chart: Chart | None = None) -> np.ndarray:
    """Frame components of the field at ``point`` (Euclidean chart by default)."""
    chart = Chart(ChartKind.EUCLIDEAN, ck.n) if chart is None else chart
    return ck.frame(chart, point)


class CylinderLift:
    """A radial metric viewed on the full cylinder chart (t, a_1..a_{n-1})."""

    radial = False

    def __init__(self, metric):
        if not getattr(metric, "radial", False):
            raise ValidationError("only radial metrics can be lifted")
        self.base = metric
        self.params = metric.params
        self.domain = metric.domain
        self.h = metric.h

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def chart(self) -> Chart:
        return Chart(ChartKind.CYLINDER, self.n)

    def value(self, points):
        return self.base.value(np.asarray(points, dtype=float)[..., :1])

    def jets(self, points) -> ConformalJet:
        return self.base.jets(np.asarray(points, dtype=float)[..., :1])


# --- pointwise identity ----------------------------------------------------------------


@dataclass
class DivergenceReport:
    """Both sides of the pointwise identity on a set of sample points."""

    chart: str
    n: int
    k: int
    field: str
    steps: tuple
    points: np.ndarray = field(repr=False)
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    residual_max: float = 0.0
    residual_l2: float = 0.0
    order: float | None = None
    coarse_residual_max: float | None = None

    def summary(self) -> dict:
        return {
            "chart": self.chart,
            "n": self.n,
            "k": self.k,
            "field": self.field,
            "steps": list(self.steps),
            "points": int(self.lhs.size),
            "lhs_max": float(np.max(np.abs(self.lhs))),
            "rhs_max": float(np.max(np.abs(self.rhs))),
            "residual_max": self.residual_max,
            "residual_l2": self.residual_l2,
            "coarse_residual_max": self.coarse_residual_max,
            "order": self.order,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary())

    def to_csv(self, path) -> None:
        pts = self.points.reshape(-1, self.points.shape[-1])
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"c{i + 1}" for i in range(pts.shape[1])] + ["lhs", "rhs", "residual"])
            for p, a, b in zip(pts, self.lhs.ravel(), self.rhs.ravel()):
                w.writerow([f"{v:.17g}" for v in (*p, a, b, a - b)])


def _source_parts(source, step, order):
    """(chart, jets(points), steps, order) for a GridField or an analytic metric."""
    if isinstance(source, GridField):
        return source.chart, source.jets, np.asarray(source.steps), source.order
    if step is None:
        raise ValidationError("analytic metrics need an explicit finite-difference step")
    chart = source.chart
    steps = np.broadcast_to(np.asarray(step, dtype=float), (chart.d,)).copy()
    return chart, source.jets, steps, 2 if order is None else order


def divergence_identity_residual(source, X: CkField, k: int, points=None, step=None,
                                 order: int | None = None) -> DivergenceReport:
    """Evaluate (n-k)/n X^a d_a sigma_k and (det g)^{-1/2} d_b((det g)^{1/2} V^b).

    ``source`` is a :class:`GridField` (jets by finite differences; default
    points are all nodes far enough from the boundary) or an analytic metric
    with exact jets, in which case ``points`` and ``step`` are required.
    """
    chart, jets, steps, order = _source_parts(source, step, order)
    n = chart.n
    if not 1 <= k < n:
        raise DomainError(f"k={k} outside [1, {n - 1}]")
    if chart.kind is ChartKind.CYLINDER and n > 4:
        raise DomainError("angular dependence is supported for n in {3, 4}")
    if points is None:
        if not isinstance(source, GridField):
            raise ValidationError("analytic metrics need explicit sample points")
        points = source.node_points(2 * source.margin)
    P = np.asarray(points, dtype=float)
    if P.shape[-1] != chart.d:
        raise ValidationError(f"points must have {chart.d} coordinates")
    expo = 2.0 * n / (n - 2)

    def sigma(Q):
        return symfun.sigma_matrix(schouten_operator(jets(Q)), k)

    def density_flux(Q):
        jet = jets(Q)
        F = hring_frame(jet, k)
        hs = chart.scale_factors(Q)
        V = np.einsum("...ba,...a->...b", F, X.frame(chart, Q)) / hs
        vol = jet.u**expo * chart.volume_factor(Q)
        return vol[..., None] * V

    dsig = fd_gradient(sigma, P, steps, order)
    lhs = (n - k) / n * np.sum(X.coords(chart, P) * dsig, axis=-1)
    dflux = fd_gradient(density_flux, P, steps, order)
    div = np.trace(dflux, axis1=-2, axis2=-1)
    vol = jets(P).u ** expo * chart.volume_factor(P)
    rhs = div / vol
    res = lhs - rhs
    return DivergenceReport(
        chart.kind.value,
        n,
        k,
        X.label,
        tuple(float(s) for s in steps),
        P,
        lhs,
        rhs,
        float(np.max(np.abs(res))),
        float(np.sqrt(np.mean(res**2))),
    )


def divergence_convergence(metric, X: CkField, k: int, center, step: float, order: int = 2,
                           chart: Chart | None = None, span: int = 1) -> DivergenceReport:
    """Residual on grids of step h and h/2 sampled from ``metric.value``.

    Both grids contain the physical points center + i h (|i| <= span per
    axis), where the residual is compared.  The returned report is the fine
    one, carrying the coarse maximum and the observed order
    log2(coarse max / fine max).
    """
    chart = metric.chart if chart is None else chart
    c = np.asarray(center, dtype=float).reshape(-1)
    if c.shape != (chart.d,):
        raise ValidationError(f"center must have {chart.d} coordinates")
    reach = 2 * (order // 2)
    offsets = np.arange(-span, span + 1) * step
    pts = np.stack(np.meshgrid(*[c[i] + offsets for i in range(chart.d)], indexing="ij"), axis=-1)
    reports = []
    for refine in (1, 2):
        h = step / refine
        half = span * refine + reach
        grid = GridField.from_function(metric.value, chart, c - half * h, np.full(chart.d, h),
                                       np.full(chart.d, 2 * half + 1), order=order)
        reports.append(divergence_identity_residual(grid, X, k, points=pts))
    coarse, fine = reports
    fine.coarse_residual_max = coarse.residual_max
    if fine.residual_max > 0.0 and coarse.residual_max > 0.0:
        fine.order = math.log2(coarse.residual_max / fine.residual_max)
    return fine


# --- integral identity -----------------------------------------------------------------


def _simpson(t_a: float, t_b: float, intervals: int):
    if intervals < 2 or intervals % 2:
        raise ValidationError("Simpson's rule needs an even number (>= 2) of intervals")
    t = np.linspace(t_a, t_b, intervals + 1)
    w = np.ones(intervals + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    return t, w * (t_b - t_a) / (3.0 * intervals)


@dataclass
class AnnulusTerms:
    volume: float
    flux_a: float
    flux_b: float

    @property
    def balance(self) -> float:
        return abs(self.volume - (self.flux_b - self.flux_a))


def annulus_terms(metric, X: CkField, k: int, t_a: float, t_b: float, grid: SphereGrid,
                  t_intervals: int = 32, fd_step: float = 1e-3, order: int = 2) -> AnnulusTerms:
    """Volume integral of (n-k)/n X(sigma_k) and the fluxes of V through Sigma_{t_a}, Sigma_{t_b}.

    Fluxes use the normal +d/dt; the annulus balance is volume - (flux_b - flux_a).
    ``metric`` must provide exact jets on the cylinder; radial metrics are
    lifted automatically when X has angular components.
    """
    if t_a == t_b:
        raise DomainError("degenerate annulus")
    lo, hi = sorted((t_a, t_b))
    for t in (lo, hi):
        if not metric.domain[0] <= t <= metric.domain[1]:
            raise DomainError(f"t={t} outside the metric domain")
    n = metric.n
    if grid.n_minus_1 != n - 1:
        raise ValidationError("SphereGrid dimension does not match the metric")
    dil = X.kind is CkKind.DILATION and not any(X.vector)
    m = metric if not metric.radial or dil else CylinderLift(metric)
    cyl = Chart(ChartKind.CYLINDER, n)
    x_frame = None if (m.radial and dil) else (lambda Q: X.frame(cyl, Q))
    flux_a = boundary_flux(m, lo, grid, k, x_frame=x_frame)
    flux_b = boundary_flux(m, hi, grid, k, x_frame=x_frame)
    ts, wt = _simpson(lo, hi, t_intervals)
    expo = 2.0 * n / (n - 2)
    if m.radial:
        # X = d/dt and a radial integrand: the sphere integral is a factor |S^{n-1}|
        pts = ts[:, None]
        dsig = fd_gradient(lambda Q: symfun.sigma_matrix(schouten_operator(m.jets(Q)), k),
                           pts, fd_step, order)[..., 0]
        dens = (n - k) / n * dsig * m.jets(pts).u ** expo
        volume = float(np.sum(wt * dens)) * float(grid.weights.sum())
    else:
        P = np.concatenate(
            [np.repeat(ts, grid.weights.size)[:, None], np.tile(grid.nodes, (ts.size, 1))], axis=1
        )
        W = np.repeat(wt, grid.weights.size) * np.tile(grid.weights, ts.size)
        dsig = fd_gradient(lambda Q: symfun.sigma_matrix(schouten_operator(m.jets(Q)), k),
                           P, fd_step, order)
        dens = (n - k) / n * np.sum(X.coords(cyl, P) * dsig, axis=-1) * m.jets(P).u ** expo
        volume = float(np.sum(W * dens))
    if t_a > t_b:
        return AnnulusTerms(-volume, flux_b, flux_a)
    return AnnulusTerms(volume, flux_a, flux_b)


def annulus_balance(metric, X: CkField, k: int, t_a: float, t_b: float, grid: SphereGrid,
                    t_intervals: int = 32, fd_step: float = 1e-3, order: int = 2) -> float:
    """|volume integral - (flux at t_b - flux at t_a)| on the annulus between t_a and t_b."""
    return annulus_terms(metric, X, k, t_a, t_b, grid, t_intervals, fd_step, order).balance


def annulus_refinement(metric, X: CkField, k: int, t_a: float, t_b: float, grid: SphereGrid,
                       levels: int = 2, t_intervals: int = 8, fd_step: float = 0.1,
                       order: int = 2) -> list[float]:
    """Balances under joint refinement (t intervals doubled, FD step halved per level)."""
    if levels < 1:
        raise RangeError("need at least one refinement level")
    return [
        annulus_balance(metric, X, k, t_a, t_b, grid, t_intervals * 2**i, fd_step / 2**i, order)
        for i in range(levels)
    ]
