"""Grid-sampled conformal factors and central finite-difference jets."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import RangeError, ValidationError
from .geometry import Chart, ChartKind, ConformalJet

# central-difference weights keyed by integer offset
_FIRST = {
    2: {1: 0.5, -1: -0.5},
    4: {2: -1.0 / 12.0, 1: 8.0 / 12.0, -1: -8.0 / 12.0, -2: 1.0 / 12.0},
}
_SECOND = {
    2: {1: 1.0, 0: -2.0, -1: 1.0},
    4: {2: -1.0 / 12.0, 1: 16.0 / 12.0, 0: -30.0 / 12.0, -1: 16.0 / 12.0, -2: -1.0 / 12.0},
}


def _check_order(order: int) -> int:
    if order not in _FIRST:
        raise ValidationError(f"finite-difference order must be 2 or 4, got {order}")
    return order


class _OffsetCache:
    """Evaluates a sampler at integer stencil offsets, each offset once."""

    def __init__(self, func, points, steps):
        self.func = func
        self.points = points
        self.steps = steps
        self.d = points.shape[-1]
        self.cache = {}

    def __call__(self, offset):
        key = tuple(offset)
        if key not in self.cache:
            shift = np.asarray(key, dtype=float) * self.steps
            self.cache[key] = np.asarray(self.func(self.points + shift), dtype=float)
        return self.cache[key]

    def unit(self, axis, m, axis2=None, m2=0):
        off = [0] * self.d
        off[axis] += m
        if axis2 is not None:
            off[axis2] += m2
        return self(off)


def fd_partials(sampler, points, steps, order: int = 2):
    """Value, coordinate gradient and coordinate Hessian by central differences.

    ``sampler`` maps an array of points (..., d) to values (...).
    """
    _check_order(order)
    P = np.asarray(points, dtype=float)
    d = P.shape[-1]
    hs = np.broadcast_to(np.asarray(steps, dtype=float), (d,))
    ev = _OffsetCache(sampler, P, hs)
    u = ev([0] * d)
    grad = np.zeros(u.shape + (d,))
    hess = np.zeros(u.shape + (d, d))
    w1, w2 = _FIRST[order], _SECOND[order]
    for i in range(d):
        grad[..., i] = sum(w * ev.unit(i, m) for m, w in w1.items()) / hs[i]
        hess[..., i, i] = sum(w * ev.unit(i, m) for m, w in w2.items()) / hs[i] ** 2
        for j in range(i + 1, d):
            acc = sum(
                wa * wb * ev.unit(i, ma, j, mb) for ma, wa in w1.items() for mb, wb in w1.items()
            )
            hess[..., i, j] = hess[..., j, i] = acc / (hs[i] * hs[j])
    return u, grad, hess


def fd_gradient(func, points, steps, order: int = 2, axes=None):
    """Central-difference partial derivatives of a (possibly array-valued) field.

    ``func`` maps points (..., d) to values (..., *extra); the result has shape
    (..., len(axes), *extra).
    """
    _check_order(order)
    P = np.asarray(points, dtype=float)
    d = P.shape[-1]
    hs = np.broadcast_to(np.asarray(steps, dtype=float), (d,))
    axes = range(d) if axes is None else axes
    ev = _OffsetCache(func, P, hs)
    parts = [sum(w * ev.unit(i, m) for m, w in _FIRST[order].items()) / hs[i] for i in axes]
    return np.stack(parts, axis=P.ndim - 1)


def _axis_names(chart: Chart) -> list[str]:
    if chart.kind is ChartKind.EUCLIDEAN:
        return [f"x{i + 1}" for i in range(chart.n)]
    if chart.kind is ChartKind.RADIAL:
        return ["t"]
    return ["t"] + [f"a{i + 1}" for i in range(chart.n - 1)]


@dataclass(frozen=True)
class GridField:
    """A positive conformal factor sampled on a uniform chart grid.

    ``samples[i_1, .., i_d]`` is u at ``origin + i * steps``.  Immutable.
    """

    chart: Chart
    origin: tuple
    steps: tuple
    samples: np.ndarray = field(repr=False)
    order: int = 2
    polar_collar: float = 1e-2

    def __post_init__(self):
        d = self.chart.d
        origin = tuple(float(v) for v in np.atleast_1d(self.origin))
        steps = tuple(float(v) for v in np.atleast_1d(self.steps))
        if len(origin) != d or len(steps) != d:
            raise ValidationError(f"origin/steps must have {d} entries")
        if any(not s > 0.0 for s in steps):
            raise ValidationError("grid steps must be positive")
        S = np.array(self.samples, dtype=float)
        if S.ndim != d:
            raise ValidationError(f"samples must be a {d}-dimensional array")
        if not np.all(np.isfinite(S)) or np.any(S <= 0.0):
            raise ValidationError("samples must be finite and strictly positive")
        _check_order(self.order)
        S.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "samples", S)
        for ax in self.chart.polar_axes:
            lo = origin[ax]
            hi = origin[ax] + (S.shape[ax] - 1) * steps[ax]
            if lo < self.polar_collar - 1e-12 or hi > np.pi - self.polar_collar + 1e-12:
                raise ValidationError(
                    f"axis {ax} range [{lo}, {hi}] enters the polar collar {self.polar_collar}"
                )

    @classmethod
    def from_function(cls, func, chart: Chart, origin, steps, shape, order: int = 2, **kw):
        """Sample ``func(points)`` (vectorized over (..., d)) on a grid."""
        origin = np.atleast_1d(np.asarray(origin, dtype=float))
        steps = np.atleast_1d(np.asarray(steps, dtype=float))
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        axes = [origin[i] + steps[i] * np.arange(shape[i]) for i in range(len(shape))]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(chart, tuple(origin), tuple(steps), func(pts), order=order, **kw)

    @property
    def shape(self) -> tuple:
        return self.samples.shape

    @property
    def margin(self) -> int:
        """Nodes a jet stencil reaches beyond its centre."""
        return self.order // 2

    def coords(self, index) -> np.ndarray:
        idx = np.asarray(index, dtype=float)
        return np.asarray(self.origin) + idx * np.asarray(self.steps)

    def axis(self, i: int) -> np.ndarray:
        return self.origin[i] + self.steps[i] * np.arange(self.shape[i])

    def node_points(self, margin: int = 0) -> np.ndarray:
        """Coordinates of all nodes at least ``margin`` nodes from every boundary."""
        axes = []
        for i in range(self.chart.d):
            if self.shape[i] <= 2 * margin:
                raise RangeError(f"axis {i} has no nodes {margin} away from its ends")
            axes.append(self.axis(i)[margin : self.shape[i] - margin])
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def sample(self, points) -> np.ndarray:
        """u at grid nodes given by coordinates; off-grid or outside points raise RangeError."""
        P = np.asarray(points, dtype=float)
        rel = (P - np.asarray(self.origin)) / np.asarray(self.steps)
        idx = np.rint(rel)
        if np.any(np.abs(rel - idx) > 1e-6):
            raise RangeError("point does not lie on a grid node")
        idx = idx.astype(int)
        for i in range(self.chart.d):
            if np.any(idx[..., i] < 0) or np.any(idx[..., i] >= self.shape[i]):
                raise RangeError("stencil leaves the grid")
        return self.samples[tuple(np.moveaxis(idx, -1, 0))]

    def jets(self, points) -> ConformalJet:
        u, g, H = fd_partials(self.sample, points, self.steps, self.order)
        return self.chart.frame_jet(points, u, g, H)

    def value(self, points) -> np.ndarray:
        return self.sample(points)

    # --- CSV + JSON header ---

    def header(self) -> dict:
        names = _axis_names(self.chart)
        return {
            "chart": self.chart.kind.value,
            "n": self.chart.n,
            "axes": [
                {"name": names[i], "start": self.origin[i], "step": self.steps[i], "count": self.shape[i]}
                for i in range(self.chart.d)
            ],
            "order": self.order,
            "polar_collar": self.polar_collar,
        }

    def to_csv(self, path) -> Path:
        """Write ``path`` (coordinates then u) and its JSON header ``path.with_suffix('.json')``."""
        path = Path(path)
        names = _axis_names(self.chart)
        pts = self.node_points().reshape(-1, self.chart.d)
        vals = self.samples.reshape(-1)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names + ["u"])
            for p, v in zip(pts, vals):
                w.writerow([f"{c:.17g}" for c in p] + [f"{v:.17g}"])
        hdr = path.with_suffix(".json")
        hdr.write_text(json.dumps(self.header(), indent=2) + "\n", encoding="utf-8")
        return hdr

    @classmethod
    def from_csv(cls, path) -> "GridField":
        path = Path(path)
        hdr = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
        chart = Chart(ChartKind(hdr["chart"]), int(hdr["n"]))
        axes = hdr["axes"]
        shape = tuple(int(a["count"]) for a in axes)
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != _axis_names(chart) + ["u"]:
            raise ValidationError(f"unexpected CSV header {rows[0]}")
        data = np.array([[float(c) for c in r] for r in rows[1:]])
        if data.shape != (int(np.prod(shape)), chart.d + 1):
            raise ValidationError("CSV row count does not match the header")
        grid = cls(
            chart,
            tuple(a["start"] for a in axes),
            tuple(a["step"] for a in axes),
            data[:, -1].reshape(shape),
            order=int(hdr.get("order", 2)),
            polar_collar=float(hdr.get("polar_collar", 1e-2)),
        )
        expected = grid.node_points().reshape(-1, chart.d)
        if not np.allclose(expected, data[:, :-1], rtol=0.0, atol=1e-9):
            raise ValidationError("CSV coordinates disagree with the header grid")
        return grid


def jet_from_grid(field: GridField, point) -> ConformalJet:
    """Frame jet at the node with integer index ``point``."""
    idx = np.atleast_1d(np.asarray(point, dtype=int))
    if idx.shape != (field.chart.d,):
        raise ValidationError(f"index must have {field.chart.d} entries")
    m = field.margin
    for i, v in enumerate(idx):
        if v < m or v > field.shape[i] - 1 - m:
            raise RangeError(f"index {tuple(idx)} too close to the boundary of axis {i}")
    return field.jets(field.coords(idx))
