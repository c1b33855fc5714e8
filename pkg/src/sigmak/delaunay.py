"""Radial sigma_k-Yamabe equation on the cylinder and its Delaunay-type orbits.

For g = u(t)^{4/(n-2)} (dt^2 + dtheta^2) with sigma_k(g^{-1}A_g) = binom(n,k)/2^k
the factor solves

    1/2 = W^{k-1} ( (k/n) a (-u_tt/u + q^2) + (1/2 - k/n) W ) u^{-4k/(n-2)},

with a = 2/(n-2), q = u_t/u and W = 1 - a^2 q^2, and conserves

    h = [1 - u^{-4k/(n-2)} W^k] u^{2n/(n-2)}.

Orbits are integrated in the variables (ln u, u_t/u), which keeps the relative
accuracy uniform when u sweeps over several decades near the sphere limit.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dopri import DormandPrince
from .errors import DomainError, NumericError, SingularityError, ValidationError
from .geometry import normalized_constant

EPS_CONE = 1e-10


@dataclass(frozen=True)
class OdeParams:
    n: int
    k: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValidationError(f"n must be an integer >= 3, got {self.n}")
        if int(self.k) != self.k or not 1 <= self.k <= self.n:
            raise ValidationError(f"k must be an integer in [1, n], got {self.k}")

    @property
    def a(self) -> float:
        return 2.0 / (self.n - 2)

    @property
    def c_norm(self) -> float:
        return normalized_constant(self.n, self.k)

    @property
    def subcritical(self) -> bool:
        return 2 * self.k < self.n

    def require_subcritical(self) -> None:
        if not self.subcritical:
            raise DomainError(f"orbit machinery needs k < n/2, got n={self.n}, k={self.k}")


@dataclass(frozen=True)
class DelaunayState:
    t: float
    u: float
    p: float

    def check(self, params: OdeParams, eps_cone: float = EPS_CONE) -> None:
        if not self.u > 0.0:
            raise DomainError("u must be positive")
        if _cone(self.p / self.u, params) < eps_cone:
            raise SingularityError("state lies on the Gamma_k^+ boundary", t=self.t)


def _cone(q, params: OdeParams):
    return 1.0 - params.a**2 * q * q


def hamiltonian(u, p, params: OdeParams):
    """h = [1 - u^{-4k/(n-2)} (1 - a^2 (p/u)^2)^k] u^{2n/(n-2)}."""
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0.0)):
        raise DomainError("u must be positive")
    n, k = params.n, params.k
    W = _cone(np.asarray(p) / u, params)
    h = u ** (2.0 * n / (n - 2)) - u ** ((2.0 * n - 4.0 * k) / (n - 2)) * W**k
    return float(h) if h.ndim == 0 else h


def _utt_over_u(log_u: float, q: float, params: OdeParams, eps_cone: float) -> float:
    n, k, a = params.n, params.k, params.a
    W = 1.0 - a * a * q * q
    if W < eps_cone:
        raise SingularityError("Gamma_k^+ boundary: 1 - a^2 (u_t/u)^2 below the cone guard")
    bracket = (
        0.5 * math.exp(4.0 * k / (n - 2) * log_u) * W ** (1 - k)
        - q * q * (2.0 * k / (n * (n - 2)) - (n - 2.0 * k) / (2.0 * n) * a * a)
        + k / n
        - 0.5
    )
    return -n * (n - 2) / (2.0 * k) * bracket


def u_tt(u: float, p: float, params: OdeParams, eps_cone: float = EPS_CONE) -> float:
    """Second derivative solved from the radial equation."""
    if not u > 0.0:
        raise DomainError("u must be positive")
    return u * _utt_over_u(math.log(u), p / u, params, eps_cone)


def ode_residual(u, p, utt, params: OdeParams):
    """1/2 minus the right-hand side of the radial equation."""
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0.0)):
        raise DomainError("u must be positive")
    n, k, a = params.n, params.k, params.a
    q = np.asarray(p) / u
    W = _cone(q, params)
    rhs = (
        W ** (k - 1)
        * ((k / n) * a * (-np.asarray(utt) / u + q * q) + (0.5 - k / n) * W)
        * u ** (-4.0 * k / (n - 2))
    )
    r = 0.5 - rhs
    return float(r) if np.ndim(r) == 0 else r


def cylinder_constant(params: OdeParams) -> tuple[float, float]:
    """Constant solution c_cyl and its Hamiltonian h_cyl < 0."""
    params.require_subcritical()
    n, k = params.n, params.k
    ratio = (n - 2.0 * k) / n
    c = ratio ** ((n - 2.0) / (4.0 * k))
    h = -(2.0 * k / (n - 2.0 * k)) * ratio ** (n / (2.0 * k))
    return c, h


def _bisect(f, lo: float, hi: float, max_iter: int = 400) -> float:
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= 4.0 * np.finfo(float).eps * hi:
            return mid
        fm = f(mid)
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def roots_for_h(h: float, params: OdeParams, delta: float = 1e-8) -> tuple[float, float]:
    """Turning points (u_min, u_max) of the orbit with Hamiltonian h, on the p = 0 slice."""
    c, h_cyl = cylinder_constant(params)
    if not h_cyl < h < 0.0:
        raise DomainError(f"h={h} outside the periodic range ({h_cyl:.17g}, 0)")
    n, k = params.n, params.k

    def phi(u):
        return (1.0 - u ** (-4.0 * k / (n - 2))) * u ** (2.0 * n / (n - 2)) - h

    lo = delta
    while phi(lo) <= 0.0:
        lo *= 1e-3
        if lo < 1e-300:
            raise NumericError("could not bracket the lower turning point")
    return _bisect(phi, lo, c), _bisect(phi, c, 1.0)


def sphere_solution(t, n: int):
    """u = cosh(t)^{-(n-2)/2} and u_t."""
    if n < 3:
        raise ValidationError("n must be >= 3")
    t = np.asarray(t, dtype=float)
    m = (n - 2) / 2.0
    u = np.cosh(t) ** (-m)
    p = -m * np.tanh(t) * u
    if u.ndim == 0:
        return float(u), float(p)
    return u, p


def conic_h(beta1: float) -> float:
    """Limit invariant -beta^2 (2+beta)^2 of the n = 4, k = 2 conic model."""
    if not -1.0 <= beta1 <= 0.0:
        raise DomainError("beta1 must lie in [-1, 0]")
    return -(beta1**2) * (2.0 + beta1) ** 2


@dataclass
class Trajectory:
    """Sampled orbit with dense interpolation between accepted steps."""

    params: OdeParams
    t: np.ndarray
    u: np.ndarray
    p: np.ndarray
    h0: float
    max_drift: float
    _steps: list = field(default_factory=list, repr=False)
    _starts: list = field(default_factory=list, repr=False)

    @property
    def states(self) -> list[DelaunayState]:
        return [DelaunayState(float(a), float(b), float(c)) for a, b, c in zip(self.t, self.u, self.p)]

    @property
    def t_span(self) -> tuple[float, float]:
        return self._steps[0][0], self._steps[-1][0] + self._steps[-1][1]

    def h_values(self) -> np.ndarray:
        return hamiltonian(self.u, self.p, self.params)

    def h_mean(self) -> float:
        return float(np.mean(self.h_values()))

    def _eval(self, t: float):
        lo, hi = self.t_span
        if not lo - 1e-12 <= t <= hi + 1e-12:
            raise DomainError(f"t={t} outside the trajectory span [{lo}, {hi}]")
        if len(self._starts) != len(self._steps):
            self._starts = [s[0] for s in self._steps]
        i = max(0, min(bisect.bisect_right(self._starts, t) - 1, len(self._steps) - 1))
        t_old, hstep, y_old, Q = self._steps[i]
        s = (t - t_old) / hstep
        pw = (s, s * s, s**3, s**4)
        w, z = (yo + hstep * sum(q[r] * pw[r] for r in range(4)) for yo, q in zip(y_old, Q))
        return w, z

    def at(self, t):
        """(u, u_t) at arbitrary t inside the span."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.array([self._eval(float(v)) for v in ts.ravel()])
        u = np.exp(out[:, 0]).reshape(ts.shape)
        p = (u.ravel() * out[:, 1]).reshape(ts.shape)
        if np.ndim(t) == 0:
            return float(u[0]), float(p[0])
        return u, p

    def jet_at(self, t):
        """(u, u_t, u_tt) with u_tt from the equation."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        res = []
        for v in ts.ravel():
            w, z = self._eval(float(v))
            uu = math.exp(w)
            res.append((uu, uu * z, uu * _utt_over_u(w, z, self.params, EPS_CONE)))
        arr = np.array(res).reshape(ts.shape + (3,))
        if np.ndim(t) == 0:
            return tuple(float(x) for x in arr[0])
        return arr[..., 0], arr[..., 1], arr[..., 2]

    def to_csv(self, path) -> None:
        drift = self.h_values() - self.h0
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "u", "u_t", "h_drift"])
            for row in zip(self.t, self.u, self.p, drift):
                w.writerow([f"{v:.17g}" for v in row])


def _log_rhs(params: OdeParams, eps_cone: float):
    def f(_t, y):
        w, z = y
        return (z, _utt_over_u(w, z, params, eps_cone) - z * z)

    return f


def _sample_times(t0: float, t_end: float, step: float | None):
    if step is None:
        return None
    if not step > 0.0:
        raise ValidationError("output step must be positive")
    m = int(math.floor((t_end - t0) / step + 1e-9))
    ts = [t0 + j * step for j in range(m + 1)]
    if t_end - ts[-1] > 1e-12 * max(1.0, abs(t_end)):
        ts.append(t_end)
    return ts


def integrate(state0: DelaunayState, t_end: float, tol: float, params: OdeParams,
              output_step: float | None = None, eps_cone: float = EPS_CONE) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) solution of (u, u_t)' = (u_t, u_tt).

    Samples at ``state0.t + j * output_step`` (and ``t_end``) or, with no
    output step, at every accepted step.  ``tol`` is used as both relative and
    absolute tolerance on (ln u, u_t/u).
    """
    state0.check(params, eps_cone)
    if not t_end > state0.t:
        raise DomainError("t_end must exceed the initial time")
    stepper = DormandPrince(
        _log_rhs(params, eps_cone), state0.t, (math.log(state0.u), state0.p / state0.u), tol, tol
    )
    wanted = _sample_times(state0.t, t_end, output_step)
    ts, ws, zs = [state0.t], [stepper.y[0]], [stepper.y[1]]
    node_ws, node_zs = [stepper.y[0]], [stepper.y[1]]
    steps = []
    j = 1
    while stepper.t < t_end - 1e-13 * max(1.0, abs(t_end)):
        try:
            stepper.step(h_max=t_end - stepper.t)
        except SingularityError as exc:
            raise SingularityError(f"Gamma_k^+ boundary reached near t={stepper.t:.17g}", t=stepper.t) from exc
        steps.append((stepper.t_old, stepper.h_last, stepper.y_old, stepper.Q))
        node_ws.append(stepper.y[0])
        node_zs.append(stepper.y[1])
        if wanted is None:
            ts.append(stepper.t)
            ws.append(stepper.y[0])
            zs.append(stepper.y[1])
        else:
            while j < len(wanted) and wanted[j] <= stepper.t + 1e-12:
                w, z = stepper.dense(wanted[j])
                ts.append(wanted[j])
                ws.append(w)
                zs.append(z)
                j += 1
        if _cone(stepper.y[1], params) < eps_cone:
            raise SingularityError(f"Gamma_k^+ boundary reached at t={stepper.t:.17g}", t=stepper.t)
    t_arr = np.array(ts)
    u_arr = np.exp(np.array(ws))
    p_arr = u_arr * np.array(zs)
    h0 = hamiltonian(state0.u, state0.p, params)
    nu = np.exp(np.array(node_ws))
    h_all = np.concatenate([hamiltonian(u_arr, p_arr, params), hamiltonian(nu, nu * np.array(node_zs), params)])
    return Trajectory(params, t_arr, u_arr, p_arr, h0, float(np.max(np.abs(h_all - h0))), steps)


def orbit(h: float, params: OdeParams, t_end: float, tol: float = 1e-10,
          output_step: float | None = None, t_start: float = 0.0) -> Trajectory:
    """Delaunay orbit with Hamiltonian h started at its maximum (u_max, 0) at ``t_start``."""
    _, u_max = roots_for_h(h, params)
    return integrate(DelaunayState(t_start, u_max, 0.0), t_end, tol, params, output_step)


def _refine_zero(stepper: DormandPrince, tol_t: float = 1e-12) -> float:
    lo, hi = stepper.t_old, stepper.t
    zlo = stepper.dense(lo)[1]
    while hi - lo > tol_t:
        mid = 0.5 * (lo + hi)
        zm = stepper.dense(mid)[1]
        if (zm < 0.0) == (zlo < 0.0):
            lo, zlo = mid, zm
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo <= 2 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def period(h: float, params: OdeParams, tol: float = 1e-10, t_max: float = 1e5) -> float:
    """Period of the orbit with Hamiltonian h (twice the spacing of consecutive u_t zeros)."""
    _, u_max = roots_for_h(h, params)
    stepper = DormandPrince(_log_rhs(params, EPS_CONE), 0.0, (math.log(u_max), 0.0), tol, tol)
    zeros = []
    while len(zeros) < 2:
        if stepper.t > t_max:
            raise NumericError(f"no return to u_max before t={t_max}")
        z_prev = stepper.y[1]
        stepper.step()
        z_new = stepper.y[1]
        if z_new == 0.0:
            zeros.append(stepper.t)
        elif z_prev != 0.0 and (z_prev < 0.0) != (z_new < 0.0):
            zeros.append(_refine_zero(stepper))
    return 2.0 * (zeros[1] - zeros[0])


def linearized_frequency_sq(params: OdeParams, rel_step: float = 1e-5) -> float:
    """mu = -d u_tt / d u at the cylinder fixed point, by central differences."""
    c, _ = cylinder_constant(params)
    du = rel_step * c
    return -(u_tt(c + du, 0.0, params) - u_tt(c - du, 0.0, params)) / (2.0 * du)
