"""Dormand-Prince 5(4) stepper with PI step control and 4th-order dense output.

Written for small systems (a handful of components), so the state is a plain
list of floats rather than an array.
"""

from __future__ import annotations

import math

from .errors import NumericError, SingularityError

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6] + (0.0,)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# continuous extension: y(t + s h) = y + h sum_i K_i (P_i1 s + P_i2 s^2 + P_i3 s^3 + P_i4 s^4)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

_SAFE = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0


class DormandPrince:
    """Adaptive integrator for y' = f(t, y).

    ``f`` may raise :class:`SingularityError` when a trial stage leaves the
    admissible region; the step is then retried with a smaller size, and the
    error is re-raised only once the step size collapses.
    """

    def __init__(self, f, t0: float, y0, rtol: float, atol: float, h0: float | None = None,
                 max_steps: int = 10_000_000):
        self.f = f
        self.t = float(t0)
        self.y = [float(v) for v in y0]
        self.rtol = rtol
        self.atol = atol
        self.fy = list(f(self.t, self.y))
        self.h = h0 if h0 is not None else self._initial_step()
        self.facold = 1e-4
        self.max_steps = max_steps
        self.n_steps = 0
        self.n_rejected = 0
        # data of the last accepted step, for dense output
        self.t_old = self.t
        self.y_old = list(self.y)
        self.h_last = 0.0
        self.Q = None

    def _norm(self, v, y_a, y_b=None):
        acc = 0.0
        for i, vi in enumerate(v):
            ref = abs(y_a[i]) if y_b is None else max(abs(y_a[i]), abs(y_b[i]))
            acc += (vi / (self.atol + self.rtol * ref)) ** 2
        return math.sqrt(acc / len(v))

    def _initial_step(self) -> float:
        d0 = self._norm(self.y, self.y)
        d1 = self._norm(self.fy, self.y)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = [y + h0 * f for y, f in zip(self.y, self.fy)]
        try:
            f1 = self.f(self.t + h0, y1)
        except SingularityError:
            return h0 * 1e-2
        d2 = self._norm([a - b for a, b in zip(f1, self.fy)], self.y) / h0
        dm = max(d1, d2)
        h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
        return min(100 * h0, h1)

    def _attempt(self, h):
        t, y, f = self.t, self.y, self.f
        K = [self.fy]
        for s in range(1, 7):
            a = _A[s]
            ys = [y[i] + h * sum(a[j] * K[j][i] for j in range(s)) for i in range(len(y))]
            K.append(list(f(t + _C[s] * h, ys)))
            if s == 6:
                y_new = ys
        err = [h * sum(_E[j] * K[j][i] for j in range(7)) for i in range(len(y))]
        return y_new, K, self._norm(err, y, y_new)

    def step(self, h_max: float | None = None) -> None:
        """Advance by one accepted step (never longer than ``h_max``)."""
        while True:
            if self.n_steps >= self.max_steps:
                raise NumericError("step budget exhausted")
            h = self.h if h_max is None else min(self.h, h_max)
            if h < 1e-14 * max(1.0, abs(self.t)):
                raise SingularityError(f"step size underflow at t={self.t:.17g}", t=self.t)
            try:
                y_new, K, err = self._attempt(h)
            except SingularityError:
                self.h = 0.25 * h
                self.n_rejected += 1
                continue
            fac11 = err**_EXPO if err > 0.0 else 0.0
            if err <= 1.0:
                fac = fac11 / self.facold**_BETA
                fac = max(1.0 / _FAC_MAX, min(1.0 / _FAC_MIN, fac / _SAFE))
                self.facold = max(err, 1e-4)
                self.t_old, self.y_old, self.h_last = self.t, self.y, h
                self.t = self.t + h
                self.y = y_new
                self.fy = K[6]
                self.Q = [
                    [sum(K[j][i] * _P[j][r] for j in range(7)) for r in range(4)]
                    for i in range(len(y_new))
                ]
                self.h = h / fac
                self.n_steps += 1
                return
            self.h = h / min(1.0 / _FAC_MIN, fac11 / _SAFE)
            self.n_rejected += 1

    def dense(self, t: float) -> list[float]:
        """Interpolated state inside the last accepted step."""
        s = (t - self.t_old) / self.h_last
        powers = (s, s * s, s**3, s**4)
        return [
            yo + self.h_last * sum(q[r] * powers[r] for r in range(4))
            for yo, q in zip(self.y_old, self.Q)
        ]
