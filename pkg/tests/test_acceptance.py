"""Acceptance criteria, each at its stated tolerance.

Every criterion prints one PASS/FAIL line.  Run standalone with
``python3 tests/test_acceptance.py`` or through pytest (the lines are repeated
in the terminal summary).
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from sigmak import symfun
from sigmak.delaunay import OdeParams, conic_h, hamiltonian, ode_residual, orbit, sphere_solution
from sigmak.kazdanwarner import CkField, divergence_convergence
from sigmak.pohozaev import (
    AnalyticRadial,
    ExactRadial,
    Perturbed,
    compute_dk,
    hring11_pipeline,
    hring11_radial,
    puncture_sum,
    t0_spread,
    two_ended,
)

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # standalone run
    ACCEPTANCE_LINES = []

TRIPLES = [(5, 1, -0.1), (5, 2, -0.05), (7, 3, -0.02)]


def criterion_1():
    """Energy conservation on t in [0, 100] at tol 1e-10, all three triples in < 2 s."""
    start = time.perf_counter()
    drifts = [orbit(h, OdeParams(n, k), 100.0, 1e-10).max_drift for n, k, h in TRIPLES]
    elapsed = time.perf_counter() - start
    ok = max(drifts) <= 1e-8 and elapsed < 2.0
    return ok, f"max drift {max(drifts):.3e} (<= 1e-8), runtime {elapsed:.2f} s (< 2 s)"


def criterion_2():
    """Sphere solution: equation residual <= 1e-10 and |h| <= 1e-13 on 1000 points of [-5, 5]."""
    t = np.linspace(-5.0, 5.0, 1000)
    worst_r = worst_h = 0.0
    for n in (4, 5, 7):
        u, p = sphere_solution(t, n)
        m = (n - 2) / 2.0
        utt = u * (m * m * np.tanh(t) ** 2 - m / np.cosh(t) ** 2)
        for k in (1, 2):
            P = OdeParams(n, k)
            worst_r = max(worst_r, float(np.max(np.abs(ode_residual(u, p, utt, P)))))
            worst_h = max(worst_h, float(np.max(np.abs(hamiltonian(u, p, P)))))
    ok = worst_r <= 1e-10 and worst_h <= 1e-13
    return ok, f"max residual {worst_r:.3e} (<= 1e-10), max |h| {worst_h:.3e} (<= 1e-13)"


def criterion_3():
    """Closed form vs quadrature at t0 = 1, relative error <= 1e-6, runtime < 5 s."""
    start = time.perf_counter()
    errs = []
    for n, k, h in TRIPLES:
        metric = ExactRadial(orbit(h, OdeParams(n, k), 2.0, 1e-10))
        r = compute_dk(metric, 1.0)
        errs.append(r.residual / abs(r.closed_form))
    elapsed = time.perf_counter() - start
    ok = max(errs) <= 1e-6 and elapsed < 5.0
    return ok, f"max relative error {max(errs):.3e} (<= 1e-6), runtime {elapsed:.2f} s (< 5 s)"


def criterion_4():
    """Relative spread of the flux over t0 in {0, 1, 2, 3} <= 1e-6."""
    spreads = []
    for n, k, h in TRIPLES:
        metric = ExactRadial(orbit(h, OdeParams(n, k), 3.5, 1e-10))
        spreads.append(t0_spread(metric, [0.0, 1.0, 2.0, 3.0])[1])
    return max(spreads) <= 1e-6, f"max relative spread {max(spreads):.3e} (<= 1e-6)"


def criterion_5():
    """Two-ended metric (5, 2, -0.05): |D(p) + D(-p)| <= 1e-6 |D(p)|."""
    metric = ExactRadial(orbit(-0.05, OdeParams(5, 2), 3.0, 1e-10, t_start=-3.0))
    ends = two_ended(metric, -2.0, 2.0)
    total = abs(puncture_sum(ends))
    rel = total / abs(ends[0].value)
    return rel <= 1e-6, f"|sum| = {total:.3e}, relative {rel:.3e} (<= 1e-6)"


def criterion_6():
    """Closed radial Hring vs the tensor pipeline at 100 orbit samples per triple.

    The tolerance is 1e-9 relative to max(1, |Hring|): near the orbit minimum of
    (7, 3, -0.02) the entries reach ~4e10, where one unit in the last place is
    ~1e-5, so an absolute 1e-9 is below double precision there.
    """
    worst_mixed = worst_abs = 0.0
    for n, k, h in TRIPLES:
        P = OdeParams(n, k)
        tr = orbit(h, P, 40.0, 1e-10)
        for t in np.linspace(0.0, 40.0, 100):
            u, p, utt = tr.jet_at(t)
            a = hring11_radial(u, p, P)
            b = hring11_pipeline(u, p, utt, n, k)
            worst_abs = max(worst_abs, abs(a - b))
            worst_mixed = max(worst_mixed, abs(a - b) / max(1.0, abs(a)))
    ok = worst_mixed <= 1e-9
    return ok, f"max |diff|/max(1,|value|) {worst_mixed:.3e} (<= 1e-9); max absolute diff {worst_abs:.3e}"


def criterion_7():
    """Delta formula vs recursion (<= 1e-10) and trace(H) = k sigma_k (<= 1e-12), 100 matrices per n."""
    rng = np.random.default_rng(7)
    worst_t = worst_tr = 0.0
    for n in (2, 3, 4):
        for _ in range(100):
            B = rng.uniform(-1.0, 1.0, size=(n, n))
            A = 0.5 * (B + B.T)
            for k in range(1, n + 1):
                d = symfun.newton_transform_delta(A, k) - symfun.newton_transform(A, k)
                worst_t = max(worst_t, float(np.max(np.abs(d))))
                H, _ = symfun.h_tensors(A, k)
                worst_tr = max(worst_tr, abs(float(np.trace(H)) - k * symfun.sigma_matrix(A, k)))
    ok = worst_t <= 1e-10 and worst_tr <= 1e-12
    return ok, f"max transform diff {worst_t:.3e} (<= 1e-10), max trace diff {worst_tr:.3e} (<= 1e-12)"


def criterion_8():
    """Divergence-identity residual converges at order >= 1.9 under step halving."""
    delaunay = ExactRadial(orbit(-0.05, OdeParams(5, 2), 6.0, 1e-12))
    rep_a = divergence_convergence(delaunay, CkField.dilation(5), 2, [3.0], 0.05)
    pert = Perturbed(AnalyticRadial(OdeParams(4, 2), "constant", 1.0), eps=0.1, rate=1.0)
    center = [1.0, 1.0, 1.2, 0.7]
    orders_b = [
        divergence_convergence(pert, X, 2, center, 0.05).order
        for X in (CkField.dilation(4), CkField.rotation(4, 1, 2), CkField.special_conformal(4, 1))
    ]
    ok = rep_a.order >= 1.9 and min(orders_b) >= 1.9
    return ok, (f"(a) Delaunay order {rep_a.order:.4f}; (b) perturbed orders "
                + ", ".join(f"{o:.4f}" for o in orders_b) + " (>= 1.9)")


def criterion_9():
    """Conic limit at t = 20 (n = 4, k = 2) within 1e-6, and conic_h(-1/2) = -9/16 exactly."""
    P = OdeParams(4, 2)
    worst = 0.0
    for beta in (-0.25, -0.5, -0.75):
        u = math.exp(-(1.0 + beta) * 20.0)
        worst = max(worst, abs(conic_h(beta) - hamiltonian(u, -(1.0 + beta) * u, P)))
    exact = conic_h(-0.5) == -9.0 / 16.0
    return worst <= 1e-6 and exact, f"max difference {worst:.3e} (<= 1e-6), conic_h(-1/2) == -9/16: {exact}"


def criterion_10():
    """Cone nesting on 1000 random spectra per n in {3, 5, 7}: no violations."""
    rng = np.random.default_rng(10)
    violations = members = 0
    for n in (3, 5, 7):
        for _ in range(1000):
            lam = rng.normal(0.6, 1.0, size=n)
            for k in range(2, n + 1):
                if symfun.in_positive_cone(lam, k):
                    members += 1
                    if not all(symfun.in_positive_cone(lam, j) for j in range(1, k)):
                        violations += 1
    return violations == 0, f"{violations} violations among {members} cone memberships with k >= 2"


CRITERIA = [
    (1, "energy conservation", criterion_1),
    (2, "sphere solution exactness", criterion_2),
    (3, "flux closed form vs quadrature", criterion_3),
    (4, "cross-section independence", criterion_4),
    (5, "two-ended puncture sum", criterion_5),
    (6, "radial vs tensor pipeline", criterion_6),
    (7, "Newton transform formulas", criterion_7),
    (8, "divergence identity convergence", criterion_8),
    (9, "conic limit", criterion_9),
    (10, "cone nesting", criterion_10),
]


def _line(num, name, ok, detail):
    return f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"


@pytest.mark.parametrize("num,name,func", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, name, func):
    ok, detail = func()
    line = _line(num, name, ok, detail)
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for num, name, func in CRITERIA:
        ok, detail = func()
        failed += not ok
        print(_line(num, name, ok, detail))
    raise SystemExit(1 if failed else 0)
