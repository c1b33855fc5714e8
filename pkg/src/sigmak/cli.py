"""Command-line interface: ``sigmak {sigma, ode, pohozaev, kw} ...``.

Numbers are printed with 17 significant digits.  CSV output has a fixed
header per command; JSON output is one object per line.  The exit status is
0 iff every computation finished within its declared tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .delaunay import (
    OdeParams,
    cylinder_constant,
    hamiltonian,
    orbit,
    period,
    roots_for_h,
    sphere_solution,
)
from .errors import SigmaKError
from .geometry import (
    Background,
    BackgroundKind,
    ConformalJet,
    radial_cylinder_jet,
    round_sphere_jet,
    sigma_k_curvature,
)
from .gridfield import GridField, jet_from_grid
from .kazdanwarner import (
    CkField,
    CylinderLift,
    annulus_terms,
    divergence_convergence,
    divergence_identity_residual,
)
from .pohozaev import (
    AnalyticRadial,
    ExactRadial,
    Perturbed,
    compute_dk,
    dk_closed_form,
    puncture_sum,
    sphere_grid,
    t0_spread,
    two_ended,
)

REL_TOL = 1e-6
ORDER_MIN = 1.9
EXACT_TOL = 1e-9


class UsageError(Exception):
    """Invalid combination of options."""


# --- output ----------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g") if math.isfinite(v) else "null"
    if v is None:
        return "null"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(v)


def _json_record(rec: dict) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in rec.items()) + "}"


def emit(records: list[dict], columns: list[str], fmt: str, output) -> None:
    """Write records as CSV (header + rows) or JSON lines to ``output`` or stdout."""
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([_fmt(rec.get(c)) for c in columns])
    else:
        for rec in records:
            buf.write(_json_record({c: rec.get(c) for c in columns}) + "\n")
    text = buf.getvalue()
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


# --- sigma ---------------------------------------------------------------------------


def _parse_points(text: str, dim: int, pad: bool = True) -> list[list[float]]:
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        p = _floats(chunk)
        if len(p) > dim:
            raise UsageError(f"point {chunk!r} has more than {dim} coordinates")
        if len(p) < dim and not pad:
            raise UsageError(f"point {chunk!r} needs {dim} coordinates")
        pts.append(p + [0.0] * (dim - len(p)))
    if not pts:
        raise UsageError("no points given")
    return pts


def _factor_jets(args, points) -> tuple[list[ConformalJet], list[str]]:
    n = args.n
    factor = args.factor
    P = np.array(points)
    if factor == "round-sphere":
        return [round_sphere_jet(x) for x in P], [" ".join(_fmt(c) for c in x) for x in P]
    labels = [_fmt(x[0]) for x in P]
    t = P[:, 0]
    if factor == "sphere-solution":
        u, p = sphere_solution(t, n)
        m = (n - 2) / 2.0
        utt = u * (m * m * np.tanh(t) ** 2 - m / np.cosh(t) ** 2)
        return [radial_cylinder_jet(a, b, c, n) for a, b, c in zip(u, p, utt)], labels
    if factor == "cylinder-const":
        c, _ = cylinder_constant(OdeParams(n, args.k))
        return [radial_cylinder_jet(c, 0.0, 0.0, n) for _ in t], labels
    if factor.startswith("const:"):
        c = float(factor.split(":", 1)[1])
        bg = Background(BackgroundKind(args.bg), n)
        z = np.zeros(n)
        return [ConformalJet(bg, c, z, np.zeros((n, n))) for _ in t], labels
    raise UsageError(f"unknown factor {factor!r}")


def cmd_sigma(args) -> int:
    if args.grid:
        field = GridField.from_csv(args.grid)
        if args.k is None:
            raise UsageError("--k is required")
        idx = _parse_points(args.points or ",".join(["0"] * field.chart.d), field.chart.d, pad=False)
        jets = [jet_from_grid(field, [int(round(c)) for c in p]) for p in idx]
        labels = [" ".join(str(int(round(c))) for c in p) for p in idx]
    else:
        if args.factor is None or args.n is None or args.k is None:
            raise UsageError("--factor, --n and --k are required without --grid")
        pts = _parse_points(args.points or "0", args.n)
        jets, labels = _factor_jets(args, pts)
    records = []
    for lab, jet in zip(labels, jets):
        s, r = sigma_k_curvature(jet, args.k)
        records.append({"point": lab, "sigma": float(s), "residual": float(r)})
    emit(records, ["point", "sigma", "residual"], args.format, args.output)
    return 0


# --- ode -----------------------------------------------------------------------------


def _ode_params(args) -> OdeParams:
    params = OdeParams(args.n, args.k)
    params.require_subcritical()
    return params


def cmd_ode(args) -> int:
    if args.action == "solve":
        return _ode_solve(args)
    params = _ode_params(args)
    if args.action == "period":
        T = period(args.h, params, args.tol)
        emit([{"h": args.h, "period": T}], ["h", "period"], args.format, args.output)
        return 0
    if args.steps < 1 or not args.h_min <= args.h_max:
        raise UsageError("scan needs --steps >= 1 and --h-min <= --h-max")
    if args.steps == 1:
        hs = [args.h_min]
    else:
        hs = [args.h_min + (args.h_max - args.h_min) * i / (args.steps - 1) for i in range(args.steps)]
    for h in hs:
        roots_for_h(h, params)
    jobs = [(h, args.n, args.k, args.tol) for h in hs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_scan_row, jobs))
    else:
        records = [_scan_row(j) for j in jobs]
    emit(records, ["h", "period", "u_min", "u_max", "dk_closed_form"], args.format, args.output)
    return 0


def _scan_row(job) -> dict:
    h, n, k, tol = job
    params = OdeParams(n, k)
    u_min, u_max = roots_for_h(h, params)
    return {
        "h": h,
        "period": period(h, params, tol),
        "u_min": u_min,
        "u_max": u_max,
        "dk_closed_form": dk_closed_form(h, params),
    }


def _ode_solve(args) -> int:
    cols = ["t", "u", "u_t", "h_drift"]
    if args.sphere:
        params = OdeParams(args.n, args.k)
        steps = int(math.floor(args.t_max / args.output_step + 1e-9))
        t = np.array([i * args.output_step for i in range(steps + 1)])
        u, p = sphere_solution(t, args.n)
        drift = hamiltonian(u, p, params)
        records = [{"t": a, "u": b, "u_t": c, "h_drift": d} for a, b, c, d in zip(t, u, p, drift)]
        emit(records, cols, args.format, args.output)
        return 0 if float(np.max(np.abs(drift))) <= 1e-12 else 1
    if args.h is None:
        raise UsageError("--h is required unless --sphere is given")
    params = _ode_params(args)
    tr = orbit(args.h, params, args.t_max, args.tol, args.output_step)
    drift = tr.h_values() - tr.h0
    records = [{"t": a, "u": b, "u_t": c, "h_drift": d} for a, b, c, d in zip(tr.t, tr.u, tr.p, drift)]
    emit(records, cols, args.format, args.output)
    return 0


# --- pohozaev ------------------------------------------------------------------------

DK_COLUMNS = ["n", "k", "h", "t0", "orientation", "quadrature", "closed_form", "residual", "value"]


def _dk_record(r) -> dict:
    rec = {c: getattr(r, c) for c in DK_COLUMNS if c != "value"}
    rec["value"] = r.value
    return rec


def _delaunay_metric(args, t_lo: float, t_hi: float) -> ExactRadial:
    params = _ode_params(args)
    roots_for_h(args.h, params)
    return ExactRadial(orbit(args.h, params, t_hi + 0.5, args.tol, t_start=t_lo - 0.5))


def cmd_pohozaev(args) -> int:
    if args.action == "compute":
        metric = _delaunay_metric(args, args.t0, args.t0)
        r = compute_dk(metric, args.t0, args.k)
        emit([_dk_record(r)], DK_COLUMNS, args.format, args.output)
        return 0 if r.residual <= REL_TOL * abs(r.closed_form) else 1
    if args.action == "check-sum":
        metric = _delaunay_metric(args, args.t_minus, args.t_plus)
        ends = two_ended(metric, args.t_minus, args.t_plus, args.k)
        total = puncture_sum(ends)
        recs = [_dk_record(e) for e in ends]
        recs.append({"n": args.n, "k": args.k, "h": args.h, "orientation": 0, "value": total})
        emit(recs, DK_COLUMNS, args.format, args.output)
        return 0 if abs(total) <= REL_TOL * abs(ends[0].value) else 1
    t0s = _floats(args.t0s)
    metric = _delaunay_metric(args, min(t0s), max(t0s))
    results, spread = t0_spread(metric, t0s, args.k)
    recs = [_dk_record(r) for r in results]
    for r in recs:
        r["spread"] = spread
    emit(recs, DK_COLUMNS + ["spread"], args.format, args.output)
    return 0 if spread <= REL_TOL else 1


# --- kw ------------------------------------------------------------------------------


def parse_ck(spec: str, n: int) -> CkField:
    """dilation | rotation:i,j | translation:i | special:i (1-based axes)."""
    name, _, rest = spec.partition(":")
    if name == "dilation":
        return CkField.dilation(n, _floats(rest) if rest else None)
    if name == "rotation":
        ij = [int(v) for v in rest.split(",")]
        if len(ij) != 2:
            raise UsageError("rotation needs two axes, e.g. rotation:1,2")
        return CkField.rotation(n, *ij)
    if name in ("translation", "special"):
        if not rest:
            raise UsageError(f"{name} needs an axis, e.g. {name}:1")
        d = int(rest) if "," not in rest else _floats(rest)
        if name == "translation":
            return CkField.translation(n, d)
        return CkField.special_conformal(n, d)
    raise UsageError(f"unknown field {spec!r}")


def _kw_metric(args, X: CkField, t_lo: float, t_hi: float):
    params = OdeParams(args.n, args.k)
    radial_ok = X.kind.value == "dilation" and not any(X.vector)
    if args.metric == "delaunay":
        if args.h is None:
            raise UsageError("--h is required for the Delaunay metric")
        params.require_subcritical()
        base = ExactRadial(orbit(args.h, params, t_hi + 1.0, 1e-12, t_start=t_lo - 1.0))
    elif args.metric == "sphere":
        base = AnalyticRadial(params, "sphere")
    else:
        return Perturbed(AnalyticRadial(params, "constant", 1.0), eps=args.eps)
    return base if radial_ok else CylinderLift(base)


def _default_center(args, metric) -> list[float]:
    if args.center:
        return _floats(args.center)
    angles = [1.0, 1.2, 0.7][: args.n - 1]
    if metric.chart.d == 1:
        return [args.t]
    return [args.t] + angles + [0.7] * (args.n - 1 - len(angles))


def cmd_kw(args) -> int:
    X = parse_ck(args.X, args.n)
    if args.action == "verify":
        metric = _kw_metric(args, X, args.t - 1.0, args.t + 1.0)
        center = _default_center(args, metric)
        if args.metric == "sphere":
            rep = divergence_identity_residual(metric, X, args.k, points=np.array([center]),
                                               step=args.step, order=args.order)
            ok = rep.residual_max <= EXACT_TOL
        else:
            rep = divergence_convergence(metric, X, args.k, center, args.step, args.order)
            ok = rep.residual_max <= EXACT_TOL or (rep.order is not None and rep.order >= ORDER_MIN)
        rec = rep.summary()
        rec["pass"] = ok
        emit([rec], list(rec), args.format, args.output)
        return 0 if ok else 1
    metric = _kw_metric(args, X, min(args.ta, args.tb), max(args.ta, args.tb))
    grid = sphere_grid(args.n - 1, args.polar)
    levels = max(1, args.refine)
    recs = []
    for i in range(levels):
        nt, fd = args.t_intervals * 2**i, args.fd_step / 2**i
        terms = annulus_terms(metric, X, args.k, args.ta, args.tb, grid, nt, fd, args.order)
        recs.append({"level": i, "t_intervals": nt, "fd_step": fd, "volume": terms.volume,
                     "flux_a": terms.flux_a, "flux_b": terms.flux_b, "balance": terms.balance})
    bal = [r["balance"] for r in recs]
    ok = bal[-1] <= EXACT_TOL or all(b < a for a, b in zip(bal, bal[1:])) and levels > 1
    emit(recs, list(recs[0]), args.format, args.output)
    return 0 if ok else 1


# --- parser --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="write to this file instead of stdout")
    p.add_argument("--config", default=None, help="key=value defaults, overridden by flags")


def _nk(p: argparse.ArgumentParser, k_default: int | None = 1) -> None:
    p.add_argument("--n", type=int, required=False, default=None)
    p.add_argument("--k", type=int, default=k_default)


def build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="sigmak", description="sigma_k curvature toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves = []

    p = sub.add_parser("sigma", help="sigma_k curvature of a conformal factor")
    _nk(p, None)
    p.add_argument("--factor", help="round-sphere | const:C | cylinder-const | sphere-solution")
    p.add_argument("--bg", choices=[b.value for b in BackgroundKind], default="euclidean")
    p.add_argument("--grid", help="GridField CSV (with its JSON header next to it)")
    p.add_argument("--points", help="';'-separated points, comma-separated coordinates")
    _common(p)
    p.set_defaults(func=cmd_sigma)
    leaves.append(p)

    p = sub.add_parser("ode", help="Delaunay ODE")
    osub = p.add_subparsers(dest="action", required=True)
    for name in ("solve", "period", "scan"):
        q = osub.add_parser(name)
        _nk(q)
        q.add_argument("--tol", type=float, default=1e-10)
        if name == "solve":
            q.add_argument("--h", type=float)
            q.add_argument("--sphere", action="store_true")
            q.add_argument("--t-max", type=float, default=10.0)
            q.add_argument("--output-step", type=float, default=0.1)
        elif name == "period":
            q.add_argument("--h", type=float, required=False)
        else:
            q.add_argument("--h-min", type=float)
            q.add_argument("--h-max", type=float)
            q.add_argument("--steps", type=int, default=10)
            q.add_argument("--jobs", type=int, default=1)
        _common(q)
        q.set_defaults(func=cmd_ode)
        leaves.append(q)

    p = sub.add_parser("pohozaev", help="k-dilational Pohozaev invariants")
    psub = p.add_subparsers(dest="action", required=True)
    for name in ("compute", "check-sum", "t0-spread"):
        q = psub.add_parser(name)
        _nk(q)
        q.add_argument("--h", type=float)
        q.add_argument("--tol", type=float, default=1e-10)
        if name == "compute":
            q.add_argument("--t0", type=float, default=1.0)
        elif name == "check-sum":
            q.add_argument("--t-minus", type=float, default=-1.0)
            q.add_argument("--t-plus", type=float, default=1.0)
        else:
            q.add_argument("--t0s", default="0,1,2,3")
        _common(q)
        q.set_defaults(func=cmd_pohozaev)
        leaves.append(q)

    p = sub.add_parser("kw", help="Kazdan-Warner identity checks")
    ksub = p.add_subparsers(dest="action", required=True)
    for name in ("verify", "annulus"):
        q = ksub.add_parser(name)
        _nk(q)
        q.add_argument("--metric", choices=("delaunay", "sphere", "perturbed"), default="delaunay")
        q.add_argument("--h", type=float)
        q.add_argument("--X", default="dilation", help="dilation | rotation:i,j | translation:i | special:i")
        q.add_argument("--order", type=int, choices=(2, 4), default=2)
        q.add_argument("--eps", type=float, default=0.1, help="perturbation amplitude")
        if name == "verify":
            q.add_argument("--t", type=float, default=1.0, help="t of the sample centre")
            q.add_argument("--center", help="full chart point of the sample centre")
            q.add_argument("--step", type=float, default=0.05)
        else:
            q.add_argument("--ta", type=float, default=1.0)
            q.add_argument("--tb", type=float, default=3.0)
            q.add_argument("--refine", type=int, default=2)
            q.add_argument("--t-intervals", type=int, default=8)
            q.add_argument("--fd-step", type=float, default=0.1)
            q.add_argument("--polar", type=int, default=10)
        _common(q)
        q.set_defaults(func=cmd_kw)
        leaves.append(q)
    return parser, leaves


def read_config(path) -> dict:
    """key=value lines; '#' starts a comment; keys may use '-' or '_'."""
    out = {}
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{ln}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _apply_config(parser, leaves, argv) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        for leaf in leaves:
            dests = {a.dest for a in leaf._actions}
            leaf.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
        args = parser.parse_args(argv)
        store = {a.dest: a for a in _leaf_for(args, leaves)._actions}
        unknown = sorted(k for k in cfg if k not in store)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        for key, val in cfg.items():
            action = store[key]
            if action.const is True and isinstance(getattr(args, key), str):
                setattr(args, key, val.lower() in ("1", "true", "yes", "on"))
        return args
    return parser.parse_args(argv)


def _leaf_for(args, leaves):
    for leaf in leaves:
        if leaf.get_default("func") is args.func and _leaf_name(leaf) == _args_name(args):
            return leaf
    raise UsageError("could not resolve the subcommand")


def _leaf_name(leaf) -> str:
    return leaf.prog.split()[-1]


def _args_name(args) -> str:
    return getattr(args, "action", None) or args.command


def _check_required(args) -> None:
    if args.command != "sigma" and args.n is None:
        raise UsageError("--n is required")
    needs_h = (args.command == "pohozaev") or (
        args.command == "ode" and args.action == "period"
    )
    if needs_h and args.h is None:
        raise UsageError("--h is required")
    if args.command == "ode" and args.action == "scan" and (args.h_min is None or args.h_max is None):
        raise UsageError("--h-min and --h-max are required")


def main(argv=None) -> int:
    parser, leaves = build_parser()
    try:
        args = _apply_config(parser, leaves, argv)
        _check_required(args)
        return args.func(args)
    except (UsageError, SigmaKError, ValueError, ArithmeticError, IndexError, OSError) as exc:
        print(f"sigmak: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
