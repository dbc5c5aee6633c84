"""Command-line orchestrator.

Subcommands: eval, verify, classify, liouville, gamma-bounds, ode.
Exit codes: 0 success, 1 verification failure, 2 input error, 3 inconclusive.
Failures emit a machine-readable JSON diagnostic on stderr. Output is
deterministic: fixed grid order and 17-significant-digit floats.
"""

import argparse
import io
import json
import sys

import numpy as np

from . import analysis, families, liouville, reduced_ode
from .errors import DomainError, InconclusiveError, ParameterError


def _fmt(x):
    return f"{float(x):.17e}"


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _diag(**kw):
    sys.stderr.write(json.dumps(kw) + "\n")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read JSON from {path}: {exc}") from exc


def _grid_angles(spec, args, rng=None):
    dom = families.domain_of(spec)
    lo = dom.theta_min + args.theta_margin
    hi = dom.theta_max - args.theta_margin
    thetas = np.linspace(lo, hi, args.grid_ntheta) if lo < hi else np.empty(0)
    phis = np.linspace(0.0, 2.0 * np.pi, args.grid_nphi, endpoint=False)
    if rng is not None and thetas.size:
        dth = (hi - lo) / max(args.grid_ntheta, 1)
        thetas = thetas + rng.uniform(-0.25, 0.25, thetas.shape) * dth
        phis = phis + rng.uniform(-0.25, 0.25, phis.shape) * (2.0 * np.pi / args.grid_nphi)
    return thetas, phis, dom


def cmd_eval(args):
    spec = families.spec_from_json(_load_json(args.spec))
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    thetas, phis, dom = _grid_angles(args=args, spec=spec, rng=rng)
    buf = io.StringIO()
    buf.write("theta,phi,u_r,u_theta,u_phi,p\n")
    omitted = 0
    for th in thetas:
        if not bool(dom.contains(th)) or not (0.0 < th < np.pi):
            omitted += len(phis)
            continue
        sample = spec.evaluate(np.full_like(phis, th), phis)
        for j in range(len(phis)):
            buf.write(
                ",".join(
                    _fmt(v)
                    for v in (th, phis[j], sample.u_r[j], sample.u_theta[j], sample.u_phi[j], sample.p[j])
                )
                + "\n"
            )
    if omitted:
        _diag(omitted=omitted)
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_verify(args):
    spec = families.spec_from_json(_load_json(args.spec))
    grid = analysis.GridSpec(
        n_theta=args.grid_ntheta,
        n_phi=args.grid_nphi,
        theta_margin=args.theta_margin,
        radii=tuple(args.radii),
    )
    fn = analysis.euler_residual if args.euler else analysis.ns_residual
    report = fn(spec.provider(), grid)
    ok = report.max_momentum < args.tol_residual and report.max_divergence < args.tol_divergence
    payload = dict(report.to_json())
    payload["pass"] = bool(ok)
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0 if ok else 1


def _parse_pole(text):
    if text.upper() in ("S", "N"):
        return text.upper()
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise ParameterError("pole must be S, N, or three comma-separated components")
    return np.asarray(parts)


def cmd_classify(args):
    spec = families.spec_from_json(_load_json(args.spec))
    report = analysis.classify(spec, _parse_pole(args.pole))
    _emit(json.dumps(report.to_json(), indent=2) + "\n", args.out)
    if report.type is analysis.SingularityType.INCONCLUSIVE:
        _diag(error="inconclusive classification")
        return 3
    return 0


def cmd_liouville(args):
    obj = _load_json(args.prescription)
    if "f" in obj:
        sol = liouville.closed_form(obj["f"], **obj.get("params", {}))
        fits = []
    else:
        sol = liouville.build(liouville.SingularityPrescription.from_json(obj))
        fits = liouville.verify_asymptotics(sol)
    dom = sol.domain()
    thetas = np.linspace(args.theta_margin, np.pi - args.theta_margin, args.grid_ntheta)
    phis = np.linspace(0.0, 2.0 * np.pi, args.grid_nphi, endpoint=False)
    buf = io.StringIO()
    buf.write("theta,phi,u_r,u_theta,u_phi,p\n")
    omitted = 0
    for th in thetas:
        for ph in phis:
            x = np.array(
                [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
            )
            if not np.all(dom.clear_of_exclusions(x, args.theta_margin)):
                omitted += 1
                continue
            v = liouville.velocity(sol, th, ph)
            p = liouville.pressure(sol, th, ph)
            buf.write(",".join(_fmt(val) for val in (th, ph, v.u_r, v.u_theta, v.u_phi, p)) + "\n")
    if omitted:
        _diag(omitted=omitted)
    _emit(buf.getvalue(), args.out)
    if fits:
        report = {"slopes": [f.to_json() for f in fits]}
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
        if not all(f.converged for f in fits):
            _diag(error="asymptotic fit did not converge at every point")
            return 3
    return 0


def cmd_gamma_bounds(args):
    probe = reduced_ode.estimate_gamma_bounds((args.c1, args.c2, args.c3))
    _emit(json.dumps(probe.to_json(), indent=2) + "\n", args.out)
    return 0


def cmd_ode(args):
    c = (args.c1, args.c2, args.c3)
    traj = reduced_ode.integrate_noswirl(
        c, args.gamma, (args.y_min, args.y_max), y0=args.y0
    )
    ys = np.linspace(traj.y_lo, traj.y_hi, args.n_samples)
    _emit(reduced_ode.trajectory_csv(traj, ys), args.out)
    if traj.status != "completed":
        _diag(status=traj.status, escape_y=traj.escape_y)
        return 1
    return 0


def _add_common(p):
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--grid-ntheta", type=int, default=15)
    p.add_argument("--grid-nphi", type=int, default=14)
    p.add_argument("--theta-margin", type=float, default=0.3)
    p.add_argument("--radii", type=float, nargs="+", default=[1.0])
    p.add_argument("--tol-residual", type=float, default=1e-5)
    p.add_argument("--tol-divergence", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=None, help="random grid jitter (off by default)")


def build_parser():
    parser = argparse.ArgumentParser(prog="nshomog")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a solution spec on a grid, CSV output")
    p.add_argument("--spec", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("verify", help="residual verification, JSON report + exit code")
    p.add_argument("--spec", required=True)
    p.add_argument("--euler", action="store_true", help="check the Euler operator instead")
    _add_common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("classify", help="singularity classification at a pole")
    p.add_argument("--spec", required=True)
    p.add_argument("--pole", required=True, help='"S", "N", or x,y,z')
    _add_common(p)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("liouville", help="build a multi-singularity flow and verify slopes")
    p.add_argument("--prescription", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_liouville)

    p = sub.add_parser("gamma-bounds", help="estimate the admissible midpoint interval")
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    p.add_argument("--c3", type=float, required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_gamma_bounds)

    p = sub.add_parser("ode", help="integrate the reduced no-swirl equation, CSV output")
    p.add_argument("--c1", type=float, default=0.0)
    p.add_argument("--c2", type=float, default=0.0)
    p.add_argument("--c3", type=float, default=0.0)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--y-min", type=float, default=-0.99)
    p.add_argument("--y-max", type=float, default=0.99)
    p.add_argument("--n-samples", type=int, default=41)
    _add_common(p)
    p.set_defaults(fn=cmd_ode)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (ParameterError, DomainError) as exc:
        _diag(error="input error", detail=str(exc))
        return 2
    except InconclusiveError as exc:
        _diag(error="inconclusive", detail=str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
