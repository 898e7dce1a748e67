"""Command-line interface: ``itemopt {schedule,run,certify,worst-case,design,tables}``.

Every command validates ``--mu``, ``--L`` and ``--N`` before doing any work.
Failures exit nonzero with ``{"error": {"kind": ..., "message": ...}}`` on
stderr; usage errors exit with status 2, everything else with status 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .certificates import (
    final_bound_check,
    item_dual_certificate,
    potential_decrease_check,
    verify_dual_certificate,
)
from .design import design_distance, design_function_value
from .methods import (
    FixedStepMethod,
    Form,
    extract_h,
    gradient_descent_runner,
    item_method,
    ogm_runner,
    run_fixed_step,
    run_item,
    run_ogm,
)
from .oracles import base_quadratics, load_quadratic, random_quadratic
from .pep import Criterion, Mode, worst_case_bound
from .schedules import ClassParams, build_schedule, lower_bound_sequence

TABLE_TOL = 5e-4
GOLDEN = "step_size_tables.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _shared(p, need_n=True):
    p.add_argument("--mu", type=float, default=0.1, help="strong convexity constant (>= 0)")
    p.add_argument("--L", type=float, default=1.0, help="smoothness constant (> mu)")
    if need_n:
        p.add_argument("--N", type=int, default=5, help="number of gradient evaluations (>= 1)")
    p.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def _criterion_flags(p):
    p.add_argument("--crit", choices=["dist", "func"], default="dist")
    p.add_argument("--cw", type=float, default=1.0, help="weight of |w_0 - w*|^2 (func)")
    p.add_argument("--cf", type=float, default=0.0, help="weight of f(w_0) - f* (func)")


def _function_flags(p):
    p.add_argument("--function", choices=["fmu", "fL", "random"], default="random")
    p.add_argument("--quadratic", type=Path, default=None, help="quadratic instance JSON")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def _method_flags(p, default="item"):
    p.add_argument("--method", choices=["item", "ogm", "gd"], default=default)
    p.add_argument("--method-file", type=Path, default=None, help="method JSON (h or alpha rows)")


def build_parser():
    parser = _Parser(prog="itemopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("schedule", help="A_k, beta_k, delta_k and lower-bound lambda_k")
    _shared(p)

    p = sub.add_parser("run", help="run a method on a quadratic and export its trace")
    _shared(p)
    _method_flags(p)
    _function_flags(p)

    p = sub.add_parser("certify", help="potential report of an ITEM run plus its dual certificate")
    _shared(p)
    _function_flags(p)

    p = sub.add_parser("worst-case", help="PEP worst-case bound of a method")
    _shared(p)
    _method_flags(p)
    _criterion_flags(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="relaxed")
    p.add_argument("--dump-sdp", type=Path, default=None, help="write the SDP in debug JSON form")

    p = sub.add_parser("design", help="optimized fixed-step method for a criterion")
    _shared(p)
    _criterion_flags(p)

    p = sub.add_parser("tables", help="regenerate the mu=0.1, L=1 step-size tables and diff them")
    _shared(p, need_n=False)
    p.add_argument("--N", type=int, default=5, help="largest horizon (>= 1)")
    p.add_argument("--golden", type=Path, default=None, help="golden file (default: packaged)")
    p.add_argument("--write-golden", type=Path, default=None, help="store regenerated tables here")
    return parser


def _validate(args):
    if not args.mu >= 0:
        raise UsageError(f"--mu must be >= 0, got {args.mu}")
    if not args.L > args.mu:
        raise UsageError(f"--L must exceed --mu, got mu={args.mu}, L={args.L}")
    if getattr(args, "N", 1) < 1:
        raise UsageError(f"--N must be >= 1, got {args.N}")
    if getattr(args, "crit", None) == "func":
        if args.cw < 0 or args.cf < 0 or (args.cw == 0 and args.cf == 0):
            raise UsageError("--cw and --cf must be nonnegative and not both zero")
    if getattr(args, "dim", None) is not None and args.dim < 1:
        raise UsageError("--dim must be >= 1")


def _criterion(args):
    return Criterion.distance() if args.crit == "dist" else Criterion.function_value(args.cw, args.cf)


def _emit(args, payload=None, rows=None, header=None):
    """Write JSON ``payload`` or CSV ``rows`` according to --format."""
    if args.format == "csv":
        if rows is None:
            raise UsageError(f"csv output is not available for '{args.command}'")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)


def _oracle(args, params):
    if args.quadratic is not None:
        oracle = load_quadratic(args.quadratic, mu=params.mu, L=params.L)
        return oracle, np.ones(oracle.dim)
    rng = np.random.default_rng(args.seed)
    if args.function == "random":
        dim = args.dim or 10
        oracle = random_quadratic(dim, params.mu, params.L, rng)
        return oracle, rng.standard_normal(dim)
    dim = args.dim or 1
    f_mu, f_L = base_quadratics(params.mu, params.L, dim)
    return (f_mu if args.function == "fmu" else f_L), np.ones(dim)


def _method(args, params):
    if args.method_file is not None:
        m = FixedStepMethod.load(args.method_file)
        if not (np.isclose(m.params.mu, params.mu) and np.isclose(m.params.L, params.L)):
            raise UsageError("method file (mu, L) disagrees with --mu/--L")
        return m
    if args.method == "item":
        return item_method(build_schedule(params, args.N))
    if args.method == "ogm":
        return extract_h(ogm_runner(args.N, params.L), args.N, params)
    return extract_h(gradient_descent_runner(params, args.N), args.N, params)


def cmd_schedule(args, params):
    sched = build_schedule(params, args.N)
    lam = lower_bound_sequence(params.q, args.N).lam if 0 < params.q < 1 else None
    payload = sched.to_dict()
    payload["lambda"] = None if lam is None else lam.tolist()
    rows = []
    for k in range(args.N + 1):
        rows.append([
            k,
            repr(float(sched.A[k])),
            repr(float(sched.beta[k])) if k < args.N else "",
            repr(float(sched.delta[k])) if k < args.N else "",
            repr(float(lam[k])) if lam is not None else "",
        ])
    _emit(args, payload, rows, ["k", "A", "beta", "delta", "lambda"])
    return 0


def cmd_run(args, params):
    oracle, x0 = _oracle(args, params)
    if args.method_file is None and args.method == "item":
        sched = build_schedule(params, args.N)
        trace = run_item(oracle, x0, sched)
        seq = trace.sequences["z"]
        r0 = x0 - oracle.x_star
        bound = (r0 @ r0) / (1 + params.q * sched.A)
    elif args.method_file is None and args.method == "ogm":
        trace = run_ogm(oracle, x0, args.N, params.L)
        seq, bound = trace.sequences["z"], None
    else:
        trace = run_fixed_step(_method(args, params).to_h(), oracle, x0)
        seq, bound = trace.sequences["w"], None
    header = ["k", "dist_sq", "f_gap"] + (["bound"] if bound is not None else [])
    rows, cols = [], {h: [] for h in header}
    for k, p in enumerate(seq):
        r = p - oracle.x_star
        fval, _ = oracle(p)
        row = [k, float(r @ r), fval - oracle.f_star] + ([float(bound[k])] if bound is not None else [])
        rows.append([row[0]] + [repr(v) for v in row[1:]])
        for h, v in zip(header, row):
            cols[h].append(v)
    _emit(args, cols, rows, header)
    return 0


def cmd_certify(args, params):
    oracle, x0 = _oracle(args, params)
    sched = build_schedule(params, args.N)
    trace = run_item(oracle, x0, sched)
    rep = potential_decrease_check(trace, sched, oracle)
    fin = final_bound_check(oracle, x0, params, args.N)
    cert = item_dual_certificate(params, args.N)
    ver = verify_dual_certificate(cert, item_method(sched, Form.ALPHA))
    ok = rep.ok and fin.dist_slack >= -1e-8 and fin.psi_slack >= -1e-8 and ver.feasible
    payload = {
        "ok": ok,
        "potential": {
            "phi": rep.phi.tolist(),
            "psi": [s.psi_prev for s in rep.states[1:]],
            "violations": [{"k": k, "margin": m} for k, m in rep.violations],
        },
        "final_bounds": {
            "dist_sq": fin.dist_sq, "dist_bound": fin.dist_bound,
            "psi": fin.psi, "psi_bound": fin.psi_bound,
        },
        "dual_certificate": cert.to_dict(),
        "verification": ver.to_dict(),
    }
    _emit(args, payload)
    return 0 if ok else 1


def cmd_worst_case(args, params):
    method = _method(args, params)
    crit = _criterion(args)
    if args.dump_sdp is not None:
        from .pep import build_dual_relaxed, build_full_pep

        build = build_dual_relaxed if args.mode == "relaxed" else build_full_pep
        build(method.to_alpha(), crit).dump(args.dump_sdp)
    res = worst_case_bound(method, crit, Mode(args.mode))
    payload = {
        "value": res.value,
        "mode": res.mode.value,
        "criterion": crit.to_dict(),
        "method": method.to_dict(),
        "certificate": res.certificate.to_dict() if res.certificate else None,
    }
    _emit(args, payload)
    return 0


def format_table(method, digits=4):
    return "\n".join(
        " ".join(f"{v:.{digits}f}" for v in row) for row in method.to_h().rows
    )


def cmd_design(args, params):
    if args.format == "csv":
        raise UsageError("csv output is not available for 'design'")
    crit = _criterion(args)
    if crit.is_distance:
        res = design_distance(params, args.N)
    else:
        res = design_function_value(params, args.N, crit.c_w, crit.c_f)
    payload = {
        "tau": res.tau,
        "criterion": crit.to_dict(),
        "method": res.method.to_dict(),
        "certificate": res.certificate.to_dict(),
    }
    if args.out is not None:
        res.method.dump(args.out)
        cert_path = args.out.with_name(args.out.stem + ".cert.json")
        cert_path.write_text(json.dumps(res.certificate.to_dict(), indent=2) + "\n")
        sys.stdout.write(f"bound {res.tau:.4f}\n{format_table(res.method)}\n")
    else:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return 0


def load_golden(path=None):
    if path is None:
        text = resources.files("itemopt").joinpath("data", GOLDEN).read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def generate_tables(params, N_max):
    out = {"mu": params.mu, "L": params.L, "tables": []}
    for key, (cw, cf) in (("f_over_dist", (1.0, 0.0)), ("f_over_f", (0.0, 1.0))):
        for N in range(1, N_max + 1):
            res = design_function_value(params, N, cw, cf)
            out["tables"].append(
                {"criterion": key, "c_w": cw, "c_f": cf, "N": N, "tau": res.tau, "rows": res.method.rows}
            )
    return out


def diff_tables(new, golden, tol=TABLE_TOL):
    """Largest entrywise deviation per table, matched on (criterion, N)."""
    ref = {(t["criterion"], t["N"]): t for t in golden["tables"]}
    report = []
    for t in new["tables"]:
        g = ref.get((t["criterion"], t["N"]))
        if g is None:
            report.append({"criterion": t["criterion"], "N": t["N"], "max_dev": None, "ok": False})
            continue
        dev = abs(t["tau"] - g["tau"])
        for r1, r2 in zip(t["rows"], g["rows"]):
            dev = max(dev, float(np.max(np.abs(np.subtract(r1, r2)))))
        report.append({"criterion": t["criterion"], "N": t["N"], "max_dev": dev, "ok": dev <= tol})
    return report


def cmd_tables(args, params):
    new = generate_tables(params, args.N)
    if args.write_golden is not None:
        args.write_golden.write_text(json.dumps(new, indent=2) + "\n")
    golden = load_golden(args.golden)
    if not (np.isclose(golden["mu"], params.mu) and np.isclose(golden["L"], params.L)):
        raise UsageError("golden tables were generated for different (mu, L)")
    report = diff_tables(new, golden)
    ok = all(r["ok"] for r in report)
    rows = []
    for t, r in zip(new["tables"], report):
        for i, row in enumerate(t["rows"]):
            rows.append([t["criterion"], t["N"], f"{t['tau']:.4f}", i + 1] + [f"{v:.4f}" for v in row])
    if args.format == "csv":
        _emit(args, None, rows, ["criterion", "N", "tau", "row", "h..."])
    else:
        lines = []
        for t, r in zip(new["tables"], report):
            m = FixedStepMethod.from_rows(params, t["rows"])
            lines.append(f"[{t['criterion']}] N={t['N']} bound {t['tau']:.4f}  max dev {r['max_dev']:.1e}")
            lines.append(format_table(m))
        lines.append("tables match golden" if ok else "tables DIFFER from golden")
        text = "\n".join(lines) + "\n"
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.write_text(text)
    return 0 if ok else 1


COMMANDS = {
    "schedule": cmd_schedule,
    "run": cmd_run,
    "certify": cmd_certify,
    "worst-case": cmd_worst_case,
    "design": cmd_design,
    "tables": cmd_tables,
}


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": {"kind": kind, "message": message}}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
        params = ClassParams(args.mu, args.L)
        return COMMANDS[args.command](args, params)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # reported as machine-readable JSON
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
