"""Command-line interface.

    kolmocalc structure   --structure langevin
    kolmocalc norm        --kind besov --n 0 --s 0.5 --p 2 --q 2
    kolmocalc taylor-check
    kolmocalc mollify-curve --alpha 0.5 --order 0 --out runs/curve
    kolmocalc kfunc       --out runs/kfunc
    kolmocalc verify      --suite group --suite taylor --out runs/verify
    kolmocalc sweep       --kind besov --n 0 --s 0.5 --p 2 --q 2 --out runs/sweep
    kolmocalc report      --out runs/verify

`--config FILE` loads an INI experiment config; `--structure NAME` uses
a built-in structure with default budgets.  `--seed` overrides the
quadrature seed, `--threads` caps BLAS/OpenMP thread pools.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path


def _set_threads(n):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def _build_config(args):
    from .config import default_config, load_config

    cfg = load_config(args.config) if args.config else default_config(args.structure)
    if args.seed is not None:
        cfg = replace(cfg, spec=replace(cfg.spec, seed=args.seed))
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _add_common(sp):
    sp.add_argument("--config", help="INI experiment config")
    sp.add_argument(
        "--structure", default="langevin", help="built-in structure name (langevin, chain3)"
    )
    sp.add_argument("--out", help="output directory for artifacts")
    sp.add_argument("--seed", type=int, help="override the quadrature seed")
    sp.add_argument("--threads", type=int, help="cap BLAS/OpenMP threads")


def _test_function(cfg, args):
    from .functions import attach_cutoff, make_gaussian, make_homogeneous_profile

    g = cfg.structure
    name = getattr(args, "function", "gaussian") or "gaussian"
    if name == "gaussian":
        u = make_gaussian(g, center=(0.0,) * (g.N + 1), t_scale=1.0, x_scales=(1.0,) * g.N)
        return attach_cutoff(u, radius=4.0) if getattr(args, "cutoff", False) else u
    if name.startswith("profile:"):
        alpha = float(name.split(":", 1)[1])
        p = args.p if args.p and not (args.p != args.p) else 2.0
        space = "sup" if getattr(args, "kind", "") == "holder" else ("lp", p)
        return make_homogeneous_profile(g, alpha, cutoff_radius=3.0, space=space)
    raise SystemExit(f"unknown --function {name!r} (use gaussian or profile:ALPHA)")


def _cmd_structure(args):
    cfg = _build_config(args)
    g = cfg.structure
    from . import group as G

    print(f"structure  : {cfg.structure_label}")
    print(f"blocks     : {g.block_sizes}   N = {g.N}   r = {g.r}")
    print(f"weights    : t -> 2, x -> {tuple(int(w) for w in g.weights)}")
    print(f"hom. dim   : Q = {g.hom_dim}")
    print("B =")
    print(g.B)
    tri = G.estimate_triangle_constant(g, n_random=2000, seed=cfg.spec.seed)
    print(
        f"gauge constants: triangle ~ {tri['m_triangle']:.3f}  inverse ~ {tri['m_inverse']:.3f}"
        f"  combined m ~ {tri['m']:.3f}"
    )
    return 0


def _cmd_norm(args):
    cfg = _build_config(args)
    g = cfg.structure
    from . import norms

    u = _test_function(cfg, args)
    kind = args.kind
    if kind == "lp":
        r = norms.lp_norm(g, u, args.p, cfg.spec)
    elif kind == "frac":
        field = "Y" if args.field == "Y" else int(args.field)
        r = norms.frac_seminorm(g, u, field, args.gamma, args.p, args.q, cfg.spec)
    elif kind == "besov":
        r = norms.besov_norm(g, u, args.n, args.s, args.p, args.q, cfg.spec)
    elif kind == "sobolev":
        r = norms.sobolev_norm(g, u, args.n, args.p, cfg.spec)
    elif kind == "holder":
        r = norms.holder_norm(g, u, args.n, args.s, cfg.spec)
    else:
        raise SystemExit(f"unknown norm kind {kind!r}")
    print(f"{kind} norm of {u.name}: {r.value:.8e}   (refinement delta {r.error_indicator:.2e})")
    for key, val in sorted(r.meta.items()):
        if isinstance(val, (int, float, str)):
            print(f"  {key}: {val}")
    return 0


def _cmd_taylor_check(args):
    cfg = _build_config(args)
    from .suites import run_suite

    sr = run_suite(cfg, "taylor")
    bad = 0
    for c in sr.checks:
        status = "PASS" if c.passed else "FAIL"
        bad += not c.passed
        print(f"[{status}] {c.name}: value {c.value:.3e}  target {c.target}")
    return 1 if bad else 0


def _cmd_mollify_curve(args):
    cfg = _build_config(args)
    g = cfg.structure
    from .functions import make_homogeneous_profile
    from .interpolation import approx_error_curve
    from .report import emit_report
    from .suites import _approx_spec

    spec = _approx_spec(cfg.spec)
    u = make_homogeneous_profile(g, args.alpha, cutoff_radius=3.0, space=("lp", args.p))
    curve = approx_error_curve(g, u, args.order, args.alpha - args.order, args.p, spec)
    print(f"profile alpha={args.alpha}  order n={args.order}  p={args.p}")
    for e, er, wn in zip(curve.eps, curve.err, curve.wnorm):
        print(f"  eps={e:8.4f}  err={er:10.4e}  wnorm={wn:10.4e}")
    print(f"error slope  {curve.err_slope:+.3f}  (expected {args.alpha:+.3f})")
    print(f"wnorm slope  {curve.wnorm_slope:+.3f}  (expected {-(1 - (args.alpha - args.order)):+.3f})")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        import csv as _csv

        with open(out / "mollify_curve.csv", "w", newline="") as fh:
            wr = _csv.writer(fh)
            wr.writerow(["eps", "err", "wnorm"])
            for row in zip(curve.eps, curve.err, curve.wnorm):
                wr.writerow([f"{v!r}" for v in map(float, row)])
        print(f"wrote {out / 'mollify_curve.csv'}")
    return 0


def _cmd_kfunc(args):
    cfg = _build_config(args)
    g = cfg.structure
    from .interpolation import interpolation_norm, k_curve
    from .suites import _approx_spec

    spec = _approx_spec(cfg.spec)
    u = _test_function(cfg, args)
    if u.support.half_widths is None:
        from .functions import attach_cutoff

        u = attach_cutoff(u, radius=4.0)
    kc = k_curve(g, u, args.order, args.p, spec)
    import numpy as np

    mono = bool(np.all(np.diff(kc.K) >= -1e-12))
    print(f"K-curve of {u.name}: {kc.lambdas.size} lambda nodes")
    print(f"  ||u||_p = {kc.lp_u:.6e}   ||u||_W = {kc.w_u:.6e}")
    print(f"  monotone: {mono}")
    r = interpolation_norm(g, u, args.theta, args.q, args.order, args.p, spec, kcurve=kc)
    print(f"  interpolation norm (theta={args.theta}, q={args.q}): {r.value:.6e}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        import csv as _csv

        with open(out / "k_curve.csv", "w", newline="") as fh:
            wr = _csv.writer(fh)
            wr.writerow(["lambda", "K", "argmin_eps"])
            for row in zip(kc.lambdas, kc.K, kc.argmin_eps):
                wr.writerow([f"{v!r}" for v in map(float, row)])
        print(f"wrote {out / 'k_curve.csv'}")
    return 0


def _cmd_verify(args):
    cfg = _build_config(args)
    from .report import emit_report
    from .suites import run_suites

    names = args.suite if args.suite else None
    results = run_suites(cfg, names)
    bad = 0
    for sr in results:
        for c in sr.checks:
            status = "PASS" if c.passed else "FAIL"
            bad += not c.passed
            val = f"{c.value:.6g}" if isinstance(c.value, float) else c.value
            print(f"[{status}] {sr.suite}/{c.name}: value {val}  target {c.target}")
    out = emit_report(results, cfg, cfg.out_dir)
    print(f"report written to {out}")
    return 1 if bad else 0


def _cmd_sweep(args):
    cfg = _build_config(args)
    g = cfg.structure
    import numpy as np

    from . import norms

    u = _test_function(cfg, args)
    lams = np.exp(np.linspace(np.log(0.5), np.log(2.0), args.points))
    vals = []
    for lam in lams:
        ud = u.dilated(float(lam))
        if args.kind == "lp":
            vals.append(norms.lp_norm(g, ud, args.p, cfg.spec).value)
        elif args.kind == "besov":
            vals.append(
                norms.besov_seminorm(g, ud, args.n, args.s, args.p, args.q, cfg.spec).value
            )
        else:
            raise SystemExit("sweep supports --kind lp or besov")
    vals = np.asarray(vals)
    slope = float(np.polyfit(np.log(lams), np.log(vals), 1)[0])
    if args.kind == "lp":
        want = -g.hom_dim / args.p
    else:
        want = args.n + args.s - g.hom_dim / args.p
    print("lambda      value")
    for lam, v in zip(lams, vals):
        print(f"{lam:8.4f}  {v:.8e}")
    print(f"fitted dilation slope {slope:+.4f}   expected {want:+.4f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        import csv as _csv

        with open(out / "sweep.csv", "w", newline="") as fh:
            wr = _csv.writer(fh)
            wr.writerow(["lambda", "value", "slope", "expected"])
            for lam, v in zip(lams, vals):
                wr.writerow([f"{float(lam)!r}", f"{float(v)!r}", f"{slope!r}", f"{want!r}"])
        print(f"wrote {out / 'sweep.csv'}")
    return 0


def _cmd_report(args):
    out = Path(args.out or "runs/latest")
    src = out / "report.json"
    if not src.is_file():
        raise SystemExit(f"no report.json under {out}")
    payload = json.loads(src.read_text())
    lines = [
        "# kolmocalc verification report",
        "",
        f"structure: `{payload['structure']['label']}`  blocks "
        f"{tuple(payload['structure']['blocks'])}  Q = {payload['structure']['hom_dim']}",
        f"config fingerprint: `{payload['config_fingerprint']}`",
        "",
        "| suite | check | law | value | target | status |",
        "|---|---|---|---|---|---|",
    ]
    n_pass = n_all = 0
    for suite in sorted(payload["suites"]):
        for c in payload["suites"][suite]["checks"]:
            n_all += 1
            n_pass += bool(c["passed"])
            status = "PASS" if c["passed"] else "FAIL"
            val = c["value"]
            val = f"{val:.6g}" if isinstance(val, float) else str(val)
            lines.append(
                f"| {suite} | {c['name']} | {c['law']} | {val} | {c['target']} | {status} |"
            )
    lines += ["", f"**{n_pass}/{n_all} checks passed**", ""]
    (out / "report.md").write_text("\n".join(lines))
    print(f"re-rendered {out / 'report.md'} ({n_pass}/{n_all} passed)")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="kolmocalc",
        description="numerics for the homogeneous group of degenerate Kolmogorov operators",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("structure", help="print structure data and gauge constants")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_structure)

    sp = sub.add_parser("norm", help="estimate a norm of a built-in test function")
    _add_common(sp)
    sp.add_argument("--kind", required=True, choices=["lp", "frac", "besov", "sobolev", "holder"])
    sp.add_argument("--function", default="gaussian", help="gaussian or profile:ALPHA")
    sp.add_argument("--cutoff", action="store_true", help="attach a compact cutoff")
    sp.add_argument("--n", type=int, default=0)
    sp.add_argument("--s", type=float, default=0.5)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--field", default="Y", help="Y or a diffusion index (0-based)")
    sp.add_argument("--gamma", type=float, default=0.5)
    sp.set_defaults(fn=_cmd_norm)

    sp = sub.add_parser("taylor-check", help="Taylor reproduction and commutation checks")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_taylor_check)

    sp = sub.add_parser("mollify-curve", help="mollification error/growth columns")
    _add_common(sp)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--order", type=int, default=0)
    sp.add_argument("--p", type=float, default=2.0)
    sp.set_defaults(fn=_cmd_mollify_curve)

    sp = sub.add_parser("kfunc", help="K-functional curve and interpolation norm")
    _add_common(sp)
    sp.add_argument("--function", default="gaussian")
    sp.add_argument("--cutoff", action="store_true")
    sp.add_argument("--order", type=int, default=0)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--theta", type=float, default=0.5)
    sp.add_argument("--q", type=float, default=2.0)
    sp.set_defaults(fn=_cmd_kfunc)

    sp = sub.add_parser("verify", help="run verification suites and emit a report")
    _add_common(sp)
    sp.add_argument("--suite", action="append", help="suite name (repeatable); default from config")
    sp.set_defaults(fn=_cmd_verify)

    sp = sub.add_parser("sweep", help="dilation sweep of a norm with fitted slope")
    _add_common(sp)
    sp.add_argument("--kind", default="lp", choices=["lp", "besov"])
    sp.add_argument("--function", default="gaussian")
    sp.add_argument("--n", type=int, default=0)
    sp.add_argument("--s", type=float, default=0.5)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--points", type=int, default=5)
    sp.set_defaults(fn=_cmd_sweep)

    sp = sub.add_parser("report", help="re-render report.md from an existing report.json")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_report)

    args = ap.parse_args(argv)
    if getattr(args, "threads", None):
        _set_threads(args.threads)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
