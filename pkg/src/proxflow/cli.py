"""
Command-line entry point.

``proxflow {solve,certify,track,bench,demo-list}``; see :mod:`proxflow.config`
for the JSON schema. Exit codes: 0 success (all selected checks pass),
1 usage or config error, 2 numerical failure or failed certificate.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import certificates as cert
from . import demos
from . import time_varying as tv
from .certificates import UnsupportedOperatorError
from .config import _UNHASHED, ConfigError, build_problem, build_tracking, load_json, resolve
from .dynamics import FlowConfig, integrate
from .numerics import NumericalError
from .problems import attach_ista_fstar
from .svg import line_chart

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _write_json(path, obj, digest):
    body = {"config_sha256": digest}
    body.update(obj)
    text = json.dumps(cert._jsonable(body), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _csv_header(rc):
    return [f"config_sha256: {rc.hash}", f"seed: {rc.seed}"]


def _write_config(rc, out):
    body = {k: v for k, v in rc.raw.items() if k not in _UNHASHED}
    _write_json(out / "config.json", {"config": body}, rc.hash)


def _outdir(rc):
    out = Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_solve(rc):
    p, x0 = build_problem(rc.problem, rc.seed, rc.base_dir)
    tr = integrate(p, rc.flow, x0)
    out = _outdir(rc)
    _write_config(rc, out)
    with open(out / "trajectory.csv", "w", encoding="utf-8", newline="") as fh:
        tr.to_csv(fh, include_states=True, header_lines=_csv_header(rc))
    rate = None
    if p.fstar is not None:
        try:
            fit = cert.estimate_exp_rate(tr)
            rate = {"rate": fit.rate, "r2": fit.r2, "t_window": list(fit.t_window)}
        except ValueError:
            rate = None
    mono = cert.check_monotone_cost(tr)
    summary = {"problem": p.name, "final_cost": float(tr.costs[-1]),
               "final_objective": p.F(tr.final_state),
               "final_residual": float(tr.residuals[-1]), "fstar": p.fstar,
               "fstar_source": p.fstar_source, "cost_is_gap": p.fstar is not None,
               "fitted_rate": rate, "monotone": mono.passed,
               "worst_monotone_increase": mono.worst_violation,
               "n_samples": len(tr), "final_time": float(tr.times[-1])}
    _write_json(out / "summary.json", summary, rc.hash)
    if rc.svg:
        ylab = "F(x) - F*" if p.fstar is not None else "F(x)"
        chart = line_chart([(ylab, tr.times, tr.costs)], title=f"{p.name}: cost",
                           ylabel=ylab, logy=True, comment=f"config_sha256: {rc.hash}")
        (out / "trajectory.svg").write_text(chart, encoding="utf-8")
    return EXIT_OK


def _half_largest(report):
    """Half the largest constant that passed on an independent calibration cloud."""
    mu = report.details["largest_passing_mu"]
    return 0.5 * mu if np.isfinite(mu) else 0.0


def cmd_certify(rc):
    cc = rc.certify
    p, x0 = build_problem(rc.problem, rc.seed, rc.base_dir)
    needs_fstar = {"pl", "condition12", "kl", "rate"} & set(cc.checks)
    if needs_fstar and p.fstar is None:
        if not p.convex:
            raise ConfigError(f"checks {sorted(needs_fstar)} need an optimal value, "
                              f"which {p.name} (nonconvex) does not have")
        p = attach_ista_fstar(p)
    alpha = rc.flow.alpha
    tr = integrate(p, rc.flow, x0)
    cloud = cert.trajectory_cloud(tr, scale=cc.scale, seed=rc.seed, g=p.g)
    cal_cloud = cert.trajectory_cloud(tr, scale=cc.scale, seed=rc.seed + 1, g=p.g)
    n = cc.n_samples
    reports = []
    mu_hat = None
    for name in cc.checks:
        if name == "monotone":
            r = cert.check_monotone_cost(tr)
        elif name == "dini":
            r = cert.check_dini_bound(tr, p, alpha, cc.dini_constant)
        elif name in ("pl", "rate"):
            if mu_hat is None:
                mu_hat = cert.estimate_pl_constant(p, alpha, cloud, n)
            if name == "pl":
                r = cert.CertificateReport("pl", mu_hat.mu_hat > 0, -mu_hat.mu_hat, 0.0,
                                           mu_hat.min_witness,
                                           {"mu_hat": mu_hat.mu_hat, "alpha": alpha,
                                            "n_samples": mu_hat.n_samples,
                                            "empirical": True})
            else:
                try:
                    r = cert.check_rate(tr, mu_hat.mu_hat, alpha)
                except ValueError as exc:
                    raise NumericalError(f"rate fit failed: {exc}") from None
        elif name == "condition12":
            mu = cc.mu
            if mu is None:
                mu = _half_largest(cert.check_condition12(p, alpha, 0.0, cal_cloud, n))
            r = cert.check_condition12(p, alpha, mu, cloud, n)
        elif name == "kl":
            mu = cc.kl_mu
            if mu is None:
                mu = _half_largest(cert.check_kl(p, cal_cloud, n, 0.0))
            r = cert.check_kl(p, cloud, n, mu)
        elif name == "cauchy-schwarz":
            r = cert.check_lemma_cauchy_schwarz(p, alpha, cloud, n)
        elif name == "alpha-monotone":
            r = cert.check_dg_alpha_monotone(p, cloud(n), sorted(cc.alphas))
        reports.append(r)
    out = _outdir(rc)
    _write_config(rc, out)
    ok = all(r.passed for r in reports)
    _write_json(out / "certificates.json",
                {"problem": p.name, "passed": ok, "reports": [r.to_dict() for r in reports]},
                rc.hash)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        msg = f"{status} {r.name}: worst {r.worst_violation:.3e} vs slack {r.slack_used:.3e}"
        if not r.passed and r.witness is not None:
            w = np.atleast_1d(np.asarray(r.witness, dtype=float))
            more = ", ..." if w.size > 4 else ""
            msg += f" at witness [{', '.join(f'{v:.4g}' for v in w[:4])}{more}]"
        print(msg)
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_track(rc):
    if rc.path is None:
        raise ConfigError("track needs a 'path' section (or a tracking --demo)")
    tp, x0 = build_tracking(rc.problem, rc.path, rc.flow.t_end, rc.base_dir)
    if isinstance(x0, str):
        _, res = tv._frozen_optimum(tp, tp.path.theta(0.0), 0.0, None)
        x0 = res.x
    rec = tv.integrate_tv(tp, rc.flow, x0)
    r = tv.check_tracking(rec)
    out = _outdir(rc)
    _write_config(rc, out)
    with open(out / "tracking.csv", "w", encoding="utf-8", newline="") as fh:
        rec.to_csv(fh, header_lines=_csv_header(rc))
    tail = max(1, len(rec) // 10)
    body = {"passed": r.passed, "report": r.to_dict(), "mu": rec.mu, "alpha": rec.alpha,
            "ell_theta": rec.path.ell_theta,
            "gronwall_form_holds": r.passed,
            "scaled_form_holds": r.details["scaled_form_holds"],
            "max_V": float(np.max(rec.V)), "min_V": float(np.min(rec.V)),
            "tail_max_V": float(np.max(rec.V[-tail:])),
            "V_nonincreasing": bool(np.all(np.diff(rec.V) <= 1e-12))}
    _write_json(out / "tracking.json", body, rc.hash)
    if rc.svg:
        chart = line_chart([("V", rec.times, rec.V),
                            ("Gronwall bound", rec.times, rec.bound_gronwall),
                            ("scaled bound", rec.times, rec.bound_paper)],
                           title="tracking gap", ylabel="V", logy=True,
                           comment=f"config_sha256: {rc.hash}")
        (out / "tracking.svg").write_text(chart, encoding="utf-8")
    print(("PASS" if r.passed else "FAIL") + f" tracking: worst excess "
          f"{r.worst_violation:.3e} vs slack {r.slack_used:.3e}")
    return EXIT_OK if r.passed else EXIT_NUMERICAL


def _bench_point(args):
    spec, seed, base_dir, flow = args
    p, x0 = build_problem(spec, seed, base_dir)
    cfg = FlowConfig(**flow)
    t0 = time.perf_counter()
    tr = integrate(p, cfg, x0)
    wall = time.perf_counter() - t0
    try:
        fit = cert.estimate_exp_rate(tr)
        rate, r2 = fit.rate, fit.r2
    except ValueError:
        rate, r2 = float("nan"), float("nan")
    return {"alpha": cfg.alpha, "step": cfg.step, "method": cfg.method,
            "fitted_rate": rate, "r2": r2, "final_residual": float(tr.residuals[-1]),
            "final_gap": float(tr.costs[-1])}, wall


def cmd_bench(rc):
    bc = rc.bench
    if not bc.alphas or not bc.steps:
        raise ConfigError("bench grids 'alphas' and 'steps' must be nonempty")
    if bc.jobs < 1:
        raise ConfigError("bench jobs must be positive")
    base = dataclasses.asdict(rc.flow)
    grid = []
    for a in bc.alphas:
        for h in bc.steps:
            flow = dict(base, alpha=a, step=h)
            try:
                FlowConfig(**flow)
            except ValueError as exc:
                raise ConfigError(f"bench grid point alpha={a}, step={h}: {exc}") from None
            grid.append((rc.problem, rc.seed, rc.base_dir, flow))
    p, _ = build_problem(rc.problem, rc.seed, rc.base_dir)
    if p.fstar is None:
        raise ConfigError(f"bench fits rates and needs an optimal value; {p.name} has none")
    if bc.jobs == 1:
        results = [_bench_point(g) for g in grid]
    else:
        with ProcessPoolExecutor(max_workers=bc.jobs) as ex:
            results = list(ex.map(_bench_point, grid))
    out = _outdir(rc)
    _write_config(rc, out)
    cols = ["alpha", "step", "method", "fitted_rate", "r2", "final_residual", "final_gap"]
    buf = io.StringIO()
    for line in _csv_header(rc):
        buf.write(f"# {line}\n")
    buf.write(",".join(cols) + "\n")
    for row, _ in results:
        buf.write(",".join(row[c] if isinstance(row[c], str) else repr(float(row[c]))
                           for c in cols) + "\n")
    (out / "bench.csv").write_text(buf.getvalue(), encoding="utf-8")
    # wall time is not reproducible, so it lives apart from bench.csv
    tbuf = io.StringIO()
    for line in _csv_header(rc):
        tbuf.write(f"# {line}\n")
    tbuf.write("alpha,step,wall_seconds\n")
    for row, wall in results:
        tbuf.write(f"{row['alpha']!r},{row['step']!r},{wall:.6f}\n")
    (out / "bench_walltime.csv").write_text(tbuf.getvalue(), encoding="utf-8")
    increasing = {}
    for h in bc.steps:
        rates = [row["fitted_rate"] for row, _ in results if row["step"] == h]
        increasing[repr(h)] = bool(len(rates) > 1 and np.all(np.diff(rates) > 0))
    _write_json(out / "bench.json", {"rate_increases_with_alpha": increasing,
                                     "alphas": list(bc.alphas), "steps": list(bc.steps)},
                rc.hash)
    for row, wall in results:
        print(f"alpha={row['alpha']:g} step={row['step']:g} rate={row['fitted_rate']:.5g} "
              f"r2={row['r2']:.6f} ({wall:.2f}s)")
    return EXIT_OK


def cmd_demo_list():
    for name, d in demos.DEMOS.items():
        print(f"{name:22s} {d.description}")
    for name, (desc, _, _) in demos.TRACK_DEMOS.items():
        print(f"{name:22s} [track] {desc}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "certify": cmd_certify, "track": cmd_track,
            "bench": cmd_bench}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="proxflow", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("solve", "certify", "track", "bench"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run config")
        sp.add_argument("--demo", help="built-in problem (see demo-list)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--step", type=float)
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--method", choices=["euler", "rk4"])
        sp.add_argument("--svg", action="store_true", default=None, help="also write SVG plots")
    sub.add_parser("demo-list")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command == "demo-list":
            return cmd_demo_list()
        raw, base_dir = {}, "."
        if args.config:
            raw = load_json(args.config)
            base_dir = str(Path(args.config).resolve().parent)
        overrides = {k: getattr(args, k) for k in
                     ("seed", "demo", "alpha", "step", "t_end", "method", "out", "svg")}
        rc = resolve(raw, args.command, overrides, base_dir)
        return COMMANDS[args.command](rc)
    except (ConfigError, UnsupportedOperatorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
