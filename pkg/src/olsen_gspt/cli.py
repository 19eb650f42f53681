"""Command-line front end.

Every subcommand accepts ``--config FILE`` (TOML or JSON) and ``--json``.
Values from the file are overridden by flags given on the command line. The
config file may hold a top-level ``preset``, a ``[params]`` table of
dimensionless parameters, a ``[rates]`` table of rate constants, and one table
per subcommand (``[candidate]``, ``[returnmap]`` and so on) with flag values.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .blowup import classify_approach, equilibria_chart1, rhs_chart1
from .candidates import Case, intersect_windows, mu_window_scan, solve_candidate
from .errors import OlsenError
from .integrate import IntegratorConfig, integrate
from .loops import LoopSpec, landing_point, loop_extrema, loop_polyline
from .manifolds import branch_expansions, c20_roots, classify_point
from .model import (PRESETS, OlsenParams, ScaledParams, classify_regime, consistent_kappa, original_system,
                    preset, scaled_preset, scaled_system, fast_system, transform_params)
from .returnmap import find_periodic_orbit
from .transcritical import PassageCase, classify_passage, delay_run, lambda_tc
from .verify import SUITES, CHECKS, _jsonable, eps_convergence_table, run_suite

SCHEMA_VERSION = 1
KAPPA_PRINTED = 3.93
_SCALED_FIELDS = tuple(f.name for f in dataclasses.fields(ScaledParams))
_RATE_FIELDS = tuple(f.name for f in dataclasses.fields(OlsenParams))


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# config and parameters


def load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    text = p.read_text()
    try:
        if p.suffix.lower() == ".json":
            return json.loads(text)
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    except ValueError as exc:
        raise UsageError(f"cannot parse config {p}: {exc}") from exc


def _merge(args, cfg: dict, section: str) -> None:
    """Fill flags left at None from ``cfg[section]`` (keys with - or _)."""
    table = cfg.get(section, {})
    for key, val in table.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, val)


def resolve_params(args, cfg: dict) -> ScaledParams:
    """Dimensionless parameters from exactly one source, then per-flag overrides."""
    name = args.preset if args.preset is not None else cfg.get("preset")
    rates = cfg.get("rates")
    table = dict(cfg.get("params", {}))
    if name is not None and rates is not None:
        raise UsageError("give either a preset or a [rates] table, not both")
    if name is not None:
        if name not in PRESETS:
            raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
        sp = scaled_preset(name)
    elif rates is not None:
        bad = set(rates) - set(_RATE_FIELDS)
        if bad:
            raise UsageError(f"unknown rate constants {sorted(bad)}")
        sp = transform_params(OlsenParams(**rates))
    else:
        missing = set(_SCALED_FIELDS) - set(table)
        if missing:
            raise UsageError(f"no preset given and [params] lacks {sorted(missing)}")
        sp = ScaledParams(**{k: float(table.pop(k)) for k in _SCALED_FIELDS})
    bad = set(table) - set(_SCALED_FIELDS)
    if bad:
        raise UsageError(f"unknown parameters {sorted(bad)}")
    changes = {k: float(v) for k, v in table.items()}
    for f in _SCALED_FIELDS:
        v = getattr(args, f, None)
        if v is not None:
            changes[f] = float(v)
    if "eps" in changes and "delta" not in changes and name == "fig10":
        changes["delta"] = 2.0 * changes["eps"] ** 2
    return sp.replace(**changes) if changes else sp


def _params_dict(sp: ScaledParams) -> dict:
    d = dataclasses.asdict(sp)
    d["eps2"] = sp.eps2
    return d


# --------------------------------------------------------------------------
# output


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in r])


def emit(args, report: dict, text: str) -> None:
    if args.json:
        out = {"schema_version": SCHEMA_VERSION, "command": args.command_path}
        out.update(_jsonable(report))
        print(json.dumps(out, indent=2, allow_nan=True))
    else:
        print(text)


def _floats(s) -> list:
    if s is None:
        return None
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    try:
        return [float(v) for v in str(s).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {s!r}") from exc


def _cfg(args) -> IntegratorConfig:
    kw = {}
    for k in ("rtol", "atol", "method"):
        v = getattr(args, k, None)
        if v is not None:
            kw[k] = v
    return IntegratorConfig(**kw)


# --------------------------------------------------------------------------
# subcommands


def cmd_params(args, cfg):
    sp = resolve_params(args, cfg)
    name = args.preset or cfg.get("preset")
    rep = {"params": _params_dict(sp), "delta_hat": sp.delta_hat, "regime": classify_regime(sp).tag.value,
           "kappa": {"used": sp.kappa, "printed": KAPPA_PRINTED}}
    if name in PRESETS and not name.startswith("fig"):
        p = preset(name)
        rep["rates"] = dataclasses.asdict(p)
        rep["kappa"]["from_rates"] = transform_params(p).kappa
        rep["kappa"]["consistent_scaling"] = consistent_kappa(p)
        rep["kappa"]["note"] = "rate constants give kappa = sqrt(2 k2 k8)/k5; the printed value 3.93 differs"
    lines = [f"{k:>6} = {v:.6g}" for k, v in rep["params"].items()]
    lines.append(f"regime: {rep['regime']}")
    lines.append("kappa: " + ", ".join(f"{k}={v:.4f}" for k, v in rep["kappa"].items() if isinstance(v, float)))
    emit(args, rep, "\n".join(lines))


def cmd_simulate(args, cfg):
    _merge(args, cfg, "simulate")
    system = args.system or "scaled"
    if system == "original":
        name = args.preset or cfg.get("preset")
        if name is None or name.startswith("fig"):
            raise UsageError("--system original needs a rate-constant preset (olsen-0.16/0.35/0.41)")
        sys_ = original_system(preset(name))
        z0 = _floats(args.z0) or [0.5, 20.0, 0.1, 0.1]
    else:
        sp = resolve_params(args, cfg)
        sys_ = scaled_system(sp) if system == "scaled" else fast_system(sp)
        z0 = _floats(args.z0) or [1.0, 0.9, 0.1, 0.01]
    if len(z0) != 4:
        raise UsageError("--z0 needs four components")
    t1 = float(args.t1 if args.t1 is not None else 50.0)
    tr = integrate(sys_.rhs, z0, 0.0, t1, _cfg(args), jac=sys_.jac, time_scale=sys_.time_scale, names=sys_.names)
    if args.csv:
        tr.to_csv(args.csv)
    rep = {"system": system, "z0": z0, "t1": t1, "final_state": tr.states[-1], "trajectory": tr.metadata()}
    emit(args, rep, f"{system}: {len(tr.times)} points, {tr.n_steps} steps, final state {tr.states[-1]}")


def cmd_manifold(args, cfg):
    _merge(args, cfg, "manifold")
    sp = resolve_params(args, cfg)
    a_lo, a_hi = _floats(args.a_range or "0.05,3.0")
    b_lo, b_hi = _floats(args.b_range or "0.3,1.5")
    n = int(args.n or 41)
    rows = []
    for a in np.linspace(a_lo, a_hi, n):
        for b in np.linspace(b_lo, b_hi, n):
            for x2 in (r.x2 for r in c20_roots(a, b, sp)):
                y2 = x2 * x2 / (1.0 + a * b)
                rows.append((float(a), float(b), float(x2), float(y2), classify_point(a, b, x2, y2, sp).value))
    if args.csv:
        write_csv(args.csv, ("a2", "b2", "x2", "y2", "branch"), rows)
    counts = {}
    for r in rows:
        counts[r[4]] = counts.get(r[4], 0) + 1
    rep = {"params": _params_dict(sp), "grid": [n, n], "points": len(rows), "branches": counts}
    if args.a is not None and args.b is not None:
        ex = branch_expansions(float(args.a), float(args.b), sp.delta, sp)
        rep["expansions"] = {k: (None if v is None else {"x2": v.x2, "y2": v.y2}) for k, v in ex.items()}
    emit(args, rep, f"{len(rows)} branch points; " + ", ".join(f"{k}: {v}" for k, v in counts.items()))


def cmd_blowup(args, cfg):
    _merge(args, cfg, "blowup")
    sp = resolve_params(args, cfg)
    a1 = float(args.a1 if args.a1 is not None else 1.0)
    b1 = float(args.b1 if args.b1 is not None else 0.5)
    n = int(args.n or 25)
    ymax = float(args.y_max or 2.0)
    emax = float(args.eps_max or 1.0)
    rows = []
    for y1 in np.linspace(0.0, ymax, n):
        for e1 in np.linspace(0.0, emax, n):
            f = rhs_chart1((a1, b1, 0.0, y1, e1), sp)
            rows.append((float(y1), float(e1), float(f[3]), float(f[4])))
    if args.csv:
        write_csv(args.csv, ("y1", "eps1", "dy1", "deps1"), rows)
    eqs = [{"name": q.name, "y1": q.y1, "eps1": q.eps1, "kind": q.kind.value,
            "eigenvalues": [complex(v).real for v in q.eigenvalues]} for q in equilibria_chart1(a1, b1, sp)]
    rep = {"a1": a1, "b1": b1, "grid": [n, n], "equilibria": eqs,
           "approach_case": classify_approach(a1, b1, sp).value}
    emit(args, rep, "\n".join(f"{q['name']}: {q['kind']} at ({q['y1']:.6g}, {q['eps1']:.6g})" for q in eqs))


def cmd_tc(args, cfg):
    _merge(args, cfg, "tc")
    sp = resolve_params(args, cfg)
    if args.tc_command == "classify":
        a0 = float(args.a0 if args.a0 is not None else 1.0)
        c = classify_passage(a0, sp)
        lam = lambda_tc(a0, sp, c.delta_hat)
        rep = {"a0": a0, "case": c.case.value, "lambda_tc": lam, "delta_hat": c.delta_hat}
        emit(args, rep, f"{c.case.value}: lambda_tc = {lam:.6g}, delta_hat = {c.delta_hat:.6g}")
        return
    a0 = float(args.alpha0 if args.alpha0 is not None else 0.1176)
    b0 = float(args.beta0 if args.beta0 is not None else 0.9402)
    case = PassageCase((args.case or "canard").capitalize())
    eps_list = _floats(args.eps_list) or [0.1, 0.07, 0.05, 0.035]
    k = float(args.delta_factor if args.delta_factor is not None else (0.0 if case is PassageCase.CANARD else 5.0))
    rows = []
    for e in eps_list:
        r = delay_run(a0, b0, sp.replace(eps=e, delta=k * e * e), case)
        rows.append({"eps": e, "delta": k * e * e, "exit_b": r.exit_b, "predicted_b": r.predicted_b,
                     "error": r.error, "exit_s": r.exit_s, "n_steps": r.n_steps})
    if args.csv:
        write_csv(args.csv, tuple(rows[0]), [tuple(r.values()) for r in rows])
    rep = {"case": case.value, "entry": [a0, b0], "delta_over_eps2": k, "table": rows}
    emit(args, rep, "\n".join(f"eps={r['eps']:<6g} exit b={r['exit_b']:.6f} predicted {r['predicted_b']:.6f}"
                              f" error {r['error']:.2e}" for r in rows))


def cmd_loop(args, cfg):
    _merge(args, cfg, "loop")
    sp = resolve_params(args, cfg)
    if args.alpha1 is None or args.beta1 is None:
        raise UsageError("loop needs --alpha1 and --beta1")
    spec = LoopSpec.from_params(float(args.alpha1), float(args.beta1), sp)
    a2 = landing_point(spec)
    poly = loop_polyline(spec, int(args.n or 2000), a2)
    if args.csv:
        write_csv(args.csv, ("a", "b", "y"), poly.tolist())
    ap, am = loop_extrema(spec)
    rep = {"alpha1": spec.alpha1, "beta1": spec.beta1, "K1": spec.K1, "landing": {"alpha2": a2,
           "beta2": float(spec.eps_b * a2 + spec.K1)}, "a_plus": ap, "y_max": float(poly[:, 2].max())}
    emit(args, rep, f"landing at a = {a2:.10g}, b = {rep['landing']['beta2']:.10g}")


def cmd_candidate(args, cfg):
    _merge(args, cfg, "candidate")
    sp = resolve_params(args, cfg)
    case = Case.parse(args.case or "canard")
    mu = None if args.mu is None else float(args.mu)
    c = solve_candidate(case, sp, mu=mu)
    if c is None:
        raise OlsenError(f"no admissible root of W for the {case.value} case at mu = {mu if mu else sp.mu}")
    if args.csv:
        write_csv(args.csv, ("a", "b", "x", "y"), c.polyline_fast().tolist())
    rep = {"candidate": c.as_dict(), "params": _params_dict(sp.replace(mu=c.mu))}
    if args.window:
        lo, hi = _floats(args.mu_range or "1.0,2.0")
        rep["windows"] = [dataclasses.asdict(w) for w in mu_window_scan(case, sp, (lo, hi), int(args.grid or 32))]
    emit(args, rep, f"{case.value}: (alpha0, beta0) = ({c.alpha0:.7f}, {c.beta0:.7f}); "
                    f"(alpha1, beta1) = ({c.alpha1:.7f}, {c.beta1:.7f}); closure {c.closure_residual:.1e}")


def _orbit_report(r) -> dict:
    return {"eps": r.eps, "fixed_point": r.fixed_point, "period_s": r.period, "period_tau": r.period_in("tau"),
            "residual": r.residual, "iterations": r.iterations, "jacobian": r.jacobian,
            "multipliers": {"real": r.multipliers.real, "imag": r.multipliers.imag},
            "multiplier_moduli": r.multiplier_moduli, "stable": r.stable,
            "hausdorff_to_candidate": r.hausdorff_to_candidate,
            "frame": dataclasses.asdict(r.frame)}


def cmd_returnmap(args, cfg):
    _merge(args, cfg, "returnmap")
    sp = resolve_params(args, cfg)
    case = Case.parse(args.case or "canard")
    mu = None if args.mu is None else float(args.mu)
    r = find_periodic_orbit(sp, mu=mu, case=case)
    if args.csv and r.orbit is not None:
        r.orbit.to_csv(args.csv)
    rep = {"case": case.value, "params": _params_dict(sp), "orbit": _orbit_report(r)}
    if args.eps_list:
        rep["convergence"] = eps_convergence_table(case, _floats(args.eps_list))
    fp = ", ".join(f"{v:.6g}" for v in r.fixed_point)
    emit(args, rep, f"fixed point (b2, x2, y2) = ({fp}); period {r.period:.6g}; "
                    f"|multipliers| {np.round(r.multiplier_moduli, 6).tolist()}; d_H {r.hausdorff_to_candidate}")


def cmd_verify(args, cfg):
    _merge(args, cfg, "verify")
    suite = args.suite or "quick"
    if suite not in SUITES and suite not in CHECKS:
        raise UsageError(f"unknown suite {suite!r}; choose from {sorted(SUITES) + sorted(CHECKS)}")
    seed = int(args.seed if args.seed is not None else 0)
    results = run_suite(suite, seed=seed)
    rep = {"suite": suite, "seed": seed, "passed": all(r.passed for r in results),
           "checks": [r.as_dict() for r in results]}
    emit(args, rep, "\n".join(r.line() for r in results))
    return 0 if rep["passed"] else 1


def cmd_sweep(args, cfg):
    _merge(args, cfg, "sweep")
    sp = resolve_params(args, cfg)
    kind = args.sweep_kind
    case = Case.parse(args.case or "canard")
    rows = []
    if kind == "eps":
        vals = _floats(args.values) or [0.12, 0.08, 0.05, 0.035]
        for row in eps_convergence_table(case, vals):
            rows.append({"eps": row["eps"], "delta": row["delta"], "hausdorff": row.get("hausdorff"),
                         "period": row.get("period"), "max_modulus": float(np.max(row["moduli"])) if "moduli" in row
                         else None, "error": row.get("error", "")})
    elif kind == "mu":
        vals = _floats(args.values) or list(np.linspace(1.0, 2.0, 21))
        for mu in vals:
            try:
                c = solve_candidate(case, sp, mu=mu)
                rows.append({"mu": mu, "alpha0": c.alpha0 if c else None, "beta0": c.beta0 if c else None,
                             "status": "ok" if c else "no root"})
            except OlsenError as exc:
                rows.append({"mu": mu, "alpha0": None, "beta0": None, "status": type(exc).__name__})
    else:
        a0 = float(args.a0 if args.a0 is not None else 1.0)
        vals = _floats(args.values) or [0.0, 1e-12, sp.eps2, 2 * sp.eps2, 5 * sp.eps2]
        for d in vals:
            c = classify_passage(a0, sp, d)
            rows.append({"delta": d, "delta_hat": c.delta_hat, "lambda_tc": c.lambda_tc, "case": c.case.value})
    if args.csv and rows:
        write_csv(args.csv, tuple(rows[0]), [tuple("" if v is None else v for v in r.values()) for r in rows])
    rep = {"sweep": kind, "case": case.value, "rows": rows}
    emit(args, rep, "\n".join(", ".join(f"{k}={v}" for k, v in r.items()) for r in rows))


# --------------------------------------------------------------------------
# parser


def _common(p, params: bool = True) -> None:
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    if params:
        p.add_argument("--preset", choices=PRESETS)
        for f in ("mu", "alpha", "eps_b", "eps", "xi", "delta", "kappa"):
            p.add_argument("--" + f.replace("_", "-"), dest=f, type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="olsen-gspt", description="Multiscale analysis of the Olsen oscillator.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="dimensionless parameters and regime")
    _common(p)

    p = sub.add_parser("simulate", help="integrate the original, scaled or fast system")
    _common(p)
    p.add_argument("--system", choices=("original", "scaled", "fast"))
    p.add_argument("--z0", help="initial state a,b,x,y")
    p.add_argument("--t1", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--method", choices=("stiff-implicit", "explicit-adaptive"))
    p.add_argument("--csv")

    p = sub.add_parser("manifold", help="critical-manifold branches")
    msub = p.add_subparsers(dest="manifold_command", required=True)
    q = msub.add_parser("sample", help="CSV grid of branch points")
    _common(q)
    q.add_argument("--a-range")
    q.add_argument("--b-range")
    q.add_argument("--n", type=int)
    q.add_argument("--a", type=float, help="also report branch expansions at (a, b)")
    q.add_argument("--b", type=float)
    q.add_argument("--csv")

    p = sub.add_parser("blowup", help="entry chart of the blown-up fold set")
    bsub = p.add_subparsers(dest="blowup_command", required=True)
    q = bsub.add_parser("phase", help="(y1, eps1) phase-portrait samples")
    _common(q)
    q.add_argument("--a1", type=float)
    q.add_argument("--b1", type=float)
    q.add_argument("--n", type=int)
    q.add_argument("--y-max", type=float)
    q.add_argument("--eps-max", type=float)
    q.add_argument("--csv")

    p = sub.add_parser("tc", help="transcritical passage")
    tsub = p.add_subparsers(dest="tc_command", required=True)
    q = tsub.add_parser("classify", help="lambda_tc and canard/jump case")
    _common(q)
    q.add_argument("--a0", type=float)
    q = tsub.add_parser("delay", help="exit points from full-system runs")
    _common(q)
    q.add_argument("--alpha0", type=float)
    q.add_argument("--beta0", type=float)
    q.add_argument("--case", choices=("canard", "jump"))
    q.add_argument("--eps-list")
    q.add_argument("--delta-factor", type=float, help="delta = factor * eps**2")
    q.add_argument("--csv")

    p = sub.add_parser("loop", help="large loop from a launch point")
    _common(p)
    p.add_argument("--alpha1", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--csv")

    p = sub.add_parser("candidate", help="singular candidate orbit")
    _common(p)
    p.add_argument("--case", choices=("canard", "jump"))
    p.add_argument("--window", action="store_true", default=None, help="also scan the mu window")
    p.add_argument("--mu-range")
    p.add_argument("--grid", type=int)
    p.add_argument("--csv")

    p = sub.add_parser("returnmap", help="periodic orbit from the return map")
    _common(p)
    p.add_argument("--case", choices=("canard", "jump"))
    p.add_argument("--eps-list", help="also tabulate convergence over these eps")
    p.add_argument("--csv")

    p = sub.add_parser("verify", help="run the acceptance checks")
    _common(p, params=False)
    p.add_argument("--suite")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("sweep", help="parameter grids")
    ssub = p.add_subparsers(dest="sweep_kind", required=True)
    for kind in ("eps", "mu", "delta"):
        q = ssub.add_parser(kind)
        _common(q)
        q.add_argument("--values", help="comma-separated grid")
        q.add_argument("--case", choices=("canard", "jump"))
        q.add_argument("--a0", type=float)
        q.add_argument("--csv")
    return ap


_COMMANDS = {"params": cmd_params, "simulate": cmd_simulate, "manifold": cmd_manifold, "blowup": cmd_blowup,
             "tc": cmd_tc, "loop": cmd_loop, "candidate": cmd_candidate, "returnmap": cmd_returnmap,
             "verify": cmd_verify, "sweep": cmd_sweep}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = [args.command] + [getattr(args, k) for k in ("manifold_command", "blowup_command", "tc_command",
                                                       "sweep_kind") if getattr(args, k, None)]
    args.command_path = " ".join(sub)
    try:
        cfg = load_config(args.config)
        code = _COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"olsen-gspt: error: {exc}", file=sys.stderr)
        return 2
    except OlsenError as exc:
        print(f"olsen-gspt: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    return code or 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
