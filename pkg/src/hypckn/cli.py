"""Batch command line: ``hypckn {constant,solve,verify,pohozaev,sweep}``.

Exit codes: 0 success, 2 validation failure, 3 non-convergence,
4 verification failure.  Flags override ``--config`` file entries, which
override built-in defaults.
"""

import argparse
import itertools
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import _io
from .checks import run_checks
from .errors import ConvergenceError, HypCKNError, ShootingError, TailError, TailWarning, ValidationError
from .functionals import hardy_infimum
from .geometry import (
    Params,
    ckn_weights,
    critical_exponent,
    ensure_valid,
    hardy_constant,
    supercritical_threshold,
    validate,
)
from .kernels import scan_factors
from .pohozaev import (
    BallDomain,
    concentrating_quotients,
    euclidean_bubble_quotient,
    pohozaev_report,
)
from .quadrature import Grading, build_grid
from .solver import SolveOptions, descend_quotient, solve_ground_state
from .svg import write_line_plot

log = logging.getLogger("hypckn")

EXIT_OK, EXIT_INVALID, EXIT_NONCONV, EXIT_VERIFY = 0, 2, 3, 4

DEFAULTS = {
    "N": 3, "a": None, "b": None, "alpha": 0.0, "beta": 0.0, "lambda": 0.0, "q": None, "p": None,
    "grid_n": 512, "tmax": None, "grading": None, "tol": 1e-8, "max_iter": 5000, "out": "out",
    "format": "csv,json", "jobs": 1, "checks": None, "family_size": 12, "descent_iters": 200,
    "inject_fault": None, "cell": None, "range": None,
}
TMAX_DEFAULT = {"solve": 40.0, "constant": 1.0, "pohozaev": 1.0, "sweep": None, "verify": None}
INT_KEYS = {"N", "grid_n", "max_iter", "jobs", "family_size", "descent_iters"}
FLOAT_KEYS = {"a", "b", "alpha", "beta", "lambda", "q", "p", "tmax", "tol"}


# ---------------------------------------------------------------------------
# configuration


def read_config(path):
    """``key = value`` lines, ``#`` comments; repeated ``range`` keys accumulate."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key == "range":
                cfg.setdefault("range", []).append(val)
            else:
                cfg[key] = val
    return cfg


def _coerce(key, val):
    if val is None:
        return None
    if key in INT_KEYS:
        return int(float(val))
    if key in FLOAT_KEYS:
        return float(val)
    return val


def merge_config(command, ns):
    cfg = dict(DEFAULTS)
    if getattr(ns, "config", None):
        for k, v in read_config(ns.config).items():
            if k not in DEFAULTS:
                raise ValueError(f"unknown config key {k!r}")
            cfg[k] = v
    for k in DEFAULTS:
        v = getattr(ns, k, None)
        if v is not None:
            cfg[k] = v
    cfg = {k: (v if k == "range" else _coerce(k, v)) for k, v in cfg.items()}
    if cfg["tmax"] is None:
        cfg["tmax"] = TMAX_DEFAULT.get(command)
    cfg["formats"] = {f.strip() for f in str(cfg["format"]).split(",") if f.strip()}
    cfg["command"] = command
    return cfg


def params_from(cfg):
    return Params(N=cfg["N"], alpha=cfg["alpha"], beta=cfg["beta"], lam=cfg["lambda"],
                  q=cfg["q"], p=cfg["p"], a=cfg["a"], b=cfg["b"])


def _grid(cfg, T):
    return build_grid(cfg["grid_n"], T, Grading.parse(cfg["grading"]))


def _violations_payload(err):
    return {"status": "invalid", "violations": [v.to_dict() for v in err.violations]}


# ---------------------------------------------------------------------------
# computations shared by single commands and sweep cells


def half_energy_radius(v, alpha):
    """Geodesic radius enclosing half of ``int d^alpha |grad v|^2``; tracks where mass sits."""
    rule = v.grid.weighted_rule(alpha, v.N)
    dens = np.cumsum(rule.weights * rule.sample(v.derivs) ** 2)
    return float(rule.nodes[np.searchsorted(dens, 0.5 * dens[-1])])


def constant_summary(cfg):
    """CKN-constant upper estimates; pure function of ``cfg``."""
    N, a, b = cfg["N"], cfg["a"], cfg["b"]
    ensure_valid(Params(N=N, a=a, b=b), "ckn")
    alpha, beta, p = ckn_weights(N, a, b)
    out = {"N": N, "a": a, "b": b, "alpha": alpha, "beta": beta, "p": p,
           "hardy_floor": hardy_constant(N, alpha), "spectral_floor": 0.25 * (N - 1) ** 2}
    T = cfg["tmax"] or 1.0
    if abs(p - 2.0) < 1e-12:
        mu, v = hardy_infimum(N, alpha)
        out.update(estimate=mu, floor=hardy_constant(N, alpha), method="hardy_eigen",
                   concentrating_min=None, descent_final=None, half_energy_radius=half_energy_radius(v, alpha))
        return out, v, [mu]
    fam = concentrating_quotients(Params(N=N, alpha=alpha, beta=beta, p=p), BallDomain(T),
                                  family_size=8, profile="bubble")
    hist, v = descend_quotient(_grid(cfg, T), N, alpha, beta, p, iters=cfg["descent_iters"])
    est = min(min(fam.quotients), hist[-1])
    out.update(estimate=est, floor=None, method="descent+concentration",
               concentrating_min=min(fam.quotients), descent_final=hist[-1],
               half_energy_radius=half_energy_radius(v, alpha))
    if a == 0 and b == 0:
        out["euclidean_sobolev"] = euclidean_bubble_quotient(N)
    return out, v, hist


def solve_summary(cfg, fault=None):
    P = params_from(cfg)
    ensure_valid(P, "solve")
    opts = SolveOptions(tol=cfg["tol"], max_iter=cfg["max_iter"])
    res = solve_ground_state(P, _grid(cfg, cfg["tmax"]), opts, fault=fault)
    out = {"N": P.N, "alpha": P.alpha, "beta": P.beta, "lambda": P.lam, "q": P.q}
    out.update(res.to_dict())
    return out, res


# ---------------------------------------------------------------------------
# commands


def cmd_constant(cfg):
    out_dir = cfg["out"]
    try:
        summary, v, hist = constant_summary(cfg)
    except ValidationError as e:
        return _fail_invalid(cfg, e)
    summary["status"] = "ok"
    _emit(cfg, "constant", summary)
    if "csv" in cfg["formats"]:
        v.to_csv(os.path.join(out_dir, "profile.csv.tmp"))
        os.replace(os.path.join(out_dir, "profile.csv.tmp"), os.path.join(out_dir, "profile.csv"))
    if "svg" in cfg["formats"]:
        write_line_plot(os.path.join(out_dir, "profile.svg"), [(v.grid.nodes, v.values, "minimizer")],
                        title="normalized profile", xlabel="t", ylabel="u")
        write_line_plot(os.path.join(out_dir, "history.svg"), [(np.arange(len(hist)), hist, "quotient")],
                        title="quotient vs iteration", xlabel="iteration", ylabel="quotient", logy=True)
    print(f"estimate={summary['estimate']:.8g} (p={summary['p']:.6g})")
    return EXIT_OK


def cmd_solve(cfg):
    out_dir = cfg["out"]
    try:
        summary, res = solve_summary(cfg, fault=cfg["inject_fault"])
    except ValidationError as e:
        return _fail_invalid(cfg, e)
    except (ConvergenceError, TailError) as e:
        _emit(cfg, "solve", {"status": "nonconverged", "error": str(e)})
        print(f"not converged: {e}", file=sys.stderr)
        return EXIT_NONCONV
    summary["status"] = "ok" if res.converged else "nonconverged"
    _emit(cfg, "solve", summary)
    if "csv" in cfg["formats"]:
        path = os.path.join(out_dir, "solution.csv")
        res.u.to_csv(path + ".tmp")
        os.replace(path + ".tmp", path)
    if "svg" in cfg["formats"]:
        write_line_plot(os.path.join(out_dir, "solution.svg"), [(res.u.grid.nodes, res.u.values, "u")],
                        title="ground state", xlabel="t", ylabel="u")
    print(f"mu={res.quotient:.10g} residual={res.residual:.2e} converged={res.converged}")
    return EXIT_OK if res.converged else EXIT_NONCONV


def cmd_verify(cfg):
    names = [c.strip() for c in cfg["checks"].split(",")] if cfg["checks"] else None
    fault = "weight" if cfg["inject_fault"] in ("weight", "quadrature-weight") else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailWarning)
        try:
            results = run_checks(names, fault=fault)
        except ValueError as e:
            print(str(e), file=sys.stderr)
            return EXIT_INVALID
    rows = [r.to_row() for r in results]
    header = ["check", "worst", "tol", "passed", "detail"]
    if "csv" in cfg["formats"]:
        _io.write_csv(os.path.join(cfg["out"], "verify.csv"), header, rows)
    if "json" in cfg["formats"]:
        _io.write_json(os.path.join(cfg["out"], "verify.json"),
                       {r.name: r.passed for r in results} | {"all_passed": all(r.passed for r in results)})
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<20} worst={r.worst:.3e} tol={r.tol:.1e}  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_pohozaev(cfg):
    out_dir = cfg["out"]
    P = params_from(cfg)
    if P.p is None and P.q is not None:
        P = Params(N=P.N, alpha=P.alpha, beta=P.beta, p=P.q)
    viol = validate(P, "pohozaev")
    fatal = [v for v in viol if v.fatal]
    if fatal:
        return _fail_invalid(cfg, ValidationError(fatal))
    for v in viol:
        log.warning("outside the volume-factor positivity range: %s (%s)", v.constraint, v.detail)
    dom = BallDomain(cfg["tmax"])
    N, a, b, p = P.N, P.alpha, P.beta, P.p
    crit = critical_exponent(N, a, b)
    thr = supercritical_threshold(N, a, b)
    summary = {"N": N, "alpha": a, "beta": b, "p": p, "T": dom.T, "R_e": dom.R_e,
               "hypothesis_ok": not viol, "threshold": thr}
    code = EXIT_OK
    if p < crit:
        sp = Params(N=N, alpha=a, beta=b, lam=0.0, q=p, p=p)
        try:
            res = solve_ground_state(sp, _grid(cfg, dom.T), SolveOptions(domain="ball", tol=cfg["tol"],
                                                                          max_iter=cfg["max_iter"]))
        except ConvergenceError as e:
            _emit(cfg, "pohozaev", summary | {"status": "nonconverged", "error": str(e)})
            return EXIT_NONCONV
        rep = pohozaev_report(res.u, dom, sp)
        summary.update(mode="identity", **rep.to_dict())
        if rep.residual >= 1e-2:
            code = EXIT_VERIFY
    else:
        probe = concentrating_quotients(P, dom, cfg["family_size"])
        summary.update(mode="probe", regime=probe.regime, scaling_exponent=probe.scaling_exponent,
                       tail_decreasing=probe.tail_decreasing(), open_interval=bool(p < thr))
        summary.update({f"quotient_{i:02d}": q for i, q in enumerate(probe.quotients)})
        summary.update({f"eps_{i:02d}": e for i, e in enumerate(probe.eps)})
    summary["status"] = "ok" if code == EXIT_OK else "failed"
    _emit(cfg, "pohozaev", summary)
    r = np.linspace(dom.R_e / 10_000, dom.R_e, 10_000)
    br, lap = scan_factors(r, N, a, b, p)
    if "csv" in cfg["formats"]:
        _io.write_csv(os.path.join(out_dir, "scan.csv"), ["r", "bracket2", "laplacian_factor"],
                      zip(r, br, lap))
    if "svg" in cfg["formats"]:
        write_line_plot(os.path.join(out_dir, "bracket2.svg"), [(r, br, "bracket2")],
                        title="volume factor", xlabel="r", ylabel="bracket2")
    print(json.dumps({k: summary[k] for k in ("mode", "status") if k in summary}))
    return code


# -- sweep ------------------------------------------------------------------


def parse_range(spec):
    """``name=start:stop:count`` -> (name, values)."""
    name, _, body = spec.partition("=")
    parts = body.split(":")
    if not name or len(parts) != 3:
        raise ValueError(f"bad range {spec!r}; expected name=start:stop:count")
    lo, hi, cnt = float(parts[0]), float(parts[1]), int(parts[2])
    if cnt < 1:
        raise ValueError("range count must be >= 1")
    return name.strip(), [float(x) for x in np.linspace(lo, hi, cnt)]


CONSTANT_COLS = ["index", "a", "b", "alpha", "beta", "p", "status", "estimate", "floor",
                 "concentrating_min", "descent_final", "half_energy_radius", "detail"]
SOLVE_COLS = ["index", "alpha", "beta", "lambda", "q", "status", "quotient", "residual", "converged",
              "positivity_ok", "nehari_gap", "detail"]


def _run_cell(args):
    kind, cfg = args
    row = {"index": cfg["_index"]}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TailWarning)
            if kind == "constant":
                s, _, _ = constant_summary(cfg)
            else:
                s, _ = solve_summary(cfg)
                s["status"] = "ok" if s["converged"] else "nonconverged"
        row.update(s)
        row.setdefault("status", "ok")
    except ValidationError as e:
        row.update(status="invalid", detail="; ".join(v.constraint for v in e.violations))
    except (ConvergenceError, TailError, ShootingError) as e:
        row.update(status="nonconverged", detail=str(e))
    except HypCKNError as e:
        row.update(status="error", detail=str(e))
    for k in (("a", "b") if kind == "constant" else ("alpha", "beta", "lambda", "q")):
        row.setdefault(k, cfg.get(k))
    return row


def cmd_sweep(cfg):
    ranges = cfg["range"] or []
    if isinstance(ranges, str):
        ranges = [ranges]
    try:
        axes = [parse_range(r) for r in ranges]
    except ValueError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INVALID
    if not axes:
        print("sweep needs at least one --range", file=sys.stderr)
        return EXIT_INVALID
    names = [n for n, _ in axes]
    kind = cfg["cell"] or ("constant" if set(names) <= {"a", "b"} else "solve")
    cols = CONSTANT_COLS if kind == "constant" else SOLVE_COLS
    if kind == "solve" and cfg["tmax"] is None:
        cfg["tmax"] = TMAX_DEFAULT["solve"]
    cells_dir = os.path.join(cfg["out"], "cells")
    os.makedirs(cells_dir, exist_ok=True)
    todo, rows = [], {}
    for idx, combo in enumerate(itertools.product(*(v for _, v in axes))):
        marker = os.path.join(cells_dir, f"cell_{idx:05d}.json")
        if os.path.exists(marker):
            with open(marker) as fh:
                rows[idx] = json.load(fh)
            continue
        c = dict(cfg)
        c.update(zip(names, combo))
        c["_index"] = idx
        todo.append((kind, c))
    log.info("sweep: %d cells, %d already complete", len(todo) + len(rows), len(rows))

    def done(row):
        idx = row["index"]
        rows[idx] = {k: _io.plain(row.get(k)) for k in cols}
        _io.write_json(os.path.join(cells_dir, f"cell_{idx:05d}.json"), rows[idx])

    if cfg["jobs"] > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as ex:
            for row in ex.map(_run_cell, todo):
                done(row)
    else:
        for item in todo:
            done(_run_cell(item))
    ordered = [rows[i] for i in sorted(rows)]
    _io.write_csv(os.path.join(cfg["out"], "sweep.csv"), cols, ([r.get(k) for k in cols] for r in ordered))
    bad = sum(r["status"] != "ok" for r in ordered)
    print(f"sweep: {len(ordered)} rows, {bad} not ok")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _emit(cfg, name, obj):
    if "json" in cfg["formats"]:
        _io.write_json(os.path.join(cfg["out"], f"{name}.json"), obj)


def _fail_invalid(cfg, err):
    payload = _violations_payload(err)
    print(json.dumps(payload, sort_keys=True))
    if "json" in cfg["formats"]:
        _io.write_json(os.path.join(cfg["out"], "violations.json"), payload)
    return EXIT_INVALID


COMMANDS = {
    "constant": cmd_constant,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "pohozaev": cmd_pohozaev,
    "sweep": cmd_sweep,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("parameters")
    g.add_argument("--N", type=int)
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--lambda", dest="lambda", type=float)
    g.add_argument("--q", type=float)
    g.add_argument("--p", type=float)
    g = common.add_argument_group("numerics")
    g.add_argument("--grid-n", dest="grid_n", type=int, help="quadrature nodes (default 512)")
    g.add_argument("--tmax", type=float, help="truncation / ball radius in the geodesic coordinate")
    g.add_argument("--grading", help='e.g. "geometric:ratio=0.5,layers=40,order=8"')
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--family-size", dest="family_size", type=int)
    g.add_argument("--descent-iters", dest="descent_iters", type=int)
    g = common.add_argument_group("output")
    g.add_argument("--out", help="output directory (default ./out)")
    g.add_argument("--format", help="comma list of csv,json,svg")
    g.add_argument("--jobs", type=int)
    g.add_argument("--checks", help="comma list of verify checks")
    g.add_argument("--config", help="key = value file; flags take precedence")
    g.add_argument("--inject-fault", dest="inject_fault", choices=("weight", "nonconverge"),
                   help="test hook: 'weight' scales one quadrature weight (verify), "
                        "'nonconverge' forces a stalled solve")
    g.add_argument("--log-level", dest="log_level", default="WARNING")

    parser = argparse.ArgumentParser(prog="hypckn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constant", parents=[common], help="CKN constant upper estimates")
    sub.add_parser("solve", parents=[common], help="positive radial ground state")
    sub.add_parser("verify", parents=[common], help="invariant suite")
    sub.add_parser("pohozaev", parents=[common], help="identity check or concentration probe")
    sp = sub.add_parser("sweep", parents=[common], help="Cartesian parameter sweep")
    sp.add_argument("--range", action="append", help="name=start:stop:count (repeatable)")
    sp.add_argument("--cell", choices=("constant", "solve"))
    return parser


def main(argv=None):
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(ns.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = merge_config(ns.command, ns)
    except (OSError, ValueError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_INVALID
    os.makedirs(cfg["out"], exist_ok=True)
    return COMMANDS[ns.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
