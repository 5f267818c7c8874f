"""Command line front end.

Exit codes: 0 when every check passes or the solve converged, 1 on usage or
configuration errors (including violated hypotheses on the inputs), 2 when a
check fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .coefficients import (TypeChangeCoefficient, cc_example_multiplier, cc_largeness,
                           check_energy_coercivity, classify, coefficient_from_dict,
                           dilation_multiplier, lemma1_coefficients, validate_sigma)
from .errors import (ConvergenceError, GeometryError, HypothesisError,
                     SingularMultiplierError, UniquenessFailure)
from .friedrichs import (MultiplierMatrix, apply_multiplier, build_cold_plasma_system,
                         check_symmetric_positive, verify_theorem3)
from .geometry import (audit_arc_classes, build_cc_example_domain, domain_from_config)
from .grids import make_grid
from .manufactured import Bump, random_bumps, zero_function

PASS, CONFIG_ERROR, CHECK_FAIL = 0, 1, 2

CC_COMMANDS = ("classify", "check-spd", "check-admissible", "example-cc")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(CONFIG_ERROR, f"{self.prog}: error: {message}\n")


def _number(s):
    """Float or fraction such as 1/64."""
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from exc


def _numbers(s):
    return [_number(t) for t in s.split(",") if t.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--domain", help="builtin name or domain JSON path")
    common.add_argument("--K", dest="K", choices=["parabolic", "zero-sigma", "constant"],
                        help="type-change coefficient")
    for name in ("M", "eps", "delta0", "delta1", "m", "mu", "delta", "kappa1", "kappa2", "h"):
        common.add_argument(f"--{name}", type=_number)
    common.add_argument("--variant", choices=["standard", "pf"])

    p = _Parser(prog="coldplasma", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("classify", parents=[common], help="arc classes and sigma conditions")
    s = sub.add_parser("check-spd", parents=[common], help="symmetric positivity (Q1), (Q2)")
    s.add_argument("--n-samples", type=int)
    s = sub.add_parser("check-admissible", parents=[common], help="full hypothesis audit")
    s.add_argument("--n-samples", type=int)
    s.add_argument("--n-quad", type=int)
    s = sub.add_parser("transport", parents=[common], help="solve H v = u")
    s.add_argument("--source", help="x,y,value CSV on the grid nodes")
    s = sub.add_parser("solve", parents=[common], help="closed Dirichlet problem")
    s.add_argument("--forcing", help="x,y,value CSV of nodal f")
    s.add_argument("--test-refinement", type=int)
    s = sub.add_parser("lemma1", parents=[common], help="a priori constant estimate")
    s.add_argument("--mode", choices=["random", "eig"])
    s.add_argument("--n-trials", type=int)
    s.add_argument("--test-refinement", type=int)
    s = sub.add_parser("poincare", parents=[common], help="weighted Poincare constant")
    s = sub.add_parser("energy-identity", parents=[common], help="energy identity defect")
    s.add_argument("--n-seeds", type=int)
    s = sub.add_parser("convergence", parents=[common], help="manufactured-solution study")
    s.add_argument("--hs", type=_numbers, help="comma-separated mesh sizes")
    s.add_argument("--test-refinement", type=int)
    sub.add_parser("example-cc", parents=[common], help="write the explicit example domain")
    return p


# ---------------------------------------------------------------------------
# configuration

def resolve_config(args):
    """Merge the JSON config with explicit flags (flags win)."""
    cfg = {}
    if args.config:
        try:
            cfg = io.read_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    cfg = dict(cfg)
    cc = args.command in CC_COMMANDS
    dom = dict(cfg.get("domain", {}))
    if args.domain:
        dom = {"path": args.domain} if args.domain.endswith(".json") else {"builtin": args.domain}
    if not dom:
        dom = {"builtin": "cc-example" if cc else
               ("unit-square" if args.command == "poincare" else "half-disk")}
    mult = dict(cfg.get("multiplier", {"kind": "cc-example" if cc else "dilation"}))
    for k in ("M", "eps", "delta0", "delta1"):
        v = getattr(args, k)
        if v is not None:
            if dom.get("builtin") == "cc-example":
                dom[k] = v
            if k in ("M", "eps"):
                mult[k] = v
    if dom.get("builtin") == "cc-example" and mult.get("kind") == "cc-example":
        for k in ("M", "eps"):
            if k in dom and k not in mult:
                mult[k] = dom[k]
    for k in ("m", "mu", "delta"):
        v = getattr(args, k)
        if v is not None:
            mult[k] = v
    coef = dict(cfg.get("coefficient", {"form": "zero-sigma" if cc else "parabolic"}))
    if args.K:
        coef = {"form": args.K}
    cfg.update(domain=dom, multiplier=mult, coefficient=coef)
    for k in ("kappa1", "kappa2", "h", "seed", "variant"):
        v = getattr(args, k)
        if v is not None:
            cfg[k] = v
    for k in ("n_samples", "n_quad", "source", "forcing", "test_refinement", "mode",
              "n_trials", "n_seeds", "hs"):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    cfg.setdefault("kappa1", 1.0)
    cfg.setdefault("kappa2", 0.0)
    cfg.setdefault("seed", 0)
    cfg.setdefault("variant", "standard")
    return cfg


def _tc(cfg):
    return coefficient_from_dict(cfg["coefficient"])


def _domain(cfg, tc):
    try:
        return domain_from_config(cfg["domain"], tc)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot build domain: {exc}") from exc


def _multiplier(cfg):
    d = cfg["multiplier"]
    if d.get("kind", "dilation") == "dilation":
        return dilation_multiplier(float(d.get("m", 4.0)), float(d.get("mu", 1.0)),
                                   None if d.get("delta") is None else float(d["delta"]))
    if d["kind"] == "cc-example":
        return cc_example_multiplier(float(d.get("M", 10.0)), float(d.get("eps", 0.1)))
    raise ConfigError(f"unknown multiplier kind {d['kind']!r}")


def _bump(d):
    return Bump(tuple(float(v) for v in d.get("center", (0.5, 0.1))),
                float(d.get("radius", 0.2)), float(d.get("amp", 1.0)))


# ---------------------------------------------------------------------------
# subcommands; each returns (report dict, passed)

def cmd_classify(cfg, out):
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    arcs = audit_arc_classes(dom, tc)
    rep = {"arc_classes": arcs}
    ok = arcs.ok
    if isinstance(tc, TypeChangeCoefficient):
        sig = validate_sigma(tc)
        rep["sigma"] = sig
        ok = ok and sig.ok
    pts = dom.sample_interior(int(cfg.get("n_samples", 10000)), cfg["seed"])
    t = classify(tc, pts[:, 0], pts[:, 1])
    rep["interior_samples"] = {"elliptic": int(np.sum(t > 0)), "hyperbolic": int(np.sum(t < 0)),
                               "sonic": int(np.sum(t == 0))}
    rep["passed"] = bool(ok)
    return rep, ok


def cmd_check_spd(cfg, out):
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    mf = _multiplier(cfg)
    sign = "minus" if cfg["variant"] == "standard" else "plus"
    sys_ = build_cold_plasma_system(tc, cfg["kappa1"], cfg["kappa2"], cfg["variant"])
    pts = dom.sample_interior(int(cfg.get("n_samples", 10000)), cfg["seed"])
    try:
        msys = apply_multiplier(MultiplierMatrix(mf, tc, sign), sys_, pts)
    except SingularMultiplierError as exc:
        loc = np.asarray(exc.points, float)[:1].tolist()
        rep = {"passed": False, "failed": ["(Q0)"],
               "conditions": [{"label": "(Q0)", "passed": False, "location": loc,
                               "detail": str(exc)}]}
        return rep, False
    spd = check_symmetric_positive(msys, pts)
    rep = spd.to_dict()
    if mf.kind == "cc-example":
        rep["largeness"] = cc_largeness(mf, dom.bbox)
    return rep, spd.ok


def cmd_check_admissible(cfg, out):
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    mf = _multiplier(cfg)
    rep = verify_theorem3(dom, tc, cfg["kappa1"], cfg["kappa2"], mf,
                          n_quad=int(cfg.get("n_quad", 64)),
                          n_interior=int(cfg.get("n_samples", 10000)), seed=cfg["seed"],
                          variant=cfg["variant"])
    return rep.to_dict(), rep.ok


def cmd_transport(cfg, out):
    from .transport import TransportProblem, solve_transport, transport_residual
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    mf = _multiplier(cfg)
    h = float(cfg.get("h", 1 / 64))
    grid = make_grid(dom, h)
    src = cfg.get("source", {"type": "bump"})
    if isinstance(src, str):
        src = {"csv": src}
    if "csv" in src:
        source = io.field_from_rows(grid, io.read_rows(src["csv"]))
    else:
        source = _bump(src)
    tp = TransportProblem(mf, source, dom)
    sol = solve_transport(tp, grid)
    res = transport_residual(tp, sol.field)
    io.write_field(Path(out) / "transport_v.csv", sol.field)
    st = sol.status
    ok = bool(np.all(st != 1))
    rep = {"passed": ok, "residual_L2_relative": res, "h": h, "n_nodes": int(len(st)),
           "exited": int(np.sum(st == 0)), "time_capped": int(np.sum(st == 1)),
           "max_abs_v": float(np.max(np.abs(sol.values))) if len(st) else 0.0,
           "multiplier": mf.to_dict()}
    return rep, ok


def _forcing(cfg, dp, tc):
    from .solver import NodalForcing
    fd = cfg.get("forcing", {"type": "bump"})
    if isinstance(fd, str):
        fd = {"csv": fd}
    if "csv" in fd:
        fld = io.field_from_rows(dp.grid, io.read_rows(fd["csv"]))
        return NodalForcing(dp.grid, fld.values), None
    kind = fd.get("type", "bump")
    if kind == "zero":
        return zero_function, zero_function
    if kind == "bump":
        b = _bump(fd)
        return b.forcing(tc), b
    raise ConfigError(f"unknown forcing type {kind!r}")


def cmd_solve(cfg, out):
    from . import solver
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    h = float(cfg.get("h", 1 / 32))
    dp = solver.assemble(dom, tc, h, int(cfg.get("test_refinement", 2)))
    f, exact = _forcing(cfg, dp, tc)
    res = solver.solve_closed_dirichlet(dp, f)
    io.write_field(Path(out) / "solution.csv", res.field)
    ok = res.optimality < 1e-9
    rep = {"passed": bool(ok), **res.to_dict(), "norms": solver.norms(dp, u=res.u),
           "mesh": {"h": h, "n_dofs": dp.n, "n_test_dofs": dp.m,
                    "n_cells": int(dp.mesh.cells.sum()), "nx": dp.mesh.nx, "ny": dp.mesh.ny,
                    "test_refinement": dp.test_refinement}}
    if exact is not None:
        rep["error_L2K"] = solver.weighted_error(dp, res.u, exact)
    return rep, ok


def cmd_lemma1(cfg, out):
    from . import solver
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    d = cfg["multiplier"]
    coeffs = lemma1_coefficients(float(d.get("m", 4.0)), float(d.get("mu", 1.0)),
                                 None if d.get("delta") is None else float(d["delta"]))
    h = float(cfg.get("h", 1 / 32))
    dp = solver.assemble(dom, tc, h, int(cfg.get("test_refinement", 2)))
    mode = cfg.get("mode", "eig")
    rep = {"h": h, "n_dofs": dp.n, "mode": mode}
    ok = True
    try:
        est = solver.estimate_lemma1_constant(dp, int(cfg.get("n_trials", 20)), cfg["seed"],
                                              mode=mode)
        rep.update({k: v for k, v in est.items() if k != "argmax"})
    except UniquenessFailure as exc:
        rep["uniqueness_failure"] = str(exc)
        ok = False
    X, Y = dp.nodes()
    pts = np.stack([X, Y], 1)
    pts = pts[pts[:, 0] >= 0]
    if len(pts):
        coer = check_energy_coercivity(coeffs, tc, pts)
        rep["coercivity"] = coer
        ok = ok and coer.ok
    rep["energy_coefficients"] = {"m": coeffs.m, "mu": coeffs.mu, "delta": coeffs.delta,
                                  "M": coeffs.M_const, "gamma": coeffs.gamma_e}
    rep["passed"] = bool(ok)
    return rep, ok


def cmd_poincare(cfg, out):
    from . import solver
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    h = float(cfg.get("h", 1 / 64))
    dp = solver.assemble(dom, tc, h, 1)
    est = solver.estimate_poincare_constant(dp)
    return {"passed": True, "h": h, "n_dofs": dp.n, **est}, True


def cmd_energy_identity(cfg, out):
    from .transport import energy_identity_terms
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    d = cfg["multiplier"]
    coeffs = lemma1_coefficients(float(d.get("m", 4.0)), float(d.get("mu", 1.0)),
                                 None if d.get("delta") is None else float(d["delta"]))
    h = float(cfg.get("h", 1 / 64))
    grid = make_grid(dom, h)
    rows = []
    for k in range(int(cfg.get("n_seeds", 5))):
        seed = cfg["seed"] + k
        t = energy_identity_terms(random_bumps(dom, seed), coeffs, dom, grid, tc)
        rows.append({"seed": seed, **t})
    ok = all(r["relative_defect"] < 0.05 and r["min_boundary_integrand"] >= -1e-8 for r in rows)
    return {"passed": bool(ok), "h": h, "samples": rows}, ok


def cmd_convergence(cfg, out):
    from . import solver
    tc = _tc(cfg)
    dom = _domain(cfg, tc)
    hs = cfg.get("hs", [1 / 16, 1 / 32, 1 / 64])
    fd = cfg.get("forcing", {"type": "bump"})
    u_star = _bump(fd) if fd.get("type", "bump") == "bump" else zero_function
    rows = solver.convergence_study(dom, tc, u_star, hs, int(cfg.get("test_refinement", 2)))
    errs = [r["error_L2K"] for r in rows]
    ok = all(b < a for a, b in zip(errs[:-1], errs[1:])) or max(errs) == 0
    return {"passed": bool(ok), "rows": rows}, ok


def cmd_example_cc(cfg, out):
    d = cfg["domain"]
    if d.get("builtin", "cc-example") != "cc-example":
        raise ConfigError("example-cc builds the cc-example domain only")
    keys = ("M", "eps", "delta0", "delta1", "blend_x", "blend_tangent")
    dom = build_cc_example_domain(**{k: float(d[k]) for k in keys if k in d})
    io.write_json(Path(out) / "example_cc_domain.json", dom.to_dict())
    io.write_rows(Path(out) / "example_cc_polygon.csv",
                  [r[:3] for r in dom.polygon_rows()], header=("x", "y", "arc_id"))
    rep = {"passed": True, "signed_area": dom.signed_area, "bbox": list(dom.bbox),
           "arcs": [{"label": a.label, "class": a.tag, "kind": a.kind} for a in dom.arcs]}
    return rep, True


COMMANDS = {
    "classify": cmd_classify, "check-spd": cmd_check_spd,
    "check-admissible": cmd_check_admissible, "transport": cmd_transport,
    "solve": cmd_solve, "lemma1": cmd_lemma1, "poincare": cmd_poincare,
    "energy-identity": cmd_energy_identity, "convergence": cmd_convergence,
    "example-cc": cmd_example_cc,
}


def run(args):
    cfg = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rep, ok = COMMANDS[args.command](cfg, out)
    name = args.command.replace("-", "_") + ".json"
    io.write_json(out / name, rep)
    failed = rep.get("failed") if isinstance(rep, dict) else None
    msg = "passed" if ok else "FAILED" + (f": {', '.join(failed)}" if failed else "")
    print(f"{args.command}: {msg} ({out / name})")
    return PASS if ok else CHECK_FAIL


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except HypothesisError as exc:
        cond = f" [{exc.condition}]" if exc.condition else ""
        print(f"coldplasma: hypothesis violated{cond}: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (ConfigError, GeometryError, ValueError, OSError) as exc:
        print(f"coldplasma: configuration error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (ConvergenceError, UniquenessFailure) as exc:
        print(f"coldplasma: {exc}", file=sys.stderr)
        return CHECK_FAIL


if __name__ == "__main__":
    sys.exit(main())
