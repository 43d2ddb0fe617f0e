"""Command-line front end.

Usage::

    repulsive-mot COMMAND --input problem.json [--output report.json] [--csv data.csv]

Commands: solve, dual, map1d, recover-map, verify, sweep, continuity.

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 a certificate
check failed.  Failures print one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analysis
from .cost import LogCost, Truncation, cost_from_dict, pair_cost_matrix
from .dual import (DualPotential, canonicalize, certified_gap, extract_dual,
                   lipschitz_report)
from .errors import CertificateError, MOTError, ValidationError
from .maps import cyclic_map_1d, plan_from_cyclic_map, recover_map_n2
from .measure import DiscreteMeasure, check_small_concentration
from .primal import Coupling, solve_mot

COMMANDS = ("solve", "dual", "map1d", "recover-map", "verify", "sweep", "continuity")
EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_CERTIFICATE = 0, 1, 2, 3
THREADS_ENV = "REPULSIVE_MOT_THREADS"
BUDGET_ENV = "REPULSIVE_MOT_BUDGET"


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    csv: str | None = None
    N: int | None = None
    truncation: dict | None = None
    tol: float = 1e-9
    lipschitz_tol: float = 1e-6
    budget: int | None = None
    seed: int = 0
    workers: int = 1
    rule: str = "dantzig"
    radii: list[float] | None = None
    resolutions: list[int] | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.N is not None and self.N < 2:
            raise ValidationError("N must be at least 2")
        if not (self.tol > 0 and self.lipschitz_tol > 0):
            raise ValidationError("tolerances must be positive")
        if self.budget is not None and self.budget <= 0:
            raise ValidationError("budget must be positive")
        if self.workers < 1:
            raise ValidationError("workers must be positive")


# --- problem documents -----------------------------------------------------------

@dataclass
class Problem:
    rho: DiscreteMeasure | None
    f: object
    N: int
    trunc: Truncation
    doc: dict


def load_document(path: str | None) -> dict:
    try:
        if path is None or path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc}") from None
    except OSError as exc:
        raise ValidationError(f"cannot read input: {exc}") from None


def parse_problem(doc: dict, cfg: RunConfig, need_measure: bool = True) -> Problem:
    if not isinstance(doc, dict):
        raise ValidationError("problem document must be a JSON object")
    N = cfg.N if cfg.N is not None else doc.get("N")
    if N is None:
        raise ValidationError("N missing from problem and command line")
    if isinstance(N, bool) or not isinstance(N, int) or N < 2:
        raise ValidationError("N must be an integer >= 2")
    f = cost_from_dict(doc.get("cost", {"family": "log"}))
    trunc = Truncation.from_dict(cfg.truncation if cfg.truncation is not None
                                 else doc.get("truncation", {"kind": "exact"}))
    rho = None
    if need_measure:
        if "measure" not in doc:
            raise ValidationError("problem has no 'measure'")
        rho = DiscreteMeasure.from_dict(doc["measure"])
    return Problem(rho, f, N, trunc, doc)


def _solve_kw(cfg: RunConfig) -> dict:
    return {"budget": cfg.budget, "rule": cfg.rule, "tol": cfg.tol}


def _lp_kw(cfg: RunConfig) -> dict:
    """Solver options for analysis helpers whose own ``tol`` is a comparison tolerance."""
    return {"budget": cfg.budget, "rule": cfg.rule}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return x


def dumps(report: dict) -> str:
    """Canonical report text: sorted keys, shortest round-trip float repr."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


# --- commands ----------------------------------------------------------------------

def _solution_block(sol, u: DualPotential, rho, f, N, trunc, tol) -> dict:
    gap = certified_gap(u, sol.cost, rho, f, N, trunc, tol=tol)
    diag = sol.diagnostics()
    diag.pop("seconds")  # wall time would break byte-identical reports
    return {
        "cost": sol.cost,
        "dual_value": u.dual_value(rho.weights, N),
        "gap": gap,
        "coupling": sol.coupling.to_dict(),
        "potential": u.to_list(),
        "diagnostics": diag,
    }


def cmd_solve(cfg, prob):
    sol = solve_mot(prob.rho, prob.f, prob.N, prob.trunc, **_solve_kw(cfg))
    return _solution_block(sol, extract_dual(sol), prob.rho, prob.f, prob.N, prob.trunc, cfg.tol), EXIT_OK


def cmd_dual(cfg, prob):
    sol = solve_mot(prob.rho, prob.f, prob.N, prob.trunc, **_solve_kw(cfg))
    level = prob.trunc.value if prob.trunc.kind == "above" else None
    if prob.trunc.kind == "below":
        raise ValidationError("the dual command supports exact and above truncations")
    u0 = extract_dual(sol)
    u, history = canonicalize(u0, prob.f, prob.rho, prob.N, level)
    out = _solution_block(sol, u, prob.rho, prob.f, prob.N, prob.trunc, cfg.tol)
    out["canonicalization"] = {"history": history, "iterations": len(history),
                               "initial_dual_value": u0.dual_value(prob.rho.weights, prob.N)}
    if check_small_concentration(prob.rho, prob.N).condition_a_ok:
        beta = analysis.select_beta(prob.rho, prob.N)
        alpha = analysis.alpha_bound(prob.f, prob.N, beta)
        rep = lipschitz_report(u, prob.rho, prob.f, prob.N, alpha, cfg.lipschitz_tol)
        out["lipschitz"] = {"beta": beta, **rep.to_dict()}
    return out, EXIT_OK


def cmd_map1d(cfg, prob):
    T = cyclic_map_1d(prob.rho, prob.N)
    plan = plan_from_cyclic_map(T)
    P = pair_cost_matrix(prob.rho.points, prob.f, prob.trunc)
    out = {
        "map": [{"x": x, "T(x)": t, "branch": b} for x, t, b in T.rows()],
        "cyclic": T.is_cyclic(),
        "pushforward_error": T.pushforward_error(),
        "optimality_applies": T.exact,
        "plan_cost": plan.cost(P),
        "coupling": plan.to_dict(),
    }
    if cfg.extra.get("compare_lp", True):
        sol = solve_mot(prob.rho, prob.f, prob.N, prob.trunc, **_solve_kw(cfg))
        out["lp_cost"] = sol.cost
        out["cost_difference"] = abs(out["plan_cost"] - sol.cost)
    # optimality and cyclicity are only asserted for uniform weights with N | m
    failed = T.exact and (not out["cyclic"] or out.get("cost_difference", 0.0) > cfg.tol)
    return out, EXIT_CERTIFICATE if failed else EXIT_OK


def cmd_recover_map(cfg, prob):
    if prob.N != 2 or not isinstance(prob.f, LogCost):
        raise ValidationError("map recovery needs N = 2 and the log cost")
    sol = solve_mot(prob.rho, prob.f, 2, **_solve_kw(cfg))
    u, history = canonicalize(extract_dual(sol), prob.f, prob.rho, 2)
    M = recover_map_n2(u, prob.rho)
    out = {
        "cost": sol.cost,
        "potential": u.to_list(),
        "canonicalization_iterations": len(history),
        "map": [{"x": x, "T(x)": t} for x, t in M.rows()],
        "undefined_points": int((~M.defined).sum()),
        "spacing": M.spacing,
    }
    return out, EXIT_OK


def cmd_verify(cfg, prob):
    rho, f, N = prob.rho, prob.f, prob.N
    sol = solve_mot(rho, f, N, **_solve_kw(cfg))
    beta = analysis.select_beta(rho, N)
    cert = analysis.off_diagonal_certificate(rho, f, N, sol.coupling, sol.cost, beta)
    trunc = analysis.truncated_equality_check(rho, f, N, beta=beta, tol=cfg.tol, **_lp_kw(cfg))
    out = {
        "cost": sol.cost,
        "gap": certified_gap(extract_dual(sol), sol.cost, rho, f, N, tol=cfg.tol),
        "off_diagonal": cert.to_dict(),
        "truncated_equality": trunc.to_dict(),
    }
    ok = cert.passed and trunc.passed and abs(out["gap"]) <= cfg.tol
    out["passed"] = ok
    return out, EXIT_OK if ok else EXIT_CERTIFICATE


def _default_radii(rho):
    D = rho.diameter()
    return [D * k / 8 for k in range(1, 13)]


def cmd_sweep(cfg, prob):
    radii = cfg.radii if cfg.radii is not None else prob.doc.get("radii") or _default_radii(prob.rho)
    res = analysis.gamma_sweep(prob.rho, prob.f, prob.N, radii, tol=cfg.tol,
                               workers=cfg.workers, **_lp_kw(cfg))
    out = res.to_dict()
    return out, EXIT_OK if res.monotone and res.stabilized else EXIT_CERTIFICATE


def _discretizer(settings: dict, seed: int):
    law = settings.get("law", "uniform")
    if law == "uniform":
        a, b = map(float, settings.get("interval", [0.0, 1.0]))
        if not b > a:
            raise ValidationError("interval must satisfy a < b")
        if settings.get("scheme", "quantile") == "sample":
            rng = np.random.default_rng(seed)
            return lambda m: DiscreteMeasure(np.sort(rng.uniform(a, b, size=m)))
        return lambda m: analysis.quantile_discretization(lambda p: a + (b - a) * p, m)
    if law == "uniform_square":
        box = tuple(map(float, settings.get("box", [0.0, 1.0, 0.0, 1.0])))
        return lambda m: analysis.grid_discretization(lambda x, y: np.ones_like(x), box,
                                                      int(round(math.sqrt(m))))
    raise ValidationError(f"unknown law {law!r}")


def cmd_continuity(cfg, prob):
    settings = prob.doc.get("continuity", {})
    res = cfg.resolutions or settings.get("resolutions", [8, 16, 32, 64])
    ref = settings.get("reference")
    if ref is None and settings.get("law", "uniform") == "uniform" \
            and list(settings.get("interval", [0.0, 1.0])) == [0.0, 1.0]:
        ref = analysis.cyclic_continuum_cost(prob.f, prob.N)
    table = analysis.marginal_continuity_experiment(
        _discretizer(settings, cfg.seed), res, prob.f, prob.N, reference=ref, **_lp_kw(cfg))
    return table.to_dict(), EXIT_OK if table.cauchy_decreasing else EXIT_CERTIFICATE


HANDLERS = {
    "solve": cmd_solve, "dual": cmd_dual, "map1d": cmd_map1d, "recover-map": cmd_recover_map,
    "verify": cmd_verify, "sweep": cmd_sweep, "continuity": cmd_continuity,
}


# --- plot data ---------------------------------------------------------------------

def emit_plot_data(report: dict) -> str:
    """CSV text for a report; the header depends on the command."""
    cmd = report["config"]["command"]
    res = report.get("result", {})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    num = lambda v: "" if v is None else repr(float(v))  # noqa: E731
    if cmd == "sweep":
        w.writerow(["R", "optimum", "gap", "monotone", "equals_exact"])
        for row in res.get("rows", []):
            w.writerow([num(row["R"]), num(row["optimum"]), num(row["gap"]),
                        int(row["monotone"]), int(row["equals_exact"])])
    elif cmd == "continuity":
        w.writerow(["m", "optimum", "gap", "doubling_difference"])
        diffs = res.get("differences", [])
        for k, (m, v, g) in enumerate(zip(res.get("resolutions", []), res.get("optima", []),
                                          res.get("gaps", []))):
            w.writerow([m, num(v), num(g), num(diffs[k - 1]) if k else ""])
    elif cmd == "map1d":
        w.writerow(["x", "T(x)", "branch"])
        for row in res.get("map", []):
            w.writerow([num(row["x"]), num(row["T(x)"]), row["branch"]])
    elif cmd == "recover-map":
        rows = res.get("map", [])
        d = len(rows[0]["x"]) if rows else 1
        xs = ["x"] if d == 1 else [f"x{k}" for k in range(d)]
        ts = ["T(x)"] if d == 1 else [f"T{k}" for k in range(d)]
        w.writerow(xs + ts + ["defined"])
        for row in rows:
            t = row["T(x)"]
            w.writerow([num(v) for v in row["x"]]
                       + ([num(v) for v in t] if t is not None else [""] * d) + [int(t is not None)])
    else:
        coupling = res.get("coupling")
        if coupling is None:
            w.writerow(["key", "value"])
        else:
            w.writerow([f"i{k}" for k in range(coupling["N"])] + ["mass"])
            for e in coupling["entries"]:
                w.writerow(list(e["tuple"]) + [num(e["mass"])])
    return buf.getvalue()


def load_solution(report: dict, weights, tol: float = 1e-9) -> tuple[Coupling, DualPotential | None]:
    """Re-read a solve/dual report and re-check the coupling marginals and the potential."""
    res = report.get("result", report)
    gamma = Coupling.from_dict(res["coupling"])
    gamma.validate(weights, tol)
    pot = res.get("potential")
    return gamma, None if pot is None else DualPotential(np.asarray(pot, dtype=float))


# --- entry points ------------------------------------------------------------------

def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute one command; returns (exit code, report).  Errors come back as reports."""
    try:
        doc = load_document(cfg.input)
        prob = parse_problem(doc, cfg, need_measure=cfg.command != "continuity")
        result, code = HANDLERS[cfg.command](cfg, prob)
    except ValidationError as exc:
        return EXIT_VALIDATION, _error("validation", exc, EXIT_VALIDATION)
    except CertificateError as exc:
        return EXIT_CERTIFICATE, _error("certificate", exc, EXIT_CERTIFICATE)
    except MOTError as exc:
        return EXIT_SOLVER, _error("solver", exc, EXIT_SOLVER)
    resolved = asdict(cfg)
    resolved["N"] = prob.N
    resolved["cost"] = prob.f.to_dict()
    resolved["truncation"] = prob.trunc.to_dict()
    resolved["problem"] = doc
    return code, {"config": resolved, "result": result, "exit_code": code}


def _error(kind: str, exc: Exception, code: int) -> dict:
    return {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="repulsive-mot", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", "-i", help="problem JSON (default: stdin)")
    p.add_argument("--output", "-o", help="report JSON (default: stdout)")
    p.add_argument("--csv", help="write plot-ready CSV here")
    p.add_argument("--N", type=int)
    p.add_argument("--truncation", help='JSON, e.g. {"kind": "below", "R": 1.0}')
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--lipschitz-tol", type=float, default=1e-6)
    p.add_argument("--budget", type=int, help=f"max m^N (env {BUDGET_ENV})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, help=f"parallel sweep solves (env {THREADS_ENV})")
    p.add_argument("--rule", choices=("dantzig", "bland"), default="dantzig")
    p.add_argument("--radii", type=float, nargs="*")
    p.add_argument("--resolutions", type=int, nargs="*")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    trunc = None
    if ns.truncation:
        try:
            trunc = json.loads(ns.truncation)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed --truncation: {exc}") from None
    workers = ns.workers if ns.workers is not None else int(os.environ.get(THREADS_ENV, "1"))
    return RunConfig(command=ns.command, input=ns.input, output=ns.output, csv=ns.csv, N=ns.N,
                     truncation=trunc, tol=ns.tol, lipschitz_tol=ns.lipschitz_tol,
                     budget=ns.budget, seed=ns.seed, workers=workers, rule=ns.rule,
                     radii=ns.radii, resolutions=ns.resolutions)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ValidationError as exc:
        sys.stderr.write(dumps(_error("validation", exc, EXIT_VALIDATION)))
        return EXIT_VALIDATION
    code, report = run(cfg)
    if "error" in report:
        sys.stderr.write(dumps(report))
        return code
    text = dumps(report)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.csv:
        with open(cfg.csv, "w") as fh:
            fh.write(emit_plot_data(json.loads(text)))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
