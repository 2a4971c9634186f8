"""Command line entry point: ``deltashock {solve,verify,fvm,figure,presets}``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from decimal import Decimal, getcontext
from pathlib import Path

import numpy as np

from .core import DeltaShockError, Shock, SolutionProfile, atom_mass_at
from .delta_solver import build_profile, threshold_report
from .fvm import Grid1D, default_grid, measure_spike, measurement_times, profile_speeds, run_riemann
from .scalar_riemann import oleinik_check, tangency_points
from .scenario import PRESETS, Scenario, ScenarioError, load_scenario, preset, serialize_scenario
from .verifier import (
    default_test_functions,
    mass_balance,
    self_similarity_check,
    weak_residual,
)

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
RH_TOL = 1e-12
STEP_DEFECT_TOL = 1e-12


def fmt(x: float) -> str:
    """17 significant digits, fixed width."""
    return f"{float(x): .16e}"


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


# --------------------------------------------------------------------------
# report builders (pure; the commands only add I/O)


def solve_report(sc: Scenario, profile: SolutionProfile) -> dict:
    waves = []
    for w in profile.u_fan.waves:
        if isinstance(w, Shock):
            waves.append({"type": "shock", "u_left": w.u_left, "u_right": w.u_right, "speed": w.speed})
        else:
            p = w.piece
            waves.append({"type": "rarefaction", "u_left": w.u_left, "u_right": w.u_right,
                          "xi_left": w.xi_left, "xi_right": w.xi_right, "flux_piece": [p.a, p.b, p.c]})
    return {
        "scenario": sc.name,
        "system": sc.system,
        "left": {"u": sc.uL, "v": sc.vL},
        "right": {"u": sc.uR, "v": sc.vR},
        "u_fan": {
            "waves": waves,
            "tangency_points": [{"u": tp.a, "slope": tp.slope, "endpoint": tp.endpoint}
                                for tp in tangency_points(profile.u_fan)],
        },
        "v_branches": [{"xi_lo": _num(b.xi_lo), "xi_hi": _num(b.xi_hi), "kind": b.kind.value, "value": b.value}
                       for b in profile.v_branches],
        "atoms": [{"speed": a.speed, "rate": a.rate, "class": str(a.classification),
                   "left_trace": {"u": a.left_trace.u, "v": a.left_trace.v},
                   "right_trace": {"u": a.right_trace.u, "v": a.right_trace.v}}
                  for a in profile.atoms],
        "thresholds": [{"sigma": r.sigma, "lambda_left": r.lambda_left, "lambda_right": r.lambda_right,
                        "rarefaction_before": r.rarefaction_before, "rarefaction_after": r.rarefaction_after,
                        "masked": r.masked}
                       for r in threshold_report(profile, sc.tolerances.classify)],
    }


def sample_positions(profile: SolutionProfile, t: float, samples: int) -> np.ndarray:
    reach = max([abs(s) for s in profile_speeds(profile)] + [1.0])
    half = math.ceil(1.5 * reach * t + 1.0)
    x = np.round(np.linspace(-half, half, samples), 12)
    return np.unique(np.concatenate([x, [s * t for s in profile.breakpoints()]]))


def profile_table(profile: SolutionProfile, t: float, samples: int) -> str:
    lines = [f"# t = {fmt(t)}", "# x u v"]
    for x in sample_positions(profile, t, samples):
        u, v = profile.at(float(x), t)
        lines.append(f"{fmt(x)} {fmt(u)} {fmt(v)}")
    return "\n".join(lines) + "\n"


def atom_table(profile: SolutionProfile, t: float) -> str:
    lines = [f"# t = {fmt(t)}", "# x mass speed rate"]
    for a in profile.atoms:
        lines.append(f"{fmt(a.speed * t)} {fmt(atom_mass_at(a, t))} {fmt(a.speed)} {fmt(a.rate)}")
    return "\n".join(lines) + "\n"


class Check:
    def __init__(self, name: str, ok: bool | None, detail: str):
        self.name, self.ok, self.detail = name, ok, detail

    def line(self) -> str:
        status = "SKIP" if self.ok is None else ("PASS" if self.ok else "FAIL")
        return f"{status} {self.name}: {self.detail}"


def verify_checks(sc: Scenario, profile: SolutionProfile) -> list[Check]:
    tol = sc.tolerances
    t = sc.time
    dt = 0.25 * t
    checks: list[Check] = []
    reach = max([abs(s) for s in profile.breakpoints()] + [1.0])
    half = math.ceil(2.0 * reach * (t + dt) + 1.0)
    a, b = -float(half), float(half)

    bal = mass_balance(profile, a, b, t, dt)
    checks.append(Check("mass-balance", bal.residual < tol.mass_balance,
                        f"[{a:g}, {b:g}] t={t:g} residual={bal.residual:.3e} < {tol.mass_balance:g}"))
    for i, atom in enumerate(profile.atoms):
        eps = 0.1
        pert = mass_balance(profile.replace_atom(i, rate=atom.rate + eps), a, b, t, dt).residual
        ok = abs((pert - bal.residual) - eps) <= 1e-10
        checks.append(Check(f"sensitivity[atom {i}]", ok,
                            f"rate+{eps:g} gives residual={pert:.12f} (expected {eps:g} +- 1e-10)"))

    tests = default_test_functions(profile)
    ru, rv = weak_residual(profile, tests, tol.weak_quadrature)
    checks.append(Check("weak-residual-u", ru < tol.weak, f"n={tol.weak_quadrature} residual={ru:.3e} < {tol.weak:g}"))
    checks.append(Check("weak-residual-v", rv < tol.weak, f"n={tol.weak_quadrature} residual={rv:.3e} < {tol.weak:g}"))
    for i, atom in enumerate(profile.atoms):
        if abs(atom.rate) <= tol.atom_deletion:
            checks.append(Check(f"atom-deletion[{i}]", None,
                                f"rate={atom.rate:.3e} is below the detection level {tol.atom_deletion:g}"))
            continue
        _, rv_del = weak_residual(profile.drop_atom(i), tests, tol.weak_quadrature)
        checks.append(Check(f"atom-deletion[{i}]", rv_del > tol.atom_deletion,
                            f"residual without atom={rv_del:.3e} > {tol.atom_deletion:g}"))

    ss = self_similarity_check(profile, 200, sc.seed)
    checks.append(Check("self-similarity", ss.max_deviation == 0.0, f"max deviation={ss.max_deviation:.3e}"))

    f = profile.system.u_flux
    for i, s in enumerate(profile.u_fan.shocks):
        defect = abs(s.speed * (s.u_right - s.u_left) - (float(f(s.u_right)) - float(f(s.u_left))))
        scale = max(1.0, abs(s.u_left), abs(s.u_right)) ** 2
        checks.append(Check(f"rankine-hugoniot[{i}]", defect <= RH_TOL * scale, f"defect={defect:.3e}"))
    ole = oleinik_check(f, profile.u_fan)
    checks.append(Check("oleinik", ole.ok, ole.message or "chord condition holds"))
    return checks


def fvm_report(sc: Scenario, profile: SolutionProfile, cells: int | None = None) -> tuple[dict, bool]:
    fv = sc.fvm
    tol = sc.tolerances

    def grid_for(n):
        if fv.domain is not None:
            g = Grid1D(fv.domain[0], fv.domain[1], n, fv.cfl, fv.end_time)
            g.require_contains(profile_speeds(profile))
            return g
        return default_grid(profile, n, fv.cfl, fv.end_time)

    def one_run(n):
        grid = grid_for(n)
        run = run_riemann(profile.system, profile.left, profile.right, grid, measurement_times(fv.end_time))
        rows = []
        for i, atom in enumerate(profile.atoms):
            row = {"atom": i, "speed": atom.speed, "rate": atom.rate}
            allowed = max(tol.spike_rel * abs(atom.rate), tol.spike_abs)
            passed = True
            for mode in ("exact", "plateau"):
                m = measure_spike(run.v, atom.speed, grid, profile, mode)
                err = abs(m.fitted_rate - atom.rate)
                row[mode] = {"fitted_rate": m.fitted_rate, "abs_error": err,
                             "rel_error": err / abs(atom.rate) if atom.rate else None,
                             "fit_residual": m.fit_residual, "half_width": m.half_width}
                passed &= err <= allowed
            row["allowed_error"] = allowed
            row["pass"] = bool(passed)
            rows.append(row)
        cons = {"u_max_step_defect": run.u.max_step_defect, "v_max_step_defect": run.v.max_step_defect,
                "pass": bool(max(run.u.max_step_defect, run.v.max_step_defect) <= STEP_DEFECT_TOL)}
        return grid, run, rows, cons

    n_main = cells if cells is not None else fv.cells
    grid, run, rows, cons = one_run(n_main)
    ok = cons["pass"] and all(r["pass"] for r in rows)
    report = {"scenario": sc.name, "cells": grid.cells, "domain": [grid.a, grid.b], "cfl": grid.cfl,
              "end_time": grid.end_time, "steps": run.u.steps, "atoms": rows, "conservation": cons}
    table = []
    for n in fv.grids:
        _, _, rows_n, cons_n = one_run(n)
        table.append({"cells": n, "errors": [r["exact"]["abs_error"] for r in rows_n],
                      "conservation_pass": cons_n["pass"]})
    if table:
        report["convergence"] = table
    return report, ok


# --------------------------------------------------------------------------
# commands


def _scenario(args) -> Scenario:
    if args.preset and args.scenario:
        raise ScenarioError("give either --scenario or --preset, not both")
    if args.preset:
        sc = preset(args.preset)
    elif args.scenario:
        sc = load_scenario(args.scenario)
    else:
        raise ScenarioError("a scenario is required (--scenario PATH or --preset NAME)")
    if getattr(args, "time", None) is not None:
        if args.time <= 0:
            raise ScenarioError("--time must be positive")
        sc = replace(sc, time=args.time)
    if getattr(args, "cells", None) is not None:
        sc = replace(sc, fvm=replace(sc.fvm, cells=args.cells))
    return sc


def _write(out: Path | None, name: str, text: str):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def cmd_solve(args) -> int:
    sc = _scenario(args)
    profile = build_profile(sc.system_spec(), sc.left, sc.right)
    report = solve_report(sc, profile)
    report["time"] = sc.time
    out = Path(args.out) if args.out else None
    _write(out, "report.json", _dumps(report))
    _write(out, "profile.dat", profile_table(profile, sc.time, sc.samples))
    _write(out, "atoms.dat", atom_table(profile, sc.time))
    print(f"scenario {sc.name} ({sc.system})")
    for w in report["u_fan"]["waves"]:
        if w["type"] == "shock":
            print(f"  u-shock {fmt(w['u_left'])} -> {fmt(w['u_right'])} speed {fmt(w['speed'])}")
        else:
            print(f"  u-rarefaction {fmt(w['u_left'])} -> {fmt(w['u_right'])} "
                  f"xi in [{fmt(w['xi_left'])}, {fmt(w['xi_right'])}]")
    for a in profile.atoms:
        print(f"  atom speed {fmt(a.speed)} rate {fmt(a.rate)} {a.classification}")
    if not profile.atoms:
        print("  no atoms")
    return EXIT_OK


def cmd_verify(args) -> int:
    sc = _scenario(args)
    if args.tol is not None:
        sc = replace(sc, tolerances=replace(sc.tolerances, mass_balance=args.tol, weak=args.tol))
    profile = build_profile(sc.system_spec(), sc.left, sc.right)
    checks = verify_checks(sc, profile)
    text = "".join(c.line() + "\n" for c in checks)
    failed = any(c.ok is False for c in checks)
    text += ("FAIL" if failed else "PASS") + f" {sc.name}\n"
    _write(Path(args.out) if args.out else None, "verify.txt", text)
    sys.stdout.write(text)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_fvm(args) -> int:
    sc = _scenario(args)
    if args.tol is not None:
        sc = replace(sc, tolerances=replace(sc.tolerances, spike_rel=args.tol))
    profile = build_profile(sc.system_spec(), sc.left, sc.right)
    report, ok = fvm_report(sc, profile)
    out = Path(args.out) if args.out else None
    _write(out, "fvm.json", _dumps(report))
    print(f"scenario {sc.name}: N={report['cells']} domain={report['domain']} steps={report['steps']}")
    for r in report["atoms"]:
        print(f"  {'PASS' if r['pass'] else 'FAIL'} atom {r['atom']} speed {fmt(r['speed'])} "
              f"k' {fmt(r['rate'])} fitted(exact) {fmt(r['exact']['fitted_rate'])} "
              f"fitted(plateau) {fmt(r['plateau']['fitted_rate'])} allowed {r['allowed_error']:.4g}")
    c = report["conservation"]
    print(f"  {'PASS' if c['pass'] else 'FAIL'} conservation per step u {c['u_max_step_defect']:.3e} "
          f"v {c['v_max_step_defect']:.3e}")
    for row in report.get("convergence", []):
        print(f"  N={row['cells']:6d} " + " ".join(f"{e:.6e}" for e in row["errors"]))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_figure(args) -> int:
    sc = _scenario(args)
    profile = build_profile(sc.system_spec(), sc.left, sc.right)
    prof = profile_table(profile, sc.time, sc.samples)
    atoms = atom_table(profile, sc.time)
    out = Path(args.out) if args.out else None
    _write(out, "profile_xuv.dat", prof)
    _write(out, "atoms.dat", atoms)
    if out is None:
        sys.stdout.write(prof + "\n" + atoms)
    else:
        print(f"wrote {out / 'profile_xuv.dat'} and {out / 'atoms.dat'}")
    return EXIT_OK


def constants_text(digits: int = 30) -> str:
    getcontext().prec = digits + 10
    s2 = Decimal(2).sqrt()
    u_dw = (3 + s2) / 2
    q = Decimal(10) ** -digits
    rows = [
        ("doublewell-fig2 uL = (3+sqrt2)/2", u_dw),
        ("doublewell-fig2 uR = -(3+sqrt2)/2", -u_dw),
        ("doublewell-fig2 rate per atom = (3+sqrt2)/2 + 1", u_dw + 1),
        ("mod-1lax-fig1-center rate = 3/4", Decimal(3) / 4),
        ("mod-transitional-fig1-right rate = -3/8", Decimal(-3) / 8),
        ("mod-transitional-fig1-right classical middle v = (1-sqrt3)/4", (1 - Decimal(3).sqrt()) / 4),
    ]
    return "".join(f"{name}: {val.quantize(q)}\n" for name, val in rows)


def cmd_presets(args) -> int:
    if args.constants:
        sys.stdout.write(constants_text())
        return EXIT_OK
    if args.show:
        sys.stdout.write(serialize_scenario(preset(args.show)))
        return EXIT_OK
    if args.write:
        out = Path(args.write)
        out.mkdir(parents=True, exist_ok=True)
        for name, sc in PRESETS.items():
            (out / f"{name}.ini").write_text(serialize_scenario(sc))
        print(f"wrote {len(PRESETS)} scenarios to {out}")
        return EXIT_OK
    for name, sc in PRESETS.items():
        print(f"{name:30s} {sc.system:10s} ({sc.uL!r}, {sc.vL!r}) / ({sc.uR!r}, {sc.vR!r})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deltashock",
                                     description="Riemann solutions with delta shocks for weakly coupled systems")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, time=False, cells=False, tol=False):
        p.add_argument("--scenario", help="scenario file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="bundled scenario")
        p.add_argument("--out", help="output directory")
        if time:
            p.add_argument("--time", type=float, help="sample time (default from scenario)")
        if cells:
            p.add_argument("--cells", type=int, help="finite-volume cell count")
        if tol:
            p.add_argument("--tol", type=float, help="override the tolerance")

    scenario_args(sub.add_parser("solve", help="build the exact profile and write a report"), time=True)
    scenario_args(sub.add_parser("verify", help="run the analytic checks"), time=True, tol=True)
    scenario_args(sub.add_parser("fvm", help="finite-volume cross-check of the atom rates"), cells=True, tol=True)
    scenario_args(sub.add_parser("figure", help="write (x, u, v) samples and the atom table"), time=True)
    p = sub.add_parser("presets", help="list, show or write bundled scenarios")
    p.add_argument("--show", choices=sorted(PRESETS), help="print one preset in canonical form")
    p.add_argument("--write", metavar="DIR", help="write every preset as a scenario file")
    p.add_argument("--constants", action="store_true", help="print closed-form constants to 30 digits")
    return parser


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "fvm": cmd_fvm, "figure": cmd_figure, "presets": cmd_presets}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, DeltaShockError, ValueError) as exc:
        print(f"deltashock {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
