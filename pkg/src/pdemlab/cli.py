"""``pdemlab <subcommand> --scenario <path> [--assert] [--out <dir>]``.

Exit codes: 0 success, 2 invalid scenario, 3 tolerance failure under --assert.
"""

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import canonical as qct
from .algebra import verify_generator_table
from .errors import ConfigInvalid, PdemError, StepTooLarge
from .evolution import (
    PropagationConfig,
    evolve,
    hamiltonian_source,
    interior_eigenstates,
    lr_diagnostic,
    write_trajectory_csv,
)
from .invariant import (
    ClosedFormSolution,
    CoefficientTrajectory,
    assemble_invariant,
    fd_ode_residual,
    integrate_coefficients,
    invariance_residual,
)
from .model import gaussian, generator_matrices, norm, write_state_csv
from .scenario import load

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE = 0, 2, 3


@dataclass
class Outcome:
    artifacts: list = field(default_factory=list)
    checks: list = field(default_factory=list)  # (name, ok, detail)

    def check(self, name, ok, detail):
        self.checks.append((name, bool(ok), detail))


# --- deterministic, atomic output -----------------------------------------------------

def _atomic(path, write):
    """Run ``write(tmp_path)`` and move the result over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(path, obj):
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def write(tmp):
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    _atomic(path, write)


def _dump_text(path, text):
    def write(tmp):
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    _atomic(path, write)


def _cell(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _rows_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    _dump_text(path, "\n".join(lines) + "\n")


# --- subcommands ------------------------------------------------------------------------

def cmd_algebra_check(sc, out):
    res = Outcome()
    report = verify_generator_table()
    data = report.to_dict()
    path = os.path.join(out, "algebra.json")
    _dump_json(path, data)
    lines = [f"{r['lhs']} = {r['computed']}  in_span={r['in_span']} matches_published={r['matches_published']}" for r in data["rows"]]
    lines.append("")
    lines.append("coefficient ODEs from the computed table:")
    lines += data["coefficient_odes"]
    lines.append(f"odes_match_published={data['odes_match_published']}")
    txt = os.path.join(out, "algebra.txt")
    _dump_text(txt, "\n".join(lines) + "\n")
    res.artifacts += [path, txt]
    rows = {r["generator"]: r for r in data["rows"]}
    for g in ("O2", "O3", "O6", "O7"):
        res.check(f"table_{g}", rows[g]["matches_published"], rows[g]["computed"])
    res.check("O1_out_of_span", not rows["O1"]["in_span"], "[H,O1] leaves the span")
    res.check("odes_regenerated", data["odes_match_published"], "computed table gives the published ODEs")
    res.check("O4_sign_reported", "computed_O4_O7_coefficient" in data, str(data.get("computed_O4_O7_coefficient")))
    return res


def _t_grid(sc):
    t0, t1 = sc.t_window
    n = int(round((t1 - t0) / sc.dt))
    return np.linspace(t0, t1, n + 1)


def cmd_invariant_solve(sc, out):
    res = Outcome()
    sol = ClosedFormSolution(sc.alpha, sc.beta, sc.constants)
    t = _t_grid(sc)
    try:
        traj = integrate_coefficients(sc.alpha, sc.beta, sol(t[0]), t)
    except StepTooLarge as exc:
        raise ConfigInvalid("invariant.dt", str(exc)) from exc
    closed = sol(t)
    exact = CoefficientTrajectory(sc.alpha, sc.beta, t, np.vstack([np.asarray(v, dtype=float) for v in closed.vector()]))
    err = float(np.max(np.abs(traj.values - exact.values)))
    samples = np.linspace(t[0], t[-1], 100)
    ode = fd_ode_residual(sc.alpha, sc.beta, sol, samples)
    p1 = os.path.join(out, "coefficients.csv")
    p2 = os.path.join(out, "closed_form.csv")
    p3 = os.path.join(out, "invariant_solve.json")
    _atomic(p1, traj.write_csv)
    _atomic(p2, exact.write_csv)
    _dump_json(p3, {"max_abs_error": err, "ode_residual": ode, "dt": sc.dt, "t_window": list(sc.t_window)})
    res.artifacts += [p1, p2, p3]
    res.check("rk4_matches_closed_form", err <= 1e-8, f"max |RK4 - closed| = {err:.3e} (<= 1e-8)")
    res.check("closed_form_solves_odes", ode <= 1e-10, f"max ODE residual = {ode:.3e} (<= 1e-10)")
    return res


def cmd_invariant_verify(sc, out):
    res = Outcome()
    sol = ClosedFormSolution(sc.alpha, sc.beta, sc.constants)
    drifting = sc.profile.time_dependent
    rows = []
    for n in (256, 512, 1024):
        grid = sc.grid.refined(n)
        psi = gaussian(grid, sc.state.x0, sc.state.sigma, sc.state.k0)
        r = invariance_residual(sol, sc.profile, sc.potential, grid, psi, sc.t_check, diagnostic=drifting)
        c = invariance_residual(
            sol, sc.profile, sc.potential, grid, psi, sc.t_check,
            perturb={"A6": sc.control_perturbation}, diagnostic=drifting,
        )
        rows.append((n, grid.h, r, c))
    ratio = rows[1][2] / rows[2][2]
    control = rows[2][3] / rows[2][2]
    p1 = os.path.join(out, "convergence.csv")
    p2 = os.path.join(out, "invariant_verify.json")
    _rows_csv(p1, ["N", "h", "residual", "control"], rows)
    _dump_json(p2, {
        "t": sc.t_check,
        "ratio_512_1024": ratio,
        "control_ratio_1024": control,
        "time_dependent_c0": drifting,
    })
    res.artifacts += [p1, p2]
    if drifting:
        # diagnostic run: the ansatz is not an invariant once c0 moves
        res.check("constant_c0", False, f"c0 depends on t; residual at N=1024 = {rows[2][2]:.3e}, ratio {ratio:.3f}")
    res.check("residual_order_h2", 3.2 <= ratio <= 4.8, f"residual(512)/residual(1024) = {ratio:.3f} (4 +- 20%)")
    res.check("negative_control", control >= 10, f"perturbed/baseline at N=1024 = {control:.2f} (>= 10)")
    return res


def _initial_state(sc, grid, source):
    st = sc.state
    if st.kind == "gaussian":
        return gaussian(grid, st.x0, st.sigma, st.k0), None
    gens = generator_matrices(sc.profile, grid, sc.t_window[0])
    I0 = assemble_invariant(source(sc.t_window[0]), gens)
    pairs = interior_eigenstates(I0, grid, count=st.index + 1)
    if len(pairs) <= st.index:
        raise ConfigInvalid("state.index", "not enough interior eigenstates of I(t0)")
    E, psi = pairs[st.index]
    return psi, E


def cmd_evolve(sc, out):
    res = Outcome()
    grid = sc.grid
    source = ClosedFormSolution(sc.alpha, sc.beta, sc.constants)
    lr_ok = not sc.profile.time_dependent and sc.constants.hermitian
    if sc.state.kind == "eigenstate" and not lr_ok:
        raise ConfigInvalid("state.kind", "eigenstates of I need a constant c0 and alpha3 = 0")
    psi0, E = _initial_state(sc, grid, source)
    cfg = PropagationConfig(sc.evolution_dt, sc.t_window[0], sc.evolution_t1, sc.sample_stride)
    H = hamiltonian_source(sc.profile, sc.potential, grid)
    traj = evolve(psi0, cfg, H)
    series = lr_diagnostic(traj, source, sc.profile, grid) if lr_ok else None
    norms = np.array([norm(grid, s) for s in traj.states])
    drift = float(np.max(np.abs(norms - norms[0])) / max(1.0, cfg.n_steps / 1000))
    p1 = os.path.join(out, "trajectory.csv")
    p2 = os.path.join(out, "evolve.json")
    _atomic(p1, lambda tmp: write_trajectory_csv(tmp, grid, traj, H, series))
    report = {
        "steps": cfg.n_steps,
        "dt": cfg.dt,
        "norm_drift_per_1000_steps": drift,
        "initial_eigenvalue": E,
        "lr_drift": series.drift() if series else None,
        "lr_relative_drift": series.relative_drift() if series else None,
    }
    snaps = os.path.join(out, "snapshots")
    os.makedirs(snaps, exist_ok=True)
    for k, (t, psi) in enumerate(zip(traj.t, traj.states)):
        path = os.path.join(snaps, f"state_{k:05d}.csv")
        _atomic(path, lambda tmp, psi=psi: write_state_csv(tmp, grid, psi))
        res.artifacts.append(path)
    if series is not None:
        control = lr_diagnostic(traj, source, sc.profile, grid, drop=("A6",))
        report["lr_drop_A6_drift"] = control.drift()
    _dump_json(p2, report)
    res.artifacts += [p1, p2]
    res.check("norm_conserved", drift <= 1e-10, f"norm drift per 1000 steps = {drift:.3e} (<= 1e-10)")
    if series is not None and sc.alpha == 0 and sc.beta == 0:
        d = series.drift()
        res.check("lr_control_constant", d <= 1e-10, f"alpha=beta=0 drift of <I> = {d:.3e} (<= 1e-10)")
    elif series is not None:
        rel = series.relative_drift()
        res.check("lr_relative_drift", rel <= 1e-3, f"max relative drift of <I> = {rel:.3e} (<= 1e-3)")
        ratio = control.drift() / max(series.drift(), 1e-300)
        res.check("lr_drop_A6_control", ratio >= 10, f"A6 -> 0 drift / baseline = {ratio:.3f} (>= 10)")
    return res


def _canonical_setup(sc):
    if sc.canonical is None:
        raise ConfigInvalid("canonical", "this subcommand needs a canonical section")
    can = sc.canonical
    gauges = qct.gauge_functions(sc.profile.c0, sc.potential.V0, can.constraints, can.mode, _t_grid(sc), sc.alpha)
    return can, gauges


def cmd_canonical_verify(sc, out):
    res = Outcome()
    can, gauges = _canonical_setup(sc)
    k = can.constraints
    t = gauges.t
    b_err = max(abs(gauges.b(s) + (sc.profile.c0(s) + k.mu1) / sc.alpha) for s in t)
    resid = [qct.constraint_residuals(gauges, sc.profile.c0, sc.potential.V0, k, s) for s in t]
    r1 = max(abs(r.r1) for r in resid)
    rmax = max(r.max() for r in resid)

    grid = sc.grid
    psi = gaussian(grid, sc.state.x0, sc.state.sigma, sc.state.k0)
    spec = qct.TransformedHamiltonianSpec.for_profile(k, sc.profile)
    K = qct.transformed_hamiltonian(spec, grid)
    residual, exact = qct.verify_transformation(
        psi, can.t_check, gauges, sc.profile, sc.potential, K, grid, can.dt, K_spec=spec
    )
    p1 = os.path.join(out, "gauges.csv")
    p2 = os.path.join(out, "verification.json")
    _atomic(p1, lambda tmp: qct.write_gauge_csv(tmp, gauges))
    _dump_text(p2, qct.verification_json(can.mode, grid.n, can.dt, residual, exact) + "\n")
    res.artifacts += [p1, p2]

    res.check("b_identity", b_err <= 1e-12, f"max |b + (c0 + mu1)/alpha| = {b_err:.3e} (<= 1e-12)")
    res.check("r1", r1 <= 1e-12, f"max |r1| = {r1:.3e} (<= 1e-12)")
    constant = not sc.profile.time_dependent
    if can.mode == "as-published" and constant:
        res.check("constraints_as_published", rmax <= 1e-8, f"max |r1,r2,r3| = {rmax:.3e} (<= 1e-8)")
    if exact:
        res.check("transformation_residual", residual <= 1e-4, f"K residual = {residual:.3e} (<= 1e-4)")
    if constant and can.mode == "gauge-exact":
        printed = qct.TransformedHamiltonianSpec(k.mu1, k.mu2, k.mu3, sc.alpha, True)
        control, _ = qct.verify_transformation(
            psi, can.t_check, gauges, sc.profile, sc.potential, qct.transformed_hamiltonian(printed, grid), grid, can.dt
        )
        p3 = os.path.join(out, "verification_printed_k.json")
        _dump_text(p3, qct.verification_json("printed-K", grid.n, can.dt, control, False) + "\n")
        res.artifacts.append(p3)
        res.check(
            "printed_k_control", control >= 10 * residual, f"printed-K residual = {control:.3e} vs {residual:.3e} (>= 10x)"
        )
    return res


def cmd_pullback(sc, out):
    res = Outcome()
    can, gauges = _canonical_setup(sc)
    if can.mode != "gauge-exact":
        raise ConfigInvalid("canonical.mode", "pullback needs gauge-exact mode")
    grid = sc.grid
    gk = qct.k_grid(grid, gauges)
    spec = qct.TransformedHamiltonianSpec.for_profile(can.constraints, sc.profile)
    K = qct.transformed_hamiltonian(spec, gk)
    pairs = interior_eigenstates(K, gk, count=can.states)
    samples = _t_grid(sc)[:: sc.sample_stride]
    rows, failed, worst = [], None, 0.0
    for idx, (E, phi) in enumerate(pairs):
        pb = qct.pullback_solution(phi, E, gauges, samples, grid, sc.profile, sc.potential, dt=can.dt)
        for t, r in zip(pb.t, pb.residuals):
            rows.append((idx, E, t, r))
            worst = max(worst, float(r))
        if pb.failed_at is not None and failed is None:
            failed = pb.failed_at
    p1 = os.path.join(out, "pullback.csv")
    p2 = os.path.join(out, "pullback.json")
    _rows_csv(p1, ["state", "E", "t", "residual"], rows)
    _dump_json(p2, {"N": grid.n, "dt": can.dt, "states": len(pairs), "max_residual": worst, "failed_at": failed})
    res.artifacts += [p1, p2]
    res.check("interior_states", len(pairs) == can.states, f"{len(pairs)} of {can.states} interior K eigenstates")
    res.check("support", failed is None, "no SupportTooWide" if failed is None else f"SupportTooWide first at t={failed:g}")
    detail = f"max residual = {worst:.3e} (<= 1e-4)" if rows else "no sampled times completed"
    res.check("schrodinger_residual", bool(rows) and worst <= 1e-4, detail)
    return res


COMMANDS = {
    "algebra-check": cmd_algebra_check,
    "invariant-solve": cmd_invariant_solve,
    "invariant-verify": cmd_invariant_verify,
    "evolve": cmd_evolve,
    "canonical-verify": cmd_canonical_verify,
    "pullback": cmd_pullback,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pdemlab", description="PDEM invariant and canonical-transformation laboratory")
    ap.add_argument("subcommand", choices=sorted(COMMANDS))
    ap.add_argument("--scenario", required=True, help="scenario JSON file")
    ap.add_argument("--assert", dest="strict", action="store_true", help="exit 3 when a tolerance check fails")
    ap.add_argument("--out", help="output directory (overrides outputs.directory)")
    return ap


def run(subcommand, scenario_path, strict=False, out=None, stream=None):
    stream = stream or sys.stdout
    try:
        sc = load(scenario_path)
        out = out or sc.directory or os.path.join("pdemlab-out", sc.name)
        os.makedirs(out, exist_ok=True)
        res = COMMANDS[subcommand](sc, out)
    except ConfigInvalid as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PdemError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in res.artifacts:
        print(f"wrote {path}", file=stream)
    for name, ok, detail in res.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=stream)
    failed = [name for name, ok, _ in res.checks if not ok]
    if strict and failed:
        print("tolerance failure: " + ", ".join(failed), file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.scenario, args.strict, args.out)


if __name__ == "__main__":
    sys.exit(main())
