"""Command line entry point.

    vkplate <command> --config <path> [--out <dir>] [--seed <n>]

Commands: solve (direct energy minimization), airy (stress-potential route
with in-plane recovery), limit-study (compressible sweep toward the
incompressible coefficients), verify (oracle suites), q2in (print the reduced
operator matrix).  Field artifacts use the documented CSV format; every run
writes a summary echoing the effective configuration and seed.  The exit
status is 0 exactly when the run converged or every check passed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import airy as airy_mod
from . import verification as ver
from .config import ConfigError, RunConfig, load_config, preset_force
from .grids import read_field, write_field
from .plate_energy import PlateProblem, energy
from .solver import Solution, SolverConfig, minimize, write_trace
from .tensor_forms import QuadForm3, reduced_operator
from .verification import Truncation, truncation_suite


def _material(cfg: RunConfig):
    if cfg.material_kind == "matrix-file":
        return QuadForm3.from_file(cfg.material_path)
    return QuadForm3.isotropic(cfg.lam, cfg.mu)


def _force(cfg: RunConfig, grid):
    if cfg.force_file:
        f, meta = read_field(cfg.force_file)
        if (meta["nx"], meta["ny"]) != (grid.nx, grid.ny):
            raise ConfigError(
                f"force file grid {meta['nx']}x{meta['ny']} does not match "
                f"configured grid {grid.nx}x{grid.ny}"
            )
        return f
    return preset_force(cfg.force_preset, grid, cfg.force_amplitude)


def _write_summary(path, cfg: RunConfig, seed, rows):
    with open(path, "w") as fh:
        fh.write("seed: %d\n" % seed)
        for key, val in cfg.echo:
            fh.write(f"config.{key}: {val}\n")
        for key, val in rows:
            fh.write(f"{key}: {val}\n")


def _cmd_solve(cfg, grid, out, seed):
    problem = PlateProblem(grid, _material(cfg), _force(cfg, grid), r33=cfg.r33)
    sc = SolverConfig(**cfg.solver)
    sol: Solution = minimize(problem, sc)
    write_field(os.path.join(out, "w.csv"), sol.w, grid)
    write_field(os.path.join(out, "v.csv"), sol.v, grid)
    write_field(os.path.join(out, "f.csv"), problem.force, grid)
    write_trace(os.path.join(out, "trace.csv"), sol.trace)
    rows = [
        ("converged", sol.converged),
        ("iterations", sol.iterations),
        ("energy.membrane", repr(sol.energy.membrane)),
        ("energy.bending", repr(sol.energy.bending)),
        ("energy.load", repr(sol.energy.load)),
        ("energy.total", repr(sol.energy.total)),
        ("residual.membrane", repr(sol.el_residual_membrane)),
        ("residual.bending", repr(sol.el_residual_bending)),
    ]
    if sol.message:
        rows.append(("message", sol.message))
    _write_summary(os.path.join(out, "summary.txt"), cfg, seed, rows)
    print(
        f"solve: converged={sol.converged} iterations={sol.iterations} "
        f"energy={sol.energy.total:.6e} residuals=({sol.el_residual_membrane:.3e}, "
        f"{sol.el_residual_bending:.3e})"
    )
    return 0 if sol.converged else 1


def _cmd_airy(cfg, grid, out, seed):
    f = _force(cfg, grid)
    fp = airy_mod.FixedPointConfig(**cfg.fixedpoint)
    state = airy_mod.solve_vk(cfg.mu, f, cfg.r33, grid, fp)
    w, misfit = airy_mod.recover_in_plane(state, grid)
    write_field(os.path.join(out, "v.csv"), state.v, grid)
    write_field(os.path.join(out, "phi1.csv"), state.phi1, grid)
    write_field(os.path.join(out, "w.csv"), w, grid)
    with open(os.path.join(out, "history.csv"), "w") as fh:
        fh.write("iter,residual_v,residual_phi,damping\n")
        for row in state.history:
            fh.write("%d,%.17g,%.17g,%.17g\n" % tuple(row))
    rows = [
        ("converged", state.converged),
        ("iterations", state.iterations),
        ("residual.v", repr(state.residual_v)),
        ("residual.phi", repr(state.residual_phi)),
        ("recovery.misfit", repr(misfit)),
    ]
    _write_summary(os.path.join(out, "summary.txt"), cfg, seed, rows)
    print(
        f"airy: converged={state.converged} iterations={state.iterations} "
        f"residuals=({state.residual_v:.3e}, {state.residual_phi:.3e}) "
        f"recovery_misfit={misfit:.3e}"
    )
    return 0 if state.converged else 1


def _cmd_limit_study(cfg, grid, out, seed):
    f = _force(cfg, grid)
    fp = airy_mod.FixedPointConfig(**cfg.fixedpoint)
    rows = airy_mod.limit_study(cfg.mu, f, cfg.r33, grid, cfg.nu_list, fp)
    path = os.path.join(out, "limit_study.csv")
    with open(path, "w") as fh:
        fh.write("nu,bending,membrane_half,v_err,phi_err,converged\n")
        for r in rows:
            fh.write(
                "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n"
                % (r.nu, r.bending, r.membrane_half, r.v_err, r.phi_err, r.converged)
            )
    ok = all(r.converged for r in rows)
    summary = [("rows", len(rows)), ("all_converged", ok)]
    for r in rows:
        summary.append(
            (f"nu_{r.nu:g}", f"B={r.bending:.6g} S/2={r.membrane_half:.6g} "
                             f"v_err={r.v_err:.6e} phi_err={r.phi_err:.6e}")
        )
    _write_summary(os.path.join(out, "summary.txt"), cfg, seed, summary)
    for r in rows:
        print(
            f"nu={r.nu:<8g} B={r.bending:<12.6g} S/2={r.membrane_half:<12.6g} "
            f"|v-v_inc|={r.v_err:.6e} |Phi-Phi_inc|={r.phi_err:.6e}"
        )
    return 0 if ok else 1


def _cmd_verify(cfg, grid, out, seed):
    rng = np.random.default_rng(seed)
    reports = []
    for omega in (1.0, 10.0, 1000.0):
        reports.append(truncation_suite(Truncation(omega)))
    iso = QuadForm3.isotropic(lam=1.0, mu=1.0)
    reports.append(ver.reduction_identity_check(iso, trials=cfg.verify_trials, seed=seed))
    for k in range(3):
        form = ver.random_positive_form(rng)
        reports.append(
            ver.reduction_identity_check(form, trials=max(cfg.verify_trials // 5, 1),
                                         seed=seed + k + 1)
        )
        profile = ver.StrainProfile(
            rng.normal(size=(2, 2)),
            0.5 * (lambda m: m + m.T)(rng.normal(size=(2, 2))),
        )
        reports.append(ver.stress_moments_check(form, profile))

    # density hessian against the closed isotropic form
    fd = ver.density_hessian(ver.stored_energy_log, q=2.0)
    ref = QuadForm3.isotropic(lam=2.0, mu=1.0)
    err = float(np.max(np.abs(fd.matrix - ref.matrix)))
    reports.append(
        ver.Report(
            name="density-hessian",
            passed=err <= 1e-5,
            entries=[("max_entry_error", f"{err:.3e}"), ("tolerance", "1e-05")],
        )
    )

    # brute-force reduction spot check
    worst = 0.0
    for _ in range(5):
        form = ver.random_positive_form(rng)
        f2 = rng.normal(size=(2, 2))
        from .tensor_forms import reduced_value

        exact = reduced_value(form, f2)
        radius = 12.0 * (1.0 + float(np.max(np.abs(f2))))
        brute = ver.bruteforce_reduced_value(
            form, f2, radius=radius, levels=cfg.bruteforce_levels
        )
        worst = max(worst, abs(exact - brute) / max(abs(brute), 1e-12))
    reports.append(
        ver.Report(
            name="bruteforce-reduction",
            passed=worst <= 1e-8,
            entries=[("worst_relative_gap", f"{worst:.3e}"), ("tolerance", "1e-08")],
        )
    )

    all_pass = all(r.passed for r in reports)
    text = "\n".join(r.text() for r in reports)
    print(text, end="")
    print(f"verify: {'all checks passed' if all_pass else 'FAILURES present'}")
    with open(os.path.join(out, "verify.txt"), "w") as fh:
        fh.write(text)
    _write_summary(
        os.path.join(out, "summary.txt"), cfg, seed,
        [("suites", len(reports)), ("all_passed", all_pass)],
    )
    return 0 if all_pass else 1


def _cmd_q2in(cfg, grid, out, seed):
    op = reduced_operator(_material(cfg))
    print("reduced operator matrix, orthonormal basis (11, 22, sqrt2*12):")
    for row in op.matrix:
        print("  " + "  ".join(f"{x: .12e}" for x in row))
    _write_summary(
        os.path.join(out, "summary.txt"), cfg, seed,
        [(f"matrix.row{i}", " ".join(repr(float(x)) for x in row))
         for i, row in enumerate(op.matrix)],
    )
    return 0


_DISPATCH = {
    "solve": _cmd_solve,
    "airy": _cmd_airy,
    "limit-study": _cmd_limit_study,
    "verify": _cmd_verify,
    "q2in": _cmd_q2in,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vkplate",
        description="incompressible plate model: reduction, minimization, stress-potential route",
    )
    parser.add_argument("command", choices=sorted(_DISPATCH))
    parser.add_argument("--config", required=True, help="path to a run configuration file")
    parser.add_argument("--out", default=None, help="output directory (default: from config)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if cfg.command is not None and cfg.command != args.command:
            raise ConfigError(
                f"config names command {cfg.command!r} but {args.command!r} was requested"
            )
        seed = cfg.seed if args.seed is None else args.seed
        out = cfg.out if args.out is None else args.out
        os.makedirs(out, exist_ok=True)
        grid = cfg.grid()
        return _DISPATCH[args.command](cfg, grid, out, seed)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
