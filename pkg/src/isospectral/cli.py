"""Command-line interface: ``isospectral <command> ...``.

Exit codes: 0 success, 1 input error, 2 distance did not converge,
3 a verification check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .control import (
    ShootingConfig,
    arnold_euler_flow,
    distance,
    geodesic_from,
    synth_hamiltonian,
)
from .connection import connection_form
from .core import fiber_spectrum, gauge_norm, spectrum_of, split_gauge
from .dynamics import (
    Trajectory,
    curve_length,
    energy_dispersion,
    evolve_von_neumann,
    frame_derivative,
    horizontal_lift,
    integrate,
    spectrum_drift,
)
from .errors import GeometryError
from .verify import Check, RunReport, decomposition_suite, dispersion_suite, mt_suite

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_CHECK = 0, 1, 2, 3


def _emit(obj) -> None:
    sys.stdout.write(io.dumps(obj) + "\n")


def _load_drive(path: str):
    """A Hamiltonian file is either a constant matrix or a trajectory."""
    text = Path(path).read_text()
    if path.endswith(".json"):
        obj = json.loads(text)
        if "times" in obj:
            obj.setdefault("kind", "hamiltonian")
            return io.trajectory_from_json(obj)
        return io.matrix_from_json(obj)
    return io.trajectory_from_csv(text, "hamiltonian")


def cmd_distance(args) -> int:
    rho0, rho1 = io.load_matrix(args.rho0), io.load_matrix(args.rho1)
    cfg = ShootingConfig()
    if args.config:
        cfg = ShootingConfig.from_json(Path(args.config).read_text())
    if args.seed is not None:
        cfg = ShootingConfig(**{**cfg.to_json(), "seed": args.seed})
    if args.steps is not None:
        cfg = ShootingConfig(**{**cfg.to_json(), "steps": args.steps})
    if args.tol is not None:
        cfg = ShootingConfig(**{**cfg.to_json(), "endpoint_tol": args.tol})
    res = distance(rho0, rho1, cfg)
    _emit(
        {
            "distance": io._num(res.dist),
            "converged": res.converged,
            "xi0": None if res.xi0 is None else io.matrix_to_json(res.xi0),
            "method": res.method,
            "mismatch": io._num(res.mismatch),
            "config": cfg.to_json(),
            "inputs": {"rho0": args.rho0, "rho1": args.rho1},
        }
    )
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_geodesic(args) -> int:
    rho0, xi0 = io.load_matrix(args.rho0), io.load_matrix(args.xi0)
    sigma = spectrum_of(rho0)
    par, _ = split_gauge(xi0, sigma)
    if gauge_norm(par, sigma) > 1e-10:
        raise GeometryError(f"xi0 is not horizontal: parallel-part norm {gauge_norm(par, sigma):.3e}")
    sol = geodesic_from(rho0, xi0, args.tau, args.steps or 1000, args.hbar)
    out = Path(args.out)
    io.save_trajectory(out / "rho.csv", sol.rho_curve)
    io.save_trajectory(out / "psi.csv", sol.psi_curve)
    io.save_trajectory(out / "H.csv", sol.hamiltonian)
    length = curve_length(sol.psi_curve)
    disp = energy_dispersion(sol.hamiltonian, sol.rho_curve, args.hbar)
    rep = RunReport(
        "geodesic",
        {"rho0": args.rho0, "xi0": args.xi0},
        {
            "length": sol.length,
            "measured_length": length,
            "dispersion": disp,
            "dispersion_minus_length": disp - length,
            "max_horizontal_residual": sol.max_horizontal_residual,
            "files": [str(out / f) for f in ("rho.csv", "psi.csv", "H.csv")],
        },
        [
            Check("dispersion_equals_length", disp, length, 1e-5),
            Check("horizontal_residual", sol.max_horizontal_residual, 0.0, 1e-6),
        ],
        args.seed,
    )
    _emit(rep.to_json())
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_evolve(args) -> int:
    H = _load_drive(args.H)
    rho0 = io.load_matrix(args.rho0)
    traj = evolve_von_neumann(H, rho0, args.tau, args.steps or 1000, args.hbar)
    io.save_trajectory(args.out, traj)
    drift = spectrum_drift(traj)
    rep = RunReport(
        "evolve",
        {"H": args.H, "rho0": args.rho0},
        {"final": io.matrix_to_json(traj.frames[-1]), "spectrum_drift": drift, "out": args.out},
        [Check("isospectral", drift, 0.0, 1e-7)],
        args.seed,
    )
    _emit(rep.to_json())
    return EXIT_OK if rep.passed else EXIT_CHECK


def lift_report(traj: Trajectory, lift: Trajectory) -> dict:
    sigma = fiber_spectrum(lift.frames[0])
    vel = frame_derivative(lift.times, lift.frames)
    vert = max(gauge_norm(connection_form(p, v, sigma).xi, sigma) for p, v in zip(lift.frames, vel))
    proj = lift.frames @ np.conj(np.transpose(lift.frames, (0, 2, 1)))
    return {
        "max_connection_norm": float(vert),
        "round_trip_error": float(np.max(np.linalg.norm(proj - traj.frames, axis=(1, 2)))),
        "base_length": curve_length(traj),
        "lift_length": integrate(np.linalg.norm(vel, axis=(1, 2)), lift.times),
    }


def cmd_lift(args) -> int:
    traj = io.load_trajectory(args.rho_traj, "density")
    psi0 = io.load_matrix(args.psi0)
    lift = horizontal_lift(traj, psi0, args.steps_per_frame)
    io.save_trajectory(args.out, lift)
    info = lift_report(traj, lift)
    rep = RunReport(
        "lift",
        {"rho_traj": args.rho_traj, "psi0": args.psi0},
        {**info, "out": args.out},
        [
            Check("horizontal", info["max_connection_norm"], 0.0, 1e-6),
            Check("round_trip", info["round_trip_error"], 0.0, 1e-6),
            Check("length_preserved", info["lift_length"], info["base_length"], 1e-5),
        ],
        args.seed,
    )
    _emit(rep.to_json())
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_synth(args) -> int:
    psi0 = io.load_matrix(args.psi0)
    xi0 = io.load_matrix(args.xi0)
    steps = args.steps or 1000
    if args.flow:
        xi = arnold_euler_flow(xi0, fiber_spectrum(psi0), args.tau, steps)
    else:
        xi = xi0
    H = synth_hamiltonian(psi0, xi, steps=steps, tau=args.tau, hbar=args.hbar)
    io.save_trajectory(args.out, H)
    herm = float(np.max(np.abs(H.frames - np.conj(np.transpose(H.frames, (0, 2, 1))))))
    rep = RunReport(
        "synth",
        {"psi0": args.psi0, "xi0": args.xi0, "flow": args.flow},
        {"out": args.out, "frames": len(H)},
        [Check("hermitian", herm, 0.0, 1e-9)],
        args.seed,
    )
    _emit(rep.to_json())
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_verify(args) -> int:
    hbar, steps = args.hbar, args.steps or 1000
    if args.suite == "decomposition":
        rep = decomposition_suite(args.samples, 7 if args.seed is None else args.seed, hbar)
    elif args.suite == "mt":
        H = _load_drive(args.H) if args.H else hbar * np.array([[0, -1j], [1j, 0]])
        rho0 = io.load_matrix(args.rho0) if args.rho0 else np.diag([1.0, 0.0]).astype(complex)
        tau = np.pi / 2 if args.tau is None else args.tau
        rep = mt_suite(H, rho0, tau, steps, hbar, args.tol or 1e-9)
    else:
        if not (args.H and args.rho0):
            raise GeometryError("verify dispersion needs --H and --rho0")
        rep = dispersion_suite(_load_drive(args.H), io.load_matrix(args.rho0),
                               1.0 if args.tau is None else args.tau, steps, hbar)
    rep.seed = args.seed if rep.seed is None else rep.seed
    sys.stderr.write(rep.table() + "\n")
    _emit(rep.to_json())
    if not rep.passed:
        bad = [c for c in rep.checks if not c.passed]
        sys.stderr.write(f"failed: {[(c.name, c.lhs, c.rhs, c.tolerance, c.detail) for c in bad]}\n")
        return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--hbar", type=float, default=argparse.SUPPRESS)
    common.add_argument("--steps", type=int, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="isospectral", description=__doc__.splitlines()[0])
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("distance", parents=[common], help="Riemannian distance by geodesic shooting")
    s.add_argument("rho0")
    s.add_argument("rho1")
    s.add_argument("--config")
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("geodesic", parents=[common], help="geodesic from rho0 with initial control xi0")
    s.add_argument("rho0")
    s.add_argument("xi0")
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_geodesic)

    s = sub.add_parser("evolve", parents=[common], help="von Neumann evolution")
    s.add_argument("H", help="constant matrix JSON or Hamiltonian trajectory")
    s.add_argument("rho0")
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("lift", parents=[common], help="horizontal lift of a density trajectory")
    s.add_argument("rho_traj")
    s.add_argument("psi0")
    s.add_argument("--steps-per-frame", type=int, default=4)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("synth", parents=[common], help="synthesize the Hamiltonian of a control curve")
    s.add_argument("psi0")
    s.add_argument("xi0")
    s.add_argument("--flow", action="store_true", help="evolve xi0 by the Arnold-Euler flow")
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    s.add_argument("suite", choices=["dispersion", "mt", "decomposition"])
    s.add_argument("--H")
    s.add_argument("--rho0")
    s.add_argument("--tau", type=float, default=None)
    s.add_argument("--samples", type=int, default=200)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GeometryError, OSError, ValueError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
