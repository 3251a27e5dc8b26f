"""Invariant suites with machine-readable check records (used by the CLI)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .connection import field_metric, is_parallel_at, uncertainty, xi_A
from .core import gauge_metric, spectrum_of, standard_purification
from .dynamics import (
    Drive,
    Trajectory,
    curve_length,
    energy_dispersion,
    evolve_schrodinger,
    mt_bound_report,
)
from .sampling import horizontal_control, parallel_observable, random_density, random_hermitian


@dataclass
class Check:
    """``passed`` means ``|lhs - rhs| <= tolerance`` (``relation="eq"``) or ``lhs >= rhs - tolerance`` (``"ge"``)."""

    name: str
    lhs: float
    rhs: float
    tolerance: float
    relation: str = "eq"
    detail: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        self.lhs, self.rhs = float(self.lhs), float(self.rhs)
        if self.relation == "eq":
            self.passed = bool(abs(self.lhs - self.rhs) <= self.tolerance)
        elif self.relation == "ge":
            self.passed = bool(self.lhs >= self.rhs - self.tolerance)
        else:
            raise ValueError(f"unknown relation {self.relation!r}")


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "checks": [asdict(c) for c in self.checks],
            "seed": self.seed,
            "passed": self.passed,
        }

    def table(self) -> str:
        lines = [f"{'check':<34} {'lhs':>22} {'rhs':>22} {'tol':>9}  result"]
        for c in self.checks:
            op = "=" if c.relation == "eq" else ">="
            lines.append(
                f"{c.name:<34} {c.lhs:>22.15g} {c.rhs:>22.15g} {c.tolerance:>9.1e}  "
                f"{'PASS' if c.passed else 'FAIL'} ({op})"
            )
        return "\n".join(lines)


def decomposition_samples(samples: int, seed: int, hbar: float = 1.0):
    """Seeded ``(rho, A, label)`` triples, ``n`` cycling through 2, 3, 4.

    Every third observable is parallel by construction, every fifth state is
    rank-deficient.
    """
    rng = np.random.default_rng(seed)
    for i in range(samples):
        n = 2 + i % 3
        if i % 5 == 4:
            rho = random_density(n, rng, rank=int(rng.integers(1, n)))
            A = random_hermitian(n, rng)
            label = "rank-deficient"
        else:
            rho = random_density(n, rng)
            if i % 3 == 2:
                xi = horizontal_control(spectrum_of(rho), rng, rng.uniform(0.2, 2.0))
                A = parallel_observable(rho, xi, hbar)
                label = "parallel"
            else:
                A = random_hermitian(n, rng)
                label = "generic"
        yield rho, A, label


def decomposition_terms(rho, A, hbar: float = 1.0) -> dict:
    """``Delta A``, ``hbar^2 g(X_A, X_A)`` and ``hbar^2 beta(xi_perp, xi_perp)`` at ``rho``."""
    sigma = spectrum_of(rho)
    _, perp = xi_A(rho, A, hbar)
    return {
        "dA": uncertainty(rho, A),
        "g": hbar**2 * field_metric(rho, A, hbar),
        "perp": hbar**2 * gauge_metric(perp, perp, sigma),
    }


def decomposition_suite(samples: int = 200, seed: int = 7, hbar: float = 1.0) -> RunReport:
    rel_err, slack, eq_err = [], [], []
    worst = {}
    for idx, (rho, A, label) in enumerate(decomposition_samples(samples, seed, hbar)):
        t = decomposition_terms(rho, A, hbar)
        err = abs(t["dA"] ** 2 - (t["g"] + t["perp"])) / max(t["dA"] ** 2, 1e-300)
        rel_err.append(err)
        s = t["dA"] - np.sqrt(t["g"])
        slack.append(s)
        if err >= max(rel_err):
            worst["decomposition_identity"] = f"sample {idx} n={rho.shape[0]} {label}"
        if s <= min(slack):
            worst["uncertainty_bound"] = f"sample {idx} n={rho.shape[0]} {label}"
        if is_parallel_at(A, rho, tol=1e-10, hbar=hbar):
            eq_err.append(abs(s))
    checks = [
        Check("decomposition_identity", max(rel_err), 0.0, 1e-9, "eq", worst["decomposition_identity"]),
        Check("uncertainty_bound", min(slack), 0.0, 1e-10, "ge", worst["uncertainty_bound"]),
        Check("parallel_equality", max(eq_err, default=0.0), 0.0, 1e-8, "eq", f"{len(eq_err)} parallel samples"),
    ]
    return RunReport(
        "verify decomposition",
        {"samples": samples},
        {"parallel_samples": len(eq_err), "max_relative_error": max(rel_err)},
        checks,
        seed,
    )


def dispersion_suite(H: Drive, rho0, tau: float = 1.0, steps: int = 1000, hbar: float = 1.0) -> RunReport:
    """Energy dispersion against the length of the generated curve.

    The curve is measured through the Schrodinger evolution of a purification,
    so rank-deficient ``rho0`` is accepted.
    """
    psi = evolve_schrodinger(H, standard_purification(rho0), tau, steps, hbar)
    f = psi.frames
    traj = Trajectory(psi.times, f @ np.conj(np.transpose(f, (0, 2, 1))), "density")
    disp = energy_dispersion(H, traj, hbar)
    length = curve_length(psi)
    return RunReport(
        "verify dispersion",
        {"tau": tau, "steps": steps},
        {"dispersion": disp, "length": length},
        [Check("dispersion_ge_length", disp, length, 1e-6, "ge")],
    )


def mt_suite(
    H: Drive, rho0, tau: float, steps: int = 1000, hbar: float = 1.0, tol: float = 1e-9
) -> RunReport:
    rep = mt_bound_report(H, rho0, tau, steps, hbar, tol)
    out = {
        "distinguishable": rep.distinguishable,
        "mean_dH_tau": rep.mean_dh_tau,
        "bound": rep.bound,
        "saturation_gap": rep.gap,
    }
    checks = []
    if rep.distinguishable:
        checks.append(Check("mandelstam_tamm", rep.mean_dh_tau, rep.bound, 1e-8, "ge"))
    return RunReport("verify mt", {"tau": tau, "steps": steps}, out, checks)
