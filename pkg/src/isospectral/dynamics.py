"""
Time evolution on density operators and purifications, and functionals of curves.

All integrators are classical fixed-step RK4 on a uniform grid.  Drives may be
constant arrays, callables ``t -> matrix`` or :class:`Trajectory` objects.
Within a step ``[t, t + h]`` the last stage is evaluated at the left limit of
``t + h``, so right-continuous piecewise drives that switch on grid points are
integrated without loss of order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.integrate import simpson, trapezoid
from numpy.typing import ArrayLike, NDArray

from .connection import connection_form, tangent_lift, uncertainty
from .core import (
    CArray,
    fiber_spectrum,
    hs_metric,
    spectrum_of,
    standard_purification,
    validate_anti_hermitian,
    validate_density,
)
from .errors import DomainError, IntegrationDriftError, UnsupportedRankError, ValidationError

KINDS = ("density", "purification", "hamiltonian", "control", "unitary")
FRAME_TOL = 1e-8


@dataclass(frozen=True)
class Trajectory:
    """Matrices sampled on a uniform grid ``0 = t_0 < ... < t_N = tau``.

    ``evaluator`` optionally gives the curve between grid points (integrators
    attach one built from a partial step); otherwise cubic Lagrange
    interpolation of neighbouring frames is used.
    """

    times: NDArray[np.float64]
    frames: NDArray[np.complex128]
    kind: str
    evaluator: Callable[[float], CArray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown trajectory kind {self.kind!r}")
        if self.frames.ndim != 3 or len(self.frames) != len(self.times):
            raise ValidationError("frames must be a (N+1, r, c) stack matching times")

    def __len__(self):
        return len(self.times)

    @property
    def tau(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def at(self, t: float) -> CArray:
        if self.evaluator is not None:
            return self.evaluator(t)
        return _lagrange(self.times, self.frames, t)


Drive = Union[ArrayLike, Callable[[float], ArrayLike], Trajectory]


def _lagrange(times, frames, t):
    n = len(times)
    if n == 1:
        return frames[0]
    i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, n - 2))
    lo = int(np.clip(i - 1, 0, max(n - 4, 0)))
    idx = range(lo, min(lo + 4, n))
    out = np.zeros_like(frames[0])
    for a in idx:
        w = 1.0
        for b in idx:
            if b != a:
                w *= (t - times[b]) / (times[a] - times[b])
        out = out + w * frames[a]
    return out


def as_drive(H: Drive) -> Callable[[float], CArray]:
    if isinstance(H, Trajectory):
        return H.at
    if callable(H):
        return lambda t: np.asarray(H(t), complex)
    const = np.asarray(H, complex)
    return lambda t: const


def uniform_grid(tau: float, steps: int) -> NDArray[np.float64]:
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if not tau >= 0:
        raise ValidationError("tau must be nonnegative")
    return np.linspace(0.0, tau, steps + 1)


def _rk4_step(f, t, y, h):
    end = np.nextafter(t + h, t) if h > 0 else t
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(end, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4(f, y0: CArray, times: NDArray, project=None) -> tuple[NDArray, Callable[[float], CArray]]:
    """Fixed-step RK4 over ``times``; returns frames and a dense evaluator.

    ``project`` is applied after every step (structure restoration).  The
    evaluator takes one partial RK4 step from the nearest grid point to the left.
    """
    frames = np.empty((len(times),) + y0.shape, complex)
    frames[0] = y0
    y = y0
    for i in range(len(times) - 1):
        y = _rk4_step(f, times[i], y, times[i + 1] - times[i])
        if project is not None:
            y = project(y)
        frames[i + 1] = y

    cache: dict = {}

    def evaluate(t: float) -> CArray:
        if t in cache:
            return cache[t]
        i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 1))
        if t == times[i]:
            out = frames[i]
        else:
            if i == len(times) - 1:
                i -= 1
            out = _rk4_step(f, times[i], frames[i], t - times[i])
            if project is not None:
                out = project(out)
        cache.clear()
        cache[t] = out
        return out

    return frames, evaluate


def hermitize(m: CArray) -> CArray:
    return 0.5 * (m + m.conj().T)


def unitarize(m: CArray) -> CArray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def spectrum_drift(traj: Trajectory) -> float:
    """Largest eigenvalue deviation of any frame from the first one."""
    w = np.linalg.eigvalsh(traj.frames)
    return float(np.max(np.abs(w - w[0])))


def _check_density_frames(frames, tol=FRAME_TOL):
    tr = np.real(np.trace(frames, axis1=1, axis2=2))
    w = np.linalg.eigvalsh(frames)
    bad = np.flatnonzero((np.abs(tr - 1) > tol) | (np.max(np.abs(w - w[0]), axis=1) > tol))
    if bad.size:
        raise IntegrationDriftError(f"density frame {bad[0]} drifted off the orbit; increase steps")


def evolve_von_neumann(
    H: Drive,
    rho0: ArrayLike,
    tau: float,
    steps: int = 1000,
    hbar: float = 1.0,
    validate: bool = True,
) -> Trajectory:
    """Integrate ``rho' = [H, rho] / (i hbar)`` from ``rho0``.

    With ``validate`` every frame must keep unit trace and the spectrum of
    ``rho0`` to 1e-8, otherwise :class:`IntegrationDriftError` is raised.
    """
    rho0 = validate_density(rho0)
    Hf = as_drive(H)
    times = uniform_grid(tau, steps)

    def f(t, r):
        h = Hf(t)
        return (h @ r - r @ h) / (1j * hbar)

    frames, ev = rk4(f, rho0, times, project=hermitize)
    if validate:
        _check_density_frames(frames)
    return Trajectory(times, frames, "density", ev)


def evolve_schrodinger(
    H: Drive,
    psi0: ArrayLike,
    tau: float,
    steps: int = 1000,
    hbar: float = 1.0,
    validate: bool = True,
) -> Trajectory:
    """Integrate ``psi' = H psi / (i hbar)`` from ``psi0``."""
    psi0 = np.asarray(psi0, complex)
    gram0 = psi0.conj().T @ psi0
    Hf = as_drive(H)
    times = uniform_grid(tau, steps)

    def f(t, y):
        return Hf(t) @ y / (1j * hbar)

    frames, ev = rk4(f, psi0, times)
    drift = np.max(np.linalg.norm(np.conj(np.transpose(frames, (0, 2, 1))) @ frames - gram0, axis=(1, 2)))
    if validate and drift > FRAME_TOL:
        raise IntegrationDriftError(f"fiber condition drifted by {drift:.3e}; increase steps")
    return Trajectory(times, frames, "purification", ev)


def neg_time_ordered_path(xi: Drive, times: NDArray) -> Trajectory:
    """``V`` on ``times`` solving ``V' = V xi(t)``, ``V(0) = 1`` (later factors on the right)."""
    xif = as_drive(xi)
    x0 = validate_anti_hermitian(xif(float(times[0])), tol=1e-9, what="control sample")

    def f(t, v):
        return v @ xif(t)

    frames, ev = rk4(f, np.eye(x0.shape[0], dtype=complex), times, project=unitarize)
    return Trajectory(times, frames, "unitary", ev)


def neg_time_ordered_exp(xi: Drive, t: float, steps: int = 1000) -> CArray:
    if isinstance(xi, Trajectory):
        for s in np.linspace(0, t, 5):
            validate_anti_hermitian(xi.at(s), tol=1e-9, what="control sample")
    return neg_time_ordered_path(xi, uniform_grid(t, steps)).frames[-1]


def frame_derivative(times: NDArray, frames: NDArray) -> NDArray:
    """Time derivative of sampled frames.

    Fourth-order differences on a uniform grid with at least five points,
    otherwise ``np.gradient``.
    """
    n = len(times)
    if n < 3:
        return np.gradient(frames, times, axis=0, edge_order=1)
    h = times[1] - times[0]
    if n < 5 or not np.allclose(np.diff(times), h, rtol=1e-9, atol=0):
        return np.gradient(frames, times, axis=0, edge_order=2)
    f = frames
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def integrate(values: NDArray, times: NDArray) -> float:
    """Simpson quadrature of grid samples (trapezoid below three points)."""
    if len(times) < 2:
        return 0.0
    if len(times) < 3:
        return float(trapezoid(values, times))
    return float(simpson(values, x=times))


def speeds(traj: Trajectory) -> NDArray[np.float64]:
    """Base speed ``sqrt(g(rho', rho'))`` at every grid point."""
    if len(traj) < 2:
        return np.zeros(len(traj))
    d = frame_derivative(traj.times, traj.frames)
    out = np.empty(len(traj))
    if traj.kind == "purification":
        sigma = fiber_spectrum(traj.frames[0])
        for i, (psi, v) in enumerate(zip(traj.frames, d)):
            h = connection_form(psi, v, sigma).horizontal
            out[i] = np.sqrt(max(hs_metric(h, h), 0.0))
        return out
    if traj.kind != "density":
        raise ValidationError(f"cannot measure the length of a {traj.kind} trajectory")
    sigma = spectrum_of(traj.frames[0])
    if sigma.k != traj.frames.shape[1]:
        raise UnsupportedRankError(
            "length of rank-deficient density curves needs a purification trajectory"
        )
    for i, (r, v) in enumerate(zip(traj.frames, d)):
        psi = standard_purification(hermitize(r) / np.trace(r).real)
        h = tangent_lift(psi, hermitize(v), sigma)
        out[i] = np.sqrt(max(hs_metric(h, h), 0.0))
    return out


def curve_length(traj: Trajectory) -> float:
    """Simpson quadrature of the base speed.

    Purification trajectories measure the horizontal part of their velocity,
    which is the base length at any rank.
    """
    return integrate(speeds(traj), traj.times)


def energy_dispersion(H: Drive, traj: Trajectory, hbar: float = 1.0) -> float:
    """``(1/hbar) int Delta H(rho) dt`` on the trajectory's own grid."""
    if traj.kind != "density":
        raise ValidationError("energy dispersion needs a density trajectory")
    if isinstance(H, Trajectory):
        if len(H) != len(traj) or not np.allclose(H.times, traj.times, atol=1e-12):
            raise DomainError("Hamiltonian and density trajectories are on different grids")
        hs = H.frames
    else:
        Hf = as_drive(H)
        hs = [Hf(t) for t in traj.times]
    vals = np.array([uncertainty(r, h) for r, h in zip(traj.frames, hs)]) / hbar
    return integrate(vals, traj.times)


def horizontal_lift(
    traj: Trajectory, psi0: ArrayLike, steps_per_frame: int = 4
) -> Trajectory:
    """Horizontal lift of a full-rank density curve extending from ``psi0``."""
    if traj.kind != "density":
        raise ValidationError("horizontal lift needs a density trajectory")
    psi0 = np.asarray(psi0, complex)
    if np.linalg.norm(psi0 @ psi0.conj().T - traj.frames[0]) > 1e-8:
        raise DomainError("psi0 does not lie over the first frame")
    sigma = fiber_spectrum(psi0)
    if sigma.k != traj.frames.shape[1]:
        raise UnsupportedRankError("horizontal lift needs full-rank frames")

    def rho_dot(t):
        return hermitize(_lagrange_derivative(traj.times, traj.frames, t))

    def f(t, psi):
        return tangent_lift(psi, rho_dot(t), sigma)

    fine = np.linspace(0.0, traj.tau, traj.steps * steps_per_frame + 1)
    frames, _ = rk4(f, psi0, fine)
    frames = frames[::steps_per_frame]
    return Trajectory(traj.times.copy(), frames, "purification")


def _lagrange_derivative(times, frames, t):
    n = len(times)
    if n == 1:
        return np.zeros_like(frames[0])
    i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, n - 2))
    lo = int(np.clip(i - 1, 0, max(n - 4, 0)))
    idx = list(range(lo, min(lo + 4, n)))
    out = np.zeros_like(frames[0])
    for a in idx:
        others = [b for b in idx if b != a]
        denom = np.prod([times[a] - times[b] for b in others])
        num = 0.0
        for skip in others:
            num += np.prod([t - times[b] for b in others if b != skip])
        out = out + (num / denom) * frames[a]
    return out


def is_distinguishable(rho0: ArrayLike, rho1: ArrayLike, tol: float = 1e-9) -> bool:
    """Orthogonal supports, tested through ``Tr(rho0 rho1) < tol``."""
    return float(np.real(np.trace(np.asarray(rho0) @ np.asarray(rho1)))) < tol


@dataclass(frozen=True)
class MTReport:
    distinguishable: bool
    mean_dh_tau: float
    bound: float
    satisfied: bool | None
    gap: float
    trajectory: Trajectory = field(repr=False)

    @property
    def applicable(self) -> bool:
        return self.distinguishable


def mt_bound_report(
    H: Drive, rho0: ArrayLike, tau: float, steps: int = 1000, hbar: float = 1.0, tol: float = 1e-9
) -> MTReport:
    """Evolve ``rho0`` under ``H`` and compare ``<Delta H> tau`` with ``pi hbar / 2``.

    ``satisfied`` is ``None`` when the endpoints are not distinguishable.
    """
    traj = evolve_von_neumann(H, rho0, tau, steps, hbar)
    # <Delta H> tau is the dispersion times hbar.
    lhs = energy_dispersion(H, traj, hbar) * hbar
    bound = np.pi * hbar / 2
    dist = is_distinguishable(traj.frames[0], traj.frames[-1], tol)
    return MTReport(dist, lhs, bound, (lhs >= bound - 1e-8) if dist else None, lhs - bound, traj)
