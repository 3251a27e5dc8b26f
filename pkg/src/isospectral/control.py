"""
Lie-algebra controlled Hamiltonians and geodesics of invertible density operators.

A control curve ``xi(t)`` in ``u(n)`` (eigenbasis coordinates of ``rho0``)
defines the evolution ``psi(t) = W V(t) P^{1/2}`` with ``W = psi0 P^{-1/2}``
and ``V' = V xi``.  The curve is a horizontal geodesic exactly when ``xi``
stays in ``u(sigma)^perp`` and obeys ``xi' = ad*_xi xi``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import minimize

from .core import (
    CArray,
    Spectrum,
    block_mask,
    fiber_spectrum,
    gauge_metric,
    gauge_norm,
    horizontal_basis,
    spectrum_of,
    split_gauge,
    standard_purification,
    validate_anti_hermitian,
    validate_density,
)
from .dynamics import (
    Drive,
    Trajectory,
    as_drive,
    evolve_schrodinger,
    hermitize,
    is_distinguishable,
    neg_time_ordered_path,
    rk4,
    uniform_grid,
)
from .errors import DomainError, IntegrationDriftError, UnsupportedRankError, ValidationError

HORIZONTAL_TOL = 1e-10


def _anti(m: CArray) -> CArray:
    return 0.5 * (m - m.conj().T)


def coadjoint(xi: ArrayLike, sigma: Spectrum) -> CArray:
    """``ad*_xi xi``: the element ``z`` with ``beta(z, eta) = beta(xi, [xi, eta])`` for all ``eta``.

    Writing ``beta(z, eta) = -1/2 Tr(eta {P, z})`` turns the defining identity
    into ``{P, z} = [{P, xi}, xi]``, solved entrywise by ``z_ij = C_ij / (p_i + p_j)``.
    """
    x = np.asarray(xi, complex)
    p = sigma.p
    s = p[:, None] + p[None, :]
    a = s * x
    return (a @ x - x @ a) / s


def horizontal_residual(xi: ArrayLike, sigma: Spectrum) -> float:
    """beta-norm of the ``u(sigma)`` component of ``xi``."""
    par = np.where(block_mask(sigma), np.asarray(xi, complex), 0)
    return gauge_norm(par, sigma)


def arnold_euler_flow(
    xi0: ArrayLike, sigma: Spectrum, tau: float = 1.0, steps: int = 1000, validate: bool = True
) -> Trajectory:
    """Integrate ``xi' = ad*_xi xi``; the beta-norm is a conserved quantity."""
    x0 = validate_anti_hermitian(xi0, tol=1e-10, what="initial control")
    if x0.shape != (sigma.k, sigma.k):
        raise ValidationError(f"initial control must be {sigma.k}x{sigma.k}")
    times = uniform_grid(tau, steps)
    frames, ev = rk4(lambda t, x: coadjoint(x, sigma), x0, times, project=_anti)
    if validate:
        e0 = gauge_metric(x0, x0, sigma)
        e = np.real(np.sum(frames.conj() * frames * sigma.p[None, None, :], axis=(1, 2)))
        drift = np.max(np.abs(e - e0)) / e0 if e0 > 0 else 0.0
        if drift > 1e-8:
            raise IntegrationDriftError(f"Arnold-Euler energy drifted by {drift:.2e}; increase steps")
    return Trajectory(times, frames, "control", ev)


def synth_hamiltonian(
    psi0: ArrayLike,
    xi: Drive,
    steps: int = 1000,
    tau: float = 1.0,
    hbar: float = 1.0,
) -> Trajectory:
    """Sample ``H_xi(t) = i hbar W V xi V^dagger W^dagger`` with ``W = psi0 P^{-1/2}``.

    ``V`` is the negative time-ordered exponential of ``xi``.  When ``xi`` is a
    :class:`Trajectory` its grid is used; ``steps`` and ``tau`` apply to callables
    and constants.
    """
    psi0 = np.asarray(psi0, complex)
    if psi0.ndim != 2 or psi0.shape[0] != psi0.shape[1]:
        raise UnsupportedRankError("Hamiltonian synthesis needs an invertible (square) psi0")
    sigma = fiber_spectrum(psi0)
    W = psi0 / np.sqrt(sigma.p)[None, :]
    if np.linalg.norm(W.conj().T @ W - np.eye(sigma.k)) > 1e-8:
        raise ValidationError("psi0 is not in the fiber of its own spectrum")
    times = xi.times if isinstance(xi, Trajectory) else uniform_grid(tau, steps)
    xif = as_drive(xi)
    V = neg_time_ordered_path(xi, times)
    Wh = W.conj().T

    def H_at(t, v=None):
        v = V.at(t) if v is None else v
        return hermitize(1j * hbar * W @ v @ xif(t) @ v.conj().T @ Wh)

    frames = np.array([H_at(t, v) for t, v in zip(times, V.frames)])
    cache: dict = {}

    def evaluate(t):
        if t not in cache:
            cache.clear()
            cache[t] = H_at(t)
        return cache[t]

    return Trajectory(times, frames, "hamiltonian", evaluate)


@dataclass(frozen=True)
class GeodesicSolution:
    xi0: CArray
    xi_curve: Trajectory
    hamiltonian: Trajectory
    psi_curve: Trajectory
    rho_curve: Trajectory
    length: float
    sigma: Spectrum
    max_horizontal_residual: float = 0.0


def _project_frames(psi: Trajectory) -> Trajectory:
    f = psi.frames
    return Trajectory(psi.times, f @ np.conj(np.transpose(f, (0, 2, 1))), "density")


def _prepare(rho0, xi0, rank_tol):
    rho0 = validate_density(rho0)
    sigma = spectrum_of(rho0, rank_tol)
    if sigma.k != rho0.shape[0]:
        raise UnsupportedRankError("geodesics are generated for invertible density operators only")
    par, perp = split_gauge(xi0, sigma)
    par_norm = gauge_norm(par, sigma)
    if par_norm > HORIZONTAL_TOL:
        raise DomainError(f"initial control is not horizontal: parallel part norm {par_norm:.3e}")
    return rho0, sigma, standard_purification(rho0, rank_tol), perp


def geodesic_from(
    rho0: ArrayLike,
    xi0: ArrayLike,
    tau: float = 1.0,
    steps: int = 1000,
    hbar: float = 1.0,
    rank_tol: float = 1e-9,
) -> GeodesicSolution:
    """Geodesic from ``rho0`` with horizontal initial control ``xi0``.

    ``xi0`` is read in the eigenbasis of the standard purification of ``rho0``.
    """
    rho0, sigma, psi0, x0 = _prepare(rho0, xi0, rank_tol)
    flow = arnold_euler_flow(x0, sigma, tau, steps)
    residual = max(horizontal_residual(x, sigma) for x in flow.frames)
    if residual > 1e-6:
        raise IntegrationDriftError(f"control left u(sigma)^perp (residual {residual:.2e})")
    H = synth_hamiltonian(psi0, flow, hbar=hbar)
    psi = evolve_schrodinger(H, psi0, tau, steps, hbar)
    rho = _project_frames(psi)
    return GeodesicSolution(
        x0, flow, H, psi, rho, gauge_norm(x0, sigma) * tau, sigma, residual
    )


def _exp_anti(x: CArray, ts) -> np.ndarray:
    """``exp(t x)`` for anti-Hermitian ``x`` at every ``t`` in ``ts``."""
    lam, u = np.linalg.eigh(1j * x)
    ph = np.exp(-1j * np.outer(ts, lam))
    return np.einsum("ij,tj,kj->tik", u, ph, u.conj())


def two_eigenvalue_geodesic(
    rho0: ArrayLike,
    xi0: ArrayLike,
    tau: float = 1.0,
    steps: int = 1000,
    hbar: float = 1.0,
    rank_tol: float = 1e-9,
) -> GeodesicSolution:
    """Closed form for spectra with two distinct values: the control is constant.

    ``H = i hbar W xi0 W^dagger`` and ``psi(t) = W exp(t xi0) P^{1/2}``.
    """
    rho0, sigma, psi0, x0 = _prepare(rho0, xi0, rank_tol)
    if len(sigma.distinct) != 2:
        raise DomainError(f"spectrum has {len(sigma.distinct)} distinct values, need 2")
    times = uniform_grid(tau, steps)
    W = psi0 / np.sqrt(sigma.p)[None, :]
    H = hermitize(1j * hbar * W @ x0 @ W.conj().T)
    E = _exp_anti(x0, times)
    psi = W[None] @ E * np.sqrt(sigma.p)[None, None, :]
    n = len(times)
    psi_t = Trajectory(times, psi, "purification")
    return GeodesicSolution(
        x0,
        Trajectory(times, np.broadcast_to(x0, (n,) + x0.shape).copy(), "control"),
        Trajectory(times, np.broadcast_to(H, (n,) + H.shape).copy(), "hamiltonian"),
        psi_t,
        _project_frames(psi_t),
        gauge_norm(x0, sigma) * tau,
        sigma,
        0.0,
    )


def qubit_geodesic_rho(p1: float, p2: float, eps: float, theta: float, t: float) -> CArray:
    """Explicit qubit geodesic from ``diag(p1, p2)`` with control ``eps e^{i theta}``."""
    c, s = np.cos(eps * t), np.sin(eps * t)
    off = (p2 - p1) * c * s
    return np.array(
        [
            [p1 * c * c + p2 * s * s, np.exp(1j * theta) * off],
            [np.exp(-1j * theta) * off, p1 * s * s + p2 * c * c],
        ]
    )


def qubit_control(eps: float, theta: float) -> CArray:
    return np.array([[0, eps * np.exp(1j * theta)], [-eps * np.exp(-1j * theta), 0]])


def distinguishable_geodesic(
    psi0: ArrayLike, psi1: ArrayLike, steps: int = 1000, tol: float = 1e-10
) -> Trajectory:
    """Unit-speed horizontal curve ``cos(t) psi0 + sin(t) psi1`` on ``[0, pi/2]``."""
    a = np.asarray(psi0, complex)
    b = np.asarray(psi1, complex)
    if a.shape != b.shape:
        raise ValidationError("purifications must have the same shape")
    cross = max(np.linalg.norm(a.conj().T @ b), np.linalg.norm(b.conj().T @ a))
    if cross > tol:
        raise DomainError(f"supports are not orthogonal (|psi0^dagger psi1| = {cross:.3e})")
    P = a.conj().T @ a
    if np.linalg.norm(b.conj().T @ b - P) > tol:
        raise DomainError("psi0 and psi1 are not in the same S(sigma)")
    times = uniform_grid(np.pi / 2, steps)
    c, s = np.cos(times)[:, None, None], np.sin(times)[:, None, None]
    frames = c * a + s * b
    vel = -s * a + c * b
    ph = np.conj(np.transpose(frames, (0, 2, 1)))
    fiber = np.max(np.linalg.norm(ph @ frames - P, axis=(1, 2)))
    vert = np.max(np.linalg.norm(ph @ vel, axis=(1, 2)))
    if fiber > tol or vert > tol:
        raise IntegrationDriftError(f"great circle left the fiber ({fiber:.2e}, {vert:.2e})")
    return Trajectory(times, frames, "purification")


# -- distance by shooting ------------------------------------------------------


@dataclass(frozen=True)
class ShootingConfig:
    restarts: int = 8
    endpoint_tol: float = 1e-6
    max_iters: int = 4000
    seed: int = 0
    steps: int = 200
    min_norm: float = 0.1
    max_norm: float = np.pi

    @classmethod
    def from_json(cls, obj: dict | str) -> "ShootingConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        known = {k: v for k, v in obj.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DistanceResult:
    dist: float
    xi0: CArray | None
    converged: bool
    mismatch: float = 0.0
    method: str = "shooting"
    candidates: list = field(default_factory=list, repr=False)

    def __iter__(self):
        return iter((self.dist, self.xi0, self.converged))


def endpoint(psi0: CArray, sigma: Spectrum, xi0: CArray, steps: int) -> CArray:
    """``pi(psi(1))`` for the geodesic with initial control ``xi0`` (unit time)."""
    W = psi0 / np.sqrt(sigma.p)[None, :]
    if len(sigma.distinct) == 2:
        V = _exp_anti(xi0, [1.0])[0]
    else:
        # joint RK4 for (xi, V); xi' = ad*_xi xi, V' = V xi
        h = 1.0 / steps
        x, V = xi0, np.eye(sigma.k, dtype=complex)
        for _ in range(steps):
            k1x, k1v = coadjoint(x, sigma), V @ x
            x2, V2 = x + h / 2 * k1x, V + h / 2 * k1v
            k2x, k2v = coadjoint(x2, sigma), V2 @ x2
            x3, V3 = x + h / 2 * k2x, V + h / 2 * k2v
            k3x, k3v = coadjoint(x3, sigma), V3 @ x3
            x4, V4 = x + h * k3x, V + h * k3v
            k4x, k4v = coadjoint(x4, sigma), V4 @ x4
            x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            V = V + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    U = W @ V
    return (U * sigma.p[None, :]) @ U.conj().T


def sphere_chord_bound(rho0: ArrayLike, rho1: ArrayLike, rank_tol: float = 1e-9) -> float:
    """Lower bound on the distance: shortest great-circle arc between the two fibers.

    Every fiber lies in the unit sphere of ``L(C^k, H)``; the closest pair of
    points is found blockwise by orthogonal Procrustes.
    """
    a = standard_purification(rho0, rank_tol)
    b = standard_purification(rho1, rank_tol)
    sigma = fiber_spectrum(a)
    chord2 = 0.0
    for blk in sigma.blocks:
        m = b[:, blk].conj().T @ a[:, blk]
        chord2 += 2 * sigma.p[blk].sum() - 2 * np.linalg.svd(m, compute_uv=False).sum()
    c = np.sqrt(max(chord2, 0.0))
    return float(2 * np.arcsin(min(1.0, c / 2)))


def _check_isospectral(r0, r1):
    w0 = np.sort(np.linalg.eigvalsh(r0))[::-1]
    w1 = np.sort(np.linalg.eigvalsh(r1))[::-1]
    if r0.shape != r1.shape or np.max(np.abs(w0 - w1)) > 1e-8:
        raise DomainError(
            f"density operators are not isospectral: {np.round(w0, 12).tolist()} vs "
            f"{np.round(w1, 12).tolist()}"
        )


def distance(
    rho0: ArrayLike, rho1: ArrayLike, cfg: ShootingConfig | None = None, rank_tol: float = 1e-9
) -> DistanceResult:
    """Riemannian distance between isospectral density operators.

    Full rank: multi-start Nelder-Mead shooting over horizontal initial
    controls, minimising ``||pi(psi(1)) - rho1||_F``.  The returned value is the
    smallest beta-norm among converged restarts (an upper bound on the true
    distance).  Pure and distinguishable pairs use closed forms.
    """
    cfg = cfg or ShootingConfig()
    r0 = validate_density(rho0)
    r1 = validate_density(rho1)
    _check_isospectral(r0, r1)
    sigma = spectrum_of(r0, rank_tol)
    n = r0.shape[0]
    if np.linalg.norm(r0 - r1) < 1e-14:
        return DistanceResult(0.0, np.zeros((sigma.k, sigma.k), complex), True, 0.0, "identical")
    if is_distinguishable(r0, r1):
        return DistanceResult(np.pi / 2, None, True, 0.0, "distinguishable")
    if sigma.k == 1:
        a = standard_purification(r0, rank_tol)[:, 0]
        b = standard_purification(r1, rank_tol)[:, 0]
        return DistanceResult(float(np.arccos(min(1.0, abs(np.vdot(a, b))))), None, True, 0.0, "pure")
    if sigma.k != n:
        raise UnsupportedRankError("shooting needs invertible density operators")

    psi0 = standard_purification(r0, rank_tol)
    basis = np.array(horizontal_basis(sigma))
    weights = np.array([gauge_metric(b, b, sigma) for b in basis])

    def control(c):
        return np.tensordot(c, basis, axes=1)

    def mismatch(c):
        return float(np.linalg.norm(endpoint(psi0, sigma, control(c), cfg.steps) - r1))

    rng = np.random.default_rng(cfg.seed)
    runs = []
    for _ in range(cfg.restarts):
        d = rng.standard_normal(len(basis))
        d *= rng.uniform(cfg.min_norm, cfg.max_norm) / np.sqrt(np.sum(weights * d * d))
        opts = {"maxiter": cfg.max_iters, "maxfev": cfg.max_iters * 2, "xatol": 1e-11, "fatol": 1e-14,
                "adaptive": len(basis) > 4}
        res = minimize(mismatch, d, method="Nelder-Mead", options=opts)
        # NM stalls on the cone-shaped minimum; one restart from the incumbent polishes it.
        res = minimize(mismatch, res.x, method="Nelder-Mead", options=opts)
        x = res.x
        runs.append((float(np.sqrt(np.sum(weights * x * x))), float(res.fun), control(x)))

    good = [r for r in runs if r[1] < cfg.endpoint_tol]
    if good:
        best = min(good, key=lambda r: r[0])
        return DistanceResult(best[0], best[2], True, best[1], "shooting", runs)
    best = min(runs, key=lambda r: r[1])
    return DistanceResult(best[0], best[2], False, best[1], "shooting", runs)
