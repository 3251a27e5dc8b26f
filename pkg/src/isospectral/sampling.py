"""Seeded random states, observables and drives used by the verification suites."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .core import Spectrum, horizontal_basis, spectrum_of, standard_purification


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(n, random_state=rng)


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_anti_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return 1j * random_hermitian(n, rng, scale)


def random_probabilities(k: int, rng: np.random.Generator, floor: float = 0.02) -> np.ndarray:
    """Distinct probabilities bounded below by ``floor`` (keeps inertia well conditioned)."""
    w = floor + rng.dirichlet(np.ones(k)) * (1 - k * floor)
    return np.sort(w)[::-1]


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    p = np.zeros(n)
    p[:rank] = random_probabilities(rank, rng)
    u = random_unitary(n, rng)
    rho = (u * p[None, :]) @ u.conj().T
    return 0.5 * (rho + rho.conj().T)


def horizontal_control(sigma: Spectrum, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    """Random element of ``u(sigma)^perp`` with the given beta-norm."""
    basis = horizontal_basis(sigma)
    if not basis:
        return np.zeros((sigma.k, sigma.k), complex)
    c = rng.standard_normal(len(basis))
    xi = np.tensordot(c, np.array(basis), axes=1)
    w = np.sqrt(np.real(np.sum(xi.conj() * xi * sigma.p[None, :])))
    return xi * (norm / w)


def parallel_observable(rho: np.ndarray, xi: np.ndarray, hbar: float = 1.0) -> np.ndarray:
    """``i hbar W xi W^dagger`` at the standard purification; parallel when ``xi`` is horizontal."""
    sigma = spectrum_of(rho)
    W = standard_purification(rho) / np.sqrt(sigma.p)[None, :]
    A = 1j * hbar * W @ xi @ W.conj().T
    return 0.5 * (A + A.conj().T)


def smooth_drive(n: int, rng: np.random.Generator, modes: int = 2, scale: float = 1.0):
    """Random Hermitian drive ``H0 + sum_m (sin(w_m t) A_m + cos(w_m t) B_m)``."""
    h0 = random_hermitian(n, rng, scale)
    parts = [
        (rng.uniform(0.5, 3.0), random_hermitian(n, rng, scale), random_hermitian(n, rng, scale))
        for _ in range(modes)
    ]

    def H(t):
        out = h0.copy()
        for w, a, b in parts:
            out = out + np.sin(w * t) * a + np.cos(w * t) * b
        return out

    return H


def swap_drive(rng: np.random.Generator, hbar: float = 1.0):
    """Random drive on C^4 mapping span{e1, e2} onto span{e3, e4} at ``tau``.

    The propagator is ``B(t) exp(-i t H_s / hbar)`` with ``H_s^2 = (hbar w)^2``
    swapping the two blocks at ``w tau = pi/2`` and ``B`` generated by a
    block-diagonal ``K``, so ``H(t) = hbar K + B H_s B^dagger``.
    Returns ``(H, rho0, tau)``.
    """
    w = rng.uniform(0.5, 2.0)
    tau = np.pi / (2 * w)
    M = random_unitary(2, rng)
    Hs = np.zeros((4, 4), complex)
    Hs[:2, 2:] = -1j * M
    Hs[2:, :2] = 1j * M.conj().T
    Hs *= hbar * w
    K = np.zeros((4, 4), complex)
    K[:2, :2] = random_hermitian(2, rng, 0.5)
    K[2:, 2:] = random_hermitian(2, rng, 0.5)
    lam, u = np.linalg.eigh(K)

    def H(t):
        B = (u * np.exp(-1j * lam * t)[None, :]) @ u.conj().T
        return hbar * K + B @ Hs @ B.conj().T

    p = random_probabilities(2, rng, floor=0.05)
    sub = random_density(2, rng)
    lam2, v = np.linalg.eigh(sub)
    rho0 = np.zeros((4, 4), complex)
    rho0[:2, :2] = (v * p[::-1][None, :]) @ v.conj().T
    rho0 = 0.5 * (rho0 + rho0.conj().T)
    rho0 /= np.trace(rho0).real
    return H, rho0, tau
