"""
Mechanical connection on the purification bundle and the induced metric.

Fiber directions at ``psi`` are ``psi eta^dagger`` for ``eta`` in ``u(sigma)``.
The connection form solves ``I_psi xi = J_psi(X)`` in a basis of ``u(sigma)``;
the horizontal part of ``X`` is what remains after subtracting ``psi xi^dagger``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .core import (
    DEFAULT_RANK_TOL,
    CArray,
    Spectrum,
    block_mask,
    fiber_spectrum,
    gauge_algebra_basis,
    gauge_metric,
    hs_metric,
    spectrum_of,
    standard_purification,
    validate_density,
    validate_hermitian,
)
from .errors import ConditioningError, GeometryError, UnsupportedRankError

COND_LIMIT = 1e12


@dataclass(frozen=True)
class ConnectionEvaluation:
    """Value of the connection form at a tangent vector and the induced split."""

    xi: CArray
    vertical: CArray
    horizontal: CArray


def moment_map(psi: ArrayLike, X: ArrayLike, basis: list) -> np.ndarray:
    """Coordinates ``J_psi(X) . xi_i = G(X, psi xi_i^dagger)``."""
    psi = np.asarray(psi, complex)
    return np.array([hs_metric(X, psi @ b.conj().T) for b in basis])


def locked_inertia(psi: ArrayLike, basis: list) -> np.ndarray:
    """Gram matrix ``G(psi xi_i^dagger, psi xi_j^dagger)`` of the fiber directions."""
    psi = np.asarray(psi, complex)
    dirs = [psi @ b.conj().T for b in basis]
    m = len(dirs)
    out = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            out[i, j] = out[j, i] = hs_metric(dirs[i], dirs[j])
    return out


def connection_form(
    psi: ArrayLike, X: ArrayLike, sigma: Spectrum | None = None
) -> ConnectionEvaluation:
    psi = np.asarray(psi, complex)
    X = np.asarray(X, complex)
    if X.shape != psi.shape:
        raise GeometryError(f"tangent shape {X.shape} does not match psi {psi.shape}")
    sigma = sigma or fiber_spectrum(psi)
    basis = gauge_algebra_basis(sigma)
    inertia = locked_inertia(psi, basis)
    if np.linalg.cond(inertia) > COND_LIMIT:
        raise ConditioningError("locked inertia tensor is numerically singular")
    coef = np.linalg.solve(inertia, moment_map(psi, X, basis))
    xi = np.tensordot(coef, np.array(basis), axes=1)
    vertical = psi @ xi.conj().T
    return ConnectionEvaluation(xi, vertical, X - vertical)


def observable_field(A_hat: ArrayLike, psi: ArrayLike, hbar: float = 1.0) -> CArray:
    """Generator of ``psi -> exp(eps A / (i hbar)) psi`` at ``eps = 0``."""
    return np.asarray(A_hat, complex) @ np.asarray(psi, complex) / (1j * hbar)


def xi_A(
    rho: ArrayLike, A_hat: ArrayLike, hbar: float = 1.0, rank_tol: float = DEFAULT_RANK_TOL
) -> tuple[CArray, CArray]:
    """Connection value of the observable field and its part orthogonal to ``i 1``.

    Evaluated at the standard purification; other fiber representatives give
    a ``U(sigma)``-conjugate result.
    """
    rho = validate_density(rho)
    sigma = spectrum_of(rho, rank_tol)
    psi = standard_purification(rho, rank_tol)
    xi = connection_form(psi, observable_field(A_hat, psi, hbar), sigma).xi
    unit = 1j * np.eye(sigma.k)
    along = gauge_metric(xi, unit, sigma) / gauge_metric(unit, unit, sigma)
    return xi, xi - along * unit


def field_metric(
    rho: ArrayLike, A_hat: ArrayLike, hbar: float = 1.0, rank_tol: float = DEFAULT_RANK_TOL
) -> float:
    """``g(X_A, X_A)``: squared norm of the horizontal part of the observable field.

    Valid at any rank, since the horizontal part is isometric to the pushed-down vector.
    """
    rho = validate_density(rho)
    sigma = spectrum_of(rho, rank_tol)
    psi = standard_purification(rho, rank_tol)
    h = connection_form(psi, observable_field(A_hat, psi, hbar), sigma).horizontal
    return hs_metric(h, h)


def uncertainty(rho: ArrayLike, A_hat: ArrayLike) -> float:
    rho = np.asarray(rho, complex)
    A = np.asarray(A_hat, complex)
    mean = np.trace(A @ rho).real
    # centred form avoids cancellation when A is close to a multiple of the identity
    C = A - mean * np.eye(A.shape[0])
    var = np.trace(C @ C @ rho).real
    if var < -1e-9:
        raise ArithmeticError(f"negative variance {var:.3e}")
    return float(np.sqrt(max(var, 0.0)))


def is_parallel_at(
    A_hat: ArrayLike, rho: ArrayLike, tol: float = 1e-10, hbar: float = 1.0
) -> bool:
    rho = validate_density(rho)
    xi, _ = xi_A(rho, A_hat, hbar)
    sigma = spectrum_of(rho)
    return np.sqrt(max(gauge_metric(xi, xi, sigma), 0.0)) < tol


def tangent_lift(psi: ArrayLike, rho_dot: ArrayLike, sigma: Spectrum | None = None) -> CArray:
    """Horizontal lift at invertible ``psi`` of a tangent ``rho_dot`` to the orbit.

    With ``W = psi P^{-1/2}`` every horizontal vector has the form
    ``W xi P^{1/2}`` with ``xi`` in ``u(sigma)^perp``, and it projects to
    ``W [xi, P] W^dagger``; hence ``xi_ij = (W^dagger rho_dot W)_ij / (p_j - p_i)``
    off the diagonal blocks.  Components of ``rho_dot`` that are not tangent to
    the orbit (inside the diagonal blocks) are discarded.
    """
    psi = np.asarray(psi, complex)
    if psi.shape[0] != psi.shape[1]:
        raise UnsupportedRankError("tangent lift needs an invertible density operator")
    sigma = sigma or fiber_spectrum(psi)
    root = np.sqrt(sigma.p)
    W = psi / root[None, :]
    d = W.conj().T @ np.asarray(rho_dot, complex) @ W
    gap = sigma.p[None, :] - sigma.p[:, None]
    off = ~block_mask(sigma)
    xi = np.zeros_like(d)
    xi[off] = d[off] / gap[off]
    return W @ xi * root[None, :]


def submersion_metric(rho: ArrayLike, rho_dot1: ArrayLike, rho_dot2: ArrayLike) -> float:
    """Base metric ``g(rho_dot1, rho_dot2)`` on an orbit of invertible density operators."""
    rho = validate_density(rho)
    sigma = spectrum_of(rho)
    if sigma.k != rho.shape[0]:
        raise UnsupportedRankError(
            f"submersion_metric needs full rank, got rank {sigma.k} of {rho.shape[0]}"
        )
    d1 = validate_hermitian(rho_dot1, tol=1e-9, what="tangent")
    d2 = validate_hermitian(rho_dot2, tol=1e-9, what="tangent")
    psi = standard_purification(rho)
    return hs_metric(tangent_lift(psi, d1, sigma), tangent_lift(psi, d2, sigma))
