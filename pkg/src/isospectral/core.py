"""
Spectra, density operators, purifications and the gauge algebra.

Conventions
-----------
- A density operator ``rho`` is an ``(n, n)`` complex Hermitian array.
- A purification ``psi`` is an ``(n, k)`` complex array with
  ``psi^dagger psi = P(sigma)``, ``P(sigma) = diag(p_1, ..., p_k)``.
  Its projection is ``rho = psi psi^dagger``.
- Gauge algebra elements are ``(k, k)`` anti-Hermitian arrays written in the
  eigenbasis of ``P(sigma)``; ``u(sigma)`` is the block-diagonal part with one
  block per group of equal eigenvalues.

Plain ``numpy`` arrays are passed around; the ``validate_*`` helpers check
the invariants at module boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ValidationError

HERMITIAN_TOL = 1e-12
FIBER_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-9

CArray = NDArray[np.complex128]


@dataclass(frozen=True)
class Spectrum:
    """Nonincreasing positive eigenvalues, grouped into multiplicity blocks.

    ``values`` holds every eigenvalue with repetition (length ``k``), and
    ``multiplicities`` the sizes of consecutive groups of equal values.
    """

    values: tuple[float, ...]
    multiplicities: tuple[int, ...]
    rank_tol: float = DEFAULT_RANK_TOL
    _p: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.values, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("spectrum must be a non-empty list of values")
        if np.any(p <= 0):
            raise ValidationError(f"spectrum values must be positive, got {list(p)}")
        if np.any(np.diff(p) > 0):
            raise ValidationError(f"spectrum must be nonincreasing, got {list(p)}")
        if sum(self.multiplicities) != p.size or min(self.multiplicities) < 1:
            raise ValidationError("multiplicities do not partition the spectrum")
        starts = np.cumsum((0,) + self.multiplicities[:-1])
        heads = p[starts]
        if np.any(np.diff(heads) >= 0):
            raise ValidationError("multiplicity groups must be strictly decreasing")
        object.__setattr__(self, "_p", p)

    @classmethod
    def from_values(
        cls, values: Sequence[float], rank_tol: float = DEFAULT_RANK_TOL, sum_tol: float = 1e-12
    ) -> "Spectrum":
        """Sort, group (transitive closeness within ``rank_tol``) and validate."""
        v = np.sort(np.asarray(values, dtype=float))[::-1]
        if v.size == 0:
            raise ValidationError("empty spectrum")
        if abs(v.sum() - 1.0) > sum_tol:
            raise ValidationError(f"spectrum must sum to 1, got {v.sum()!r}")
        groups: list[list[float]] = [[v[0]]]
        for x in v[1:]:
            if groups[-1][-1] - x <= rank_tol:
                groups[-1].append(x)
            else:
                groups.append([x])
        # Representatives are group means so that P(sigma) is exactly block-scalar.
        vals = tuple(float(np.mean(g)) for g in groups for _ in g)
        return cls(vals, tuple(len(g) for g in groups), rank_tol)

    @property
    def k(self) -> int:
        return len(self.values)

    @property
    def p(self) -> NDArray[np.float64]:
        return self._p

    @property
    def distinct(self) -> tuple[float, ...]:
        starts = np.cumsum((0,) + self.multiplicities[:-1])
        return tuple(float(self._p[s]) for s in starts)

    @property
    def blocks(self) -> list[slice]:
        out, start = [], 0
        for m in self.multiplicities:
            out.append(slice(start, start + m))
            start += m
        return out

    @property
    def labels(self) -> NDArray[np.int64]:
        """Block index of each eigenvalue."""
        return np.repeat(np.arange(len(self.multiplicities)), self.multiplicities)

    def P(self) -> CArray:
        return np.diag(self._p).astype(complex)

    def to_json(self) -> dict:
        return {"values": list(self.values), "rank_tol": self.rank_tol}

    @classmethod
    def from_json(cls, obj: dict) -> "Spectrum":
        return cls.from_values(obj["values"], obj.get("rank_tol", DEFAULT_RANK_TOL))


def as_spectrum(sigma) -> Spectrum:
    if isinstance(sigma, Spectrum):
        return sigma
    return Spectrum.from_values(sigma)


# -- validation ---------------------------------------------------------------


def _square(m: ArrayLike, what: str) -> CArray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{what} must be a square matrix, got shape {a.shape}")
    return a


def validate_hermitian(m: ArrayLike, tol: float = HERMITIAN_TOL, what: str = "matrix") -> CArray:
    a = _square(m, what)
    err = np.max(np.abs(a - a.conj().T), initial=0.0)
    if err > tol:
        raise ValidationError(f"{what} is not Hermitian (deviation {err:.3e} > {tol:g})")
    return a


def validate_anti_hermitian(m: ArrayLike, tol: float = HERMITIAN_TOL, what: str = "matrix") -> CArray:
    a = _square(m, what)
    err = np.max(np.abs(a + a.conj().T), initial=0.0)
    if err > tol:
        raise ValidationError(f"{what} is not anti-Hermitian (deviation {err:.3e} > {tol:g})")
    return a


def validate_density(rho: ArrayLike, tol: float = HERMITIAN_TOL) -> CArray:
    """Return ``rho`` as a complex array after checking the density invariants."""
    a = validate_hermitian(rho, tol, "density operator")
    tr = np.trace(a).real
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"density operator must have unit trace, got {tr!r}")
    lo = np.linalg.eigvalsh(a).min()
    if lo < -tol:
        raise ValidationError(f"density operator has negative eigenvalue {lo:.3e}")
    return a


def validate_purification(psi: ArrayLike, sigma: Spectrum, tol: float = FIBER_TOL) -> CArray:
    a = np.asarray(psi, dtype=complex)
    if a.ndim != 2 or a.shape[1] != sigma.k:
        raise ValidationError(f"purification must be n x {sigma.k}, got shape {a.shape}")
    err = np.linalg.norm(a.conj().T @ a - sigma.P())
    if err > tol:
        raise ValidationError(f"psi^dagger psi differs from P(sigma) by {err:.3e} (tol {tol:g})")
    return a


def fiber_spectrum(psi: ArrayLike, rank_tol: float = DEFAULT_RANK_TOL) -> Spectrum:
    """Spectrum read off the diagonal of ``psi^dagger psi``."""
    a = np.asarray(psi, dtype=complex)
    d = np.real(np.einsum("ij,ij->j", a.conj(), a))
    return Spectrum.from_values(d, rank_tol, sum_tol=1e-8)


# -- operations ---------------------------------------------------------------


def _eig_desc(rho: CArray) -> tuple[NDArray[np.float64], CArray]:
    w, v = np.linalg.eigh(rho)
    order = np.argsort(w, kind="stable")[::-1]
    return w[order], v[:, order]


def spectrum_of(rho: ArrayLike, rank_tol: float = DEFAULT_RANK_TOL) -> Spectrum:
    """Positive eigenvalues of ``rho`` above ``rank_tol``, nonincreasing and grouped."""
    a = validate_density(rho)
    w, _ = _eig_desc(a)
    return Spectrum.from_values(w[w > rank_tol], rank_tol, sum_tol=1e-12 + a.shape[0] * rank_tol)


def standard_purification(rho: ArrayLike, rank_tol: float = DEFAULT_RANK_TOL) -> CArray:
    """``psi = E sqrt(P(sigma))`` with ``E`` the eigenvectors ordered by ``sigma``.

    Each eigenvector is phased so its largest-magnitude entry is real and
    positive, which makes the choice deterministic (diagonal ``rho`` gives
    ``diag(sqrt(p))``).
    """
    a = validate_density(rho)
    sigma = spectrum_of(a, rank_tol)
    _, v = _eig_desc(a)
    e = v[:, : sigma.k]
    idx = np.argmax(np.abs(e), axis=0)
    lead = e[idx, np.arange(sigma.k)]
    e = e * (np.abs(lead) / lead)[None, :]
    return e * np.sqrt(sigma.p)[None, :]


def hs_metric(X: ArrayLike, Y: ArrayLike) -> float:
    """Real part of the Hilbert-Schmidt product, ``1/2 Tr(X^dagger Y + Y^dagger X)``."""
    x = np.asarray(X, dtype=complex)
    y = np.asarray(Y, dtype=complex)
    if x.shape != y.shape:
        raise ValidationError(f"shape mismatch {x.shape} vs {y.shape}")
    return float(np.real(np.vdot(x, y)))


def _weights(sigma) -> NDArray[np.float64]:
    return sigma.p if isinstance(sigma, Spectrum) else np.asarray(sigma, dtype=float)


def gauge_metric(xi: ArrayLike, eta: ArrayLike, sigma) -> float:
    """``1/2 Tr((xi^dagger eta + eta^dagger xi) P(sigma))``.

    ``sigma`` may be a :class:`Spectrum` or a plain weight vector.
    """
    p = _weights(sigma)
    x = np.asarray(xi, dtype=complex)
    y = np.asarray(eta, dtype=complex)
    if x.shape != y.shape or x.shape != (p.size, p.size):
        raise ValidationError(f"gauge elements must be {p.size}x{p.size}, got {x.shape}, {y.shape}")
    return float(np.real(np.sum(x.conj() * y * p[None, :])))


def gauge_norm(xi: ArrayLike, sigma) -> float:
    return float(np.sqrt(max(gauge_metric(xi, xi, sigma), 0.0)))


def gauge_algebra_basis(sigma: Spectrum) -> list[CArray]:
    """Real basis of ``u(sigma)``, one set of ``u(m)`` generators per block."""
    k = sigma.k
    basis = []
    for blk in sigma.blocks:
        idx = range(blk.start, blk.stop)
        for a in idx:
            e = np.zeros((k, k), complex)
            e[a, a] = 1j
            basis.append(e)
        for a in idx:
            for b in idx:
                if b <= a:
                    continue
                re = np.zeros((k, k), complex)
                re[a, b], re[b, a] = 1.0, -1.0
                im = np.zeros((k, k), complex)
                im[a, b] = im[b, a] = 1j
                basis.extend((re, im))
    return basis


def block_mask(sigma: Spectrum) -> NDArray[np.bool_]:
    lab = sigma.labels
    return lab[:, None] == lab[None, :]


def split_gauge(xi: ArrayLike, sigma: Spectrum) -> tuple[CArray, CArray]:
    """Split ``xi`` into its ``u(sigma)`` part and the beta-orthogonal remainder.

    The pairing with any block-diagonal element only sees the diagonal blocks
    of ``xi`` (``P`` is block-scalar), so the projection is the block mask.
    """
    x = validate_anti_hermitian(xi, tol=1e-10, what="gauge element")
    if x.shape != (sigma.k, sigma.k):
        raise ValidationError(f"gauge element must be {sigma.k}x{sigma.k}, got {x.shape}")
    par = np.where(block_mask(sigma), x, 0)
    return par, x - par


def horizontal_dimension(sigma: Spectrum) -> int:
    return sigma.k**2 - sum(m * m for m in sigma.multiplicities)


def horizontal_basis(sigma: Spectrum) -> list[CArray]:
    """Real basis of ``u(sigma)^perp``: off-block generators ``E_ab - E_ba`` and ``i(E_ab + E_ba)``."""
    k, lab = sigma.k, sigma.labels
    out = []
    for a in range(k):
        for b in range(a + 1, k):
            if lab[a] == lab[b]:
                continue
            re = np.zeros((k, k), complex)
            re[a, b], re[b, a] = 1.0, -1.0
            im = np.zeros((k, k), complex)
            im[a, b] = im[b, a] = 1j
            out.extend((re, im))
    return out
