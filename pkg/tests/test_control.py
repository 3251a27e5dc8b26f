import numpy as np
import pytest

from isospectral.control import (
    ShootingConfig,
    arnold_euler_flow,
    coadjoint,
    distance,
    distinguishable_geodesic,
    endpoint,
    geodesic_from,
    horizontal_residual,
    qubit_geodesic_rho,
    sphere_chord_bound,
    synth_hamiltonian,
    two_eigenvalue_geodesic,
)
from isospectral.core import Spectrum, gauge_metric, spectrum_of, standard_purification
from isospectral.dynamics import curve_length, energy_dispersion, evolve_von_neumann
from isospectral.errors import DomainError, UnsupportedRankError, ValidationError
from isospectral.sampling import (
    horizontal_control,
    random_anti_hermitian,
    random_density,
    random_unitary,
)

from conftest import EPS, P1, P2, RHO_END, qubit_rho, qubit_xi

SIGMA_Q = Spectrum.from_values([P1, P2])
SIGMA_3 = Spectrum.from_values([0.5, 0.3, 0.2])


def u_basis(n):
    out = []
    for a in range(n):
        e = np.zeros((n, n), complex)
        e[a, a] = 1j
        out.append(e)
        for b in range(a + 1, n):
            e = np.zeros((n, n), complex)
            e[a, b], e[b, a] = 1, -1
            out.append(e)
            e = np.zeros((n, n), complex)
            e[a, b] = e[b, a] = 1j
            out.append(e)
    return out


def gram_coadjoint(xi, sigma):
    """Solve beta(z, eta_j) = beta(xi, [xi, eta_j]) over a basis of u(n)."""
    basis = u_basis(sigma.k)
    G = np.array([[gauge_metric(a, b, sigma) for b in basis] for a in basis])
    rhs = np.array([gauge_metric(xi, xi @ b - b @ xi, sigma) for b in basis])
    return np.tensordot(np.linalg.solve(G, rhs), np.array(basis), axes=1)


def bloch(rho):
    return np.real([rho[0, 1] + rho[1, 0], 1j * (rho[0, 1] - rho[1, 0]), rho[0, 0] - rho[1, 1]])


def random_spectrum(n, rng):
    return Spectrum.from_values(np.sort(0.04 + rng.dirichlet(np.ones(n)) * (1 - 0.04 * n))[::-1])


class TestCoadjoint:
    def test_diagonal_is_fixed(self):
        assert np.max(np.abs(coadjoint(np.diag([1j, -2j, 0.5j]), SIGMA_3))) == 0

    def test_two_eigenvalues_vanish(self, rng):
        for values in [[P1, P2], [0.4, 0.4, 0.2], [0.3, 0.3, 0.2, 0.2], [0.4, 0.2, 0.2, 0.2]]:
            sigma = Spectrum.from_values(values)
            for _ in range(10):
                xi = horizontal_control(sigma, rng, rng.uniform(0.1, 3))
                assert np.max(np.abs(coadjoint(xi, sigma))) <= 1e-14

    def test_three_eigenvalues(self):
        xi = np.zeros((3, 3), complex)
        xi[0, 1] = xi[1, 2] = 1
        xi = xi - xi.conj().T
        z = coadjoint(xi, SIGMA_3)
        assert np.linalg.norm(z) > 0.01
        np.testing.assert_allclose(z, gram_coadjoint(xi, SIGMA_3), atol=1e-10)

    def test_matches_gram_oracle(self, rng):
        for i in range(30):
            n = 2 + i % 3
            sigma = random_spectrum(n, rng)
            xi = random_anti_hermitian(n, rng)
            np.testing.assert_allclose(coadjoint(xi, sigma), gram_coadjoint(xi, sigma), atol=1e-10)


class TestArnoldEuler:
    def test_diagonal_fixed_point(self):
        x0 = np.diag([1j, 0.5j, -1j])
        flow = arnold_euler_flow(x0, SIGMA_3, 1.0, 50)
        assert np.max(np.abs(flow.frames - x0)) == 0

    def test_two_eigenvalue_constant(self, rng):
        sigma = Spectrum.from_values([0.4, 0.4, 0.2])
        x0 = horizontal_control(sigma, rng, 1.0)
        flow = arnold_euler_flow(x0, sigma, 1.0, 50)
        assert np.max(np.abs(flow.frames - x0)) < 1e-14

    def test_three_eigenvalue_conserves_energy(self, rng):
        x0 = random_anti_hermitian(3, rng)
        flow = arnold_euler_flow(x0, SIGMA_3, 1.0, 1000)
        assert np.linalg.norm(flow.frames[-1] - x0) > 1e-3
        e = [gauge_metric(x, x, SIGMA_3) for x in flow.frames]
        assert np.max(np.abs(np.array(e) - e[0])) / e[0] < 1e-8

    def test_horizontality_preserved(self, rng):
        x0 = horizontal_control(SIGMA_3, rng, 1.5)
        flow = arnold_euler_flow(x0, SIGMA_3, 1.0, 1000)
        assert max(horizontal_residual(x, SIGMA_3) for x in flow.frames) < 1e-6

    def test_rejects_non_anti_hermitian(self):
        with pytest.raises(ValidationError):
            arnold_euler_flow(np.eye(3), SIGMA_3)


class TestSynth:
    def test_constant_horizontal(self):
        psi0 = np.diag(np.sqrt([P1, P2]))
        H = synth_hamiltonian(psi0, qubit_xi(EPS), steps=100)
        assert np.max(np.abs(H.frames - 1j * qubit_xi(EPS))) < 1e-12

    def test_zero(self):
        H = synth_hamiltonian(np.diag(np.sqrt([P1, P2])), np.zeros((2, 2)), steps=10)
        assert np.max(np.abs(H.frames)) == 0

    def test_piecewise_control(self, rng):
        rho0 = random_density(3, rng)
        psi0 = standard_purification(rho0)
        sigma = spectrum_of(rho0)
        x1, x2 = random_anti_hermitian(3, rng), random_anti_hermitian(3, rng)

        def xi(t):
            return x1 if t < 0.5 else x2

        H = synth_hamiltonian(psi0, xi, steps=1000)
        rho = evolve_von_neumann(H, rho0, 1.0, 1000)
        from scipy.linalg import expm

        W = psi0 / np.sqrt(sigma.p)[None, :]
        U = W @ expm(0.5 * x1) @ expm(0.5 * x2)
        expected = (U * sigma.p[None, :]) @ U.conj().T
        assert np.linalg.norm(rho.frames[-1] - expected) < 1e-6

    def test_rank_deficient(self):
        with pytest.raises(UnsupportedRankError):
            synth_hamiltonian(np.array([[1.0], [0.0]]), np.zeros((1, 1)))


class TestGeodesic:
    def test_qubit(self, rho_q):
        sol = geodesic_from(rho_q, qubit_xi(EPS), 1.0, 1000)
        assert np.linalg.norm(sol.rho_curve.frames[-1] - RHO_END) < 1e-6
        assert sol.length == pytest.approx(EPS, abs=1e-15)
        disp = energy_dispersion(sol.hamiltonian, sol.rho_curve)
        assert abs(disp - curve_length(sol.psi_curve)) < 1e-5

    def test_zero(self, rho_q):
        sol = geodesic_from(rho_q, np.zeros((2, 2)), 1.0, 20)
        assert sol.length == 0
        assert np.max(np.abs(sol.rho_curve.frames - rho_q)) < 1e-15

    def test_three_levels(self, rng):
        rho0 = random_density(3, rng)
        x0 = horizontal_control(spectrum_of(rho0), rng, 0.7)
        sol = geodesic_from(rho0, x0, 1.0, 1000)
        assert sol.max_horizontal_residual < 1e-6
        length = curve_length(sol.psi_curve)
        assert length == pytest.approx(0.7, abs=1e-5)
        assert abs(energy_dispersion(sol.hamiltonian, sol.rho_curve) - length) < 1e-5

    def test_not_horizontal(self, rho_q):
        with pytest.raises(DomainError, match="parallel part norm"):
            geodesic_from(rho_q, np.diag([1j, 0]), 1.0, 10)

    def test_rank_deficient(self):
        with pytest.raises(UnsupportedRankError):
            geodesic_from(np.diag([1.0, 0.0]), np.zeros((1, 1)))


class TestTwoEigenvalue:
    def test_qubit_start(self, rho_q):
        sol = two_eigenvalue_geodesic(rho_q, qubit_xi(EPS), 1.0, 10)
        np.testing.assert_allclose(sol.rho_curve.frames[0], rho_q, atol=1e-15)
        np.testing.assert_allclose(sol.rho_curve.frames[-1], RHO_END, atol=1e-14)

    def test_theta_phase(self):
        r0 = qubit_geodesic_rho(P1, P2, EPS, 0.0, 1.0)
        r = qubit_geodesic_rho(P1, P2, EPS, np.pi / 3, 1.0)
        np.testing.assert_allclose(np.diag(r), np.diag(r0), atol=1e-15)
        assert r[0, 1] == pytest.approx(np.exp(1j * np.pi / 3) * -0.21036774620197413, abs=1e-15)
        np.testing.assert_allclose(r, qubit_rho(1.0, theta=np.pi / 3), atol=1e-15)

    @pytest.mark.parametrize("values", [[P1, P2], [0.4, 0.4, 0.2], [0.3, 0.3, 0.2, 0.2]])
    def test_matches_generic_integrator(self, rng, values):
        sigma = Spectrum.from_values(values)
        n = sigma.k
        U = random_unitary(n, rng)
        rho0 = (U * sigma.p[None, :]) @ U.conj().T
        x0 = horizontal_control(sigma, rng, 0.9)
        fast = two_eigenvalue_geodesic(rho0, x0, 1.0, 200)
        slow = geodesic_from(rho0, x0, 1.0, 200)
        assert np.max(np.abs(fast.rho_curve.frames - slow.rho_curve.frames)) < 1e-9

    def test_rejects_three_values(self, rng):
        with pytest.raises(DomainError):
            two_eigenvalue_geodesic(np.diag(SIGMA_3.p), horizontal_control(SIGMA_3, rng))


class TestDistance:
    def test_identical(self, rng):
        rho = random_density(3, rng)
        d, xi0, ok = distance(rho, rho)
        assert d == 0 and ok

    def test_qubit_fixture(self, rho_q):
        res = distance(rho_q, RHO_END)
        assert res.converged
        assert res.dist == pytest.approx(EPS, abs=1e-5)

    def test_qubit_bloch_angle(self, rng):
        for _ in range(3):
            sigma = random_spectrum(2, rng)
            r0, r1 = (
                (U * sigma.p[None, :]) @ U.conj().T
                for U in (random_unitary(2, rng), random_unitary(2, rng))
            )
            b0, b1 = bloch(r0), bloch(r1)
            angle = np.arccos(np.clip(b0 @ b1 / (np.linalg.norm(b0) * np.linalg.norm(b1)), -1, 1))
            res = distance(r0, r1, ShootingConfig(restarts=4))
            assert res.converged
            assert res.dist == pytest.approx(angle / 2, abs=1e-5)
            assert res.dist >= sphere_chord_bound(r0, r1) - 1e-9

    def test_pure_orthogonal(self):
        d, _, ok = distance(np.diag([1.0, 0.0, 0.0]), np.diag([0.0, 0.0, 1.0]))
        assert ok and d == pytest.approx(np.pi / 2, abs=1e-15)

    def test_pure_overlap(self):
        a = np.array([1.0, 0.0])
        b = np.array([np.cos(0.3), np.sin(0.3)])
        d, _, _ = distance(np.outer(a, a), np.outer(b, b))
        assert d == pytest.approx(0.3, abs=1e-12)

    def test_not_isospectral(self):
        with pytest.raises(DomainError, match=r"0\.7.*0\.6"):
            distance(np.diag([0.7, 0.3]), np.diag([0.6, 0.4]))

    def test_rank_deficient_mixed(self, rng):
        rho = random_density(3, rng, rank=2)
        U = random_unitary(3, rng)
        with pytest.raises(UnsupportedRankError):
            distance(rho, U @ rho @ U.conj().T)

    def test_chord_bound_tight_on_qubit(self, rho_q):
        assert sphere_chord_bound(rho_q, RHO_END) == pytest.approx(EPS, abs=1e-12)

    def test_endpoint_matches_geodesic(self, rng):
        rho0 = np.diag(SIGMA_3.p).astype(complex)
        x0 = horizontal_control(SIGMA_3, rng, 0.5)
        sol = geodesic_from(rho0, x0, 1.0, 400)
        end = endpoint(standard_purification(rho0), SIGMA_3, x0, 400)
        assert np.linalg.norm(end - sol.rho_curve.frames[-1]) < 1e-9

    @pytest.mark.slow
    def test_three_levels(self, rng):
        rho0 = np.diag(SIGMA_3.p).astype(complex)
        x0 = horizontal_control(SIGMA_3, rng, 0.3)
        rho1 = endpoint(standard_purification(rho0), SIGMA_3, x0, 200)
        res = distance(rho0, rho1, ShootingConfig(restarts=1, steps=64, max_norm=1.0))
        assert res.converged
        assert res.dist == pytest.approx(0.3, abs=1e-6)
        assert res.dist >= sphere_chord_bound(rho0, rho1) - 1e-9


class TestShootingConfig:
    def test_json_roundtrip(self):
        cfg = ShootingConfig(restarts=3, seed=5)
        assert ShootingConfig.from_json(cfg.to_json()) == cfg

    def test_from_string_ignores_unknown(self):
        cfg = ShootingConfig.from_json('{"restarts": 2, "comment": "x"}')
        assert cfg.restarts == 2


class TestDistinguishableGeodesic:
    def test_pure(self):
        traj = distinguishable_geodesic([[1.0], [0.0]], [[0.0], [1.0]], 100)
        np.testing.assert_allclose(traj.frames[-1], [[0], [1]], atol=1e-15)

    def test_block(self):
        s = np.sqrt([P1, P2])
        psi0 = np.zeros((4, 2), complex)
        psi1 = np.zeros((4, 2), complex)
        psi0[[0, 1], [0, 1]] = s
        psi1[[2, 3], [0, 1]] = s
        traj = distinguishable_geodesic(psi0, psi1, 1000)
        P = np.diag([P1, P2])
        f = traj.frames
        fh = np.conj(np.transpose(f, (0, 2, 1)))
        vel = -np.sin(traj.times)[:, None, None] * psi0 + np.cos(traj.times)[:, None, None] * psi1
        assert np.max(np.abs(fh @ f - P)) < 1e-10
        assert np.max(np.abs(fh @ vel)) < 1e-10
        assert curve_length(traj) == pytest.approx(np.pi / 2, abs=1e-6)

    def test_overlapping(self):
        with pytest.raises(DomainError):
            distinguishable_geodesic([[1.0], [0.0]], [[np.sqrt(0.5)], [np.sqrt(0.5)]])


class TestGeodesicProperties:
    def test_hamiltonian_parallel_along_curve(self, rng):
        rho0 = random_density(3, rng)
        sol = geodesic_from(rho0, horizontal_control(spectrum_of(rho0), rng, 0.6), 1.0, 400)
        from isospectral.connection import is_parallel_at

        for H, rho in zip(sol.hamiltonian.frames[::20], sol.rho_curve.frames[::20]):
            assert is_parallel_at(H, rho, tol=1e-6)

    def test_dispersion_dominates_distance(self, rng, rho_q):
        from isospectral.sampling import smooth_drive

        for _ in range(4):
            H = smooth_drive(2, rng, scale=0.5)
            traj = evolve_von_neumann(H, rho_q, 1.0, 400)
            d = distance(rho_q, traj.frames[-1], ShootingConfig(restarts=4))
            assert d.converged
            assert energy_dispersion(H, traj) >= d.dist - 1e-4

    def test_distance_monotone_in_restarts(self, rho_q):
        target = qubit_rho(1.0, eps=0.9, theta=0.4)
        d2 = distance(rho_q, target, ShootingConfig(restarts=2)).dist
        d5 = distance(rho_q, target, ShootingConfig(restarts=5)).dist
        assert d5 <= d2 + 1e-12
        assert abs(d5 - 0.9) < 1e-5
