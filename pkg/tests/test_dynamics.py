import numpy as np
import pytest

from rdmsim import (
    Grid1D,
    PotentialSpec,
    WaveFunction1D,
    WaveFunction2D,
    evolve,
    gaussian_packet,
    hartree_self_potential,
    normalize,
    schmidt_purity,
    soft_coulomb,
    stationary_evolution,
    strang_step,
)
from rdmsim.errors import (
    InvalidDurationError,
    NonpositiveSofteningError,
    TimestepTooLargeError,
)
from conftest import random_state


class TestSoftCoulomb:
    def test_value_at_origin(self):
        assert soft_coulomb(0.0, 2.5, 0.5) == pytest.approx(5.0, abs=1e-14)

    def test_zero_charge(self):
        sep = np.linspace(-5, 5, 11)
        assert np.all(soft_coulomb(sep, 0.0, 0.3) == 0.0)

    def test_separation_equal_softening(self):
        eps = 0.7
        assert soft_coulomb(eps, 1.0, eps) == pytest.approx(1.0 / (eps * np.sqrt(2.0)), abs=1e-14)

    def test_even_and_monotone(self):
        sep = np.linspace(0.0, 10.0, 200)
        v = soft_coulomb(sep, 1.0, 0.2)
        assert np.allclose(v, soft_coulomb(-sep, 1.0, 0.2))
        assert np.all(np.diff(v) < 0)

    def test_softening_required(self):
        with pytest.raises(NonpositiveSofteningError):
            soft_coulomb(1.0, 1.0, 0.0)
        with pytest.raises(NonpositiveSofteningError):
            PotentialSpec(softening=-1.0)


class TestStrangStep:
    def test_plane_wave_exact_phase(self, grid, free_potential):
        k = 2.0 * np.pi * 8 / grid.length  # a grid mode
        psi = normalize(WaveFunction1D(grid, np.exp(1j * k * grid.x)))
        dt = 1e-3
        out = strang_step(psi, free_potential, dt)
        expected = psi.amp * np.exp(-1j * k ** 2 * dt / 2.0)
        assert np.max(np.abs(out.amp - expected)) <= 1e-12

    def test_harmonic_ground_state_stationary(self, harmonic_ground, harmonic_potential):
        # oracle: the analytic eigenmode's density must not move
        state = harmonic_ground
        for _ in range(100):
            state = strang_step(state, harmonic_potential, 5e-4)
        drift = np.max(np.abs(np.abs(state.amp) ** 2 - np.abs(harmonic_ground.amp) ** 2))
        assert drift <= 1e-6

    @pytest.mark.parametrize("seed", [0, 1])
    def test_norm_preserved_per_step(self, grid, harmonic_potential, seed):
        state = random_state(grid, seed=seed)
        out = strang_step(state, harmonic_potential, 1e-3)
        assert abs(out.norm() - state.norm()) <= 1e-12

    def test_timestep_guard(self, grid, free_potential):
        psi = gaussian_packet(grid, 0.0, 1.0)
        e_max = (np.pi / grid.dx) ** 2 / 2.0
        with pytest.raises(TimestepTooLargeError):
            strang_step(psi, free_potential, 1.01 * np.pi / e_max)

    def test_time_reversal(self, grid, harmonic_potential):
        state = random_state(grid, seed=5)
        fwd = state
        for _ in range(100):
            fwd = strang_step(fwd, harmonic_potential, 1e-3)
        back = fwd
        for _ in range(100):
            back = strang_step(back, harmonic_potential, -1e-3)
        dist = np.sqrt(np.sum(np.abs(back.amp - state.amp) ** 2) * grid.dx)
        assert dist <= 1e-10


class TestEvolve:
    def test_rejects_zero_duration(self, grid, free_potential):
        psi = gaussian_packet(grid, 0.0, 1.0)
        with pytest.raises(InvalidDurationError):
            evolve(psi, free_potential, 0.0, 1e-3)

    def test_rejects_nondividing_dt(self, grid, free_potential):
        psi = gaussian_packet(grid, 0.0, 1.0)
        with pytest.raises(InvalidDurationError):
            evolve(psi, free_potential, 1.0, 3e-4)

    def test_snapshot_cadence(self, grid, free_potential):
        psi = gaussian_packet(grid, 0.0, 1.0)
        res = evolve(psi, free_potential, 0.1, 1e-3, record_stride=20)
        assert res.n_snapshots == 6
        assert np.allclose(np.diff(res.times), 0.02)
        assert res.times[-1] == pytest.approx(0.1)

    def test_free_dispersion(self, wide_grid, free_potential):
        # oracle: sigma(t) = sigma0 sqrt(1 + (hbar t / (2 m sigma0^2))^2)
        sigma0 = 1.0
        psi = gaussian_packet(wide_grid, 0.0, sigma0)
        t_final = 3.464  # width roughly doubled
        res = evolve(psi, free_potential, t_final, 1e-3, record_stride=3464)
        rho = np.abs(res.final.amp) ** 2
        x = wide_grid.x
        mean = np.sum(x * rho) * wide_grid.dx
        var = np.sum(x ** 2 * rho) * wide_grid.dx - mean ** 2
        expected = sigma0 * np.sqrt(1.0 + (t_final / (2.0 * sigma0 ** 2)) ** 2)
        assert np.sqrt(var) == pytest.approx(expected, rel=1e-3)

    def test_boosted_drift(self, wide_grid, free_potential):
        # oracle: <x>(t) = <x>(0) + hbar k0 t / m
        k0 = 2.0
        psi = gaussian_packet(wide_grid, -10.0, 1.0, k0=k0)
        res = evolve(psi, free_potential, 5.0, 1e-3, record_stride=5000)
        rho = np.abs(res.final.amp) ** 2
        mean = np.sum(wide_grid.x * rho) * wide_grid.dx
        assert mean == pytest.approx(-10.0 + k0 * 5.0, rel=1e-4)

    def test_unitarity_long_run(self, grid, harmonic_potential):
        psi = gaussian_packet(grid, 2.0, 1.0)
        res = evolve(psi, harmonic_potential, 2.0, 1e-3, record_stride=100)
        assert res.max_norm_deviation <= 1e-9

    def test_linearity(self, grid, harmonic_potential):
        a, b = 0.6, 0.8j
        psi1 = gaussian_packet(grid, -3.0, 0.8)
        psi2 = gaussian_packet(grid, 3.0, 0.8)  # disjoint enough: orthogonal to 1e-6
        combo = normalize(psi1.with_amp(a * psi1.amp + b * psi2.amp))
        t_final, dt = 0.2, 1e-3
        r_combo = evolve(combo, harmonic_potential, t_final, dt, record_stride=200)
        r1 = evolve(psi1, harmonic_potential, t_final, dt, record_stride=200)
        r2 = evolve(psi2, harmonic_potential, t_final, dt, record_stride=200)
        nrm = np.sqrt(np.sum(np.abs(a * psi1.amp + b * psi2.amp) ** 2) * grid.dx)
        lhs = r_combo.final.amp
        rhs = (a * r1.final.amp + b * r2.final.amp) / nrm
        dist = np.sqrt(np.sum(np.abs(lhs - rhs) ** 2) * grid.dx)
        assert dist <= 1e-9

    def test_second_order_accuracy(self, grid, harmonic_potential):
        psi = gaussian_packet(grid, 2.0, 1.0)
        t_final = 0.128
        def final(dt):
            return evolve(psi, harmonic_potential, t_final, dt,
                          record_stride=round(t_final / dt)).final.amp
        ref = final(1e-3 / 8)
        err = lambda amp: np.sqrt(np.sum(np.abs(amp - ref) ** 2) * grid.dx)
        ratio = err(final(1e-3)) / err(final(5e-4))
        assert 3.5 <= ratio <= 4.5

    def test_two_particle_potential_shape(self, grid):
        # interacting 2D step keeps the norm
        a = gaussian_packet(grid, -3.0, 0.8)
        b = gaussian_packet(grid, 3.0, 0.8)
        psi2 = WaveFunction2D(grid, grid, np.outer(a.amp, b.amp))
        pot = PotentialSpec(softening=0.25, q1q2=-2.0)
        out = strang_step(psi2, pot, 1e-3)
        assert abs(out.norm() - 1.0) <= 1e-12

    def test_stationary_record(self, harmonic_ground):
        res = stationary_evolution(harmonic_ground, 1e-3, 100)
        assert res.n_snapshots == 100
        assert res.states[0] is res.states[-1]
        assert np.all(np.abs(res.norms - 1.0) <= 1e-12)


class TestHartreeSelfPotential:
    def test_zero_coupling(self, grid):
        psi = gaussian_packet(grid, 0.0, 1.0)
        assert np.all(hartree_self_potential(psi, 0.0, 0.5) == 0.0)

    def test_symmetric_double_packet(self, grid):
        left = gaussian_packet(grid, -3.0, 0.6)
        right = gaussian_packet(grid, 3.0, 0.6)
        both = normalize(left.with_amp(left.amp + right.amp))
        u = hartree_self_potential(both, 2.0, 0.5)
        # x = 0 is a grid point: reflection maps stored points onto stored points
        center = np.argmin(np.abs(grid.x))
        flipped = u[center - 200:center + 201][::-1]
        assert np.max(np.abs(u[center - 200:center + 201] - flipped)) <= 1e-12

    def test_far_field_of_narrow_packet(self):
        g = Grid1D(-32.0, 32.0, 2048)
        sigma = 2.0 * g.dx
        eps = 50.0 * sigma
        lam = 7.0
        psi = gaussian_packet(g, 0.0, sigma)
        u = hartree_self_potential(psi, lam, eps)
        far = (np.abs(g.x) > 10.0 * sigma) & (np.abs(g.x) < 25.0)
        ref = lam * soft_coulomb(g.x[far], 1.0, eps)
        assert np.max(np.abs(u[far] / ref - 1.0)) <= 1e-3

    def test_matches_direct_quadrature(self):
        # oracle: plain double loop over grid points
        g = Grid1D(-16.0, 16.0, 128)
        psi = gaussian_packet(g, 1.0, 0.8)
        lam, eps = 3.0, 0.5
        u = hartree_self_potential(psi, lam, eps)
        rho = np.abs(psi.amp) ** 2
        direct = np.array([
            lam * np.sum(rho / np.sqrt((xi - g.x) ** 2 + eps ** 2)) * g.dx
            for xi in g.x
        ])
        assert np.max(np.abs(u - direct)) <= 1e-12


class TestSchmidtPurity:
    def test_product_state(self, grid):
        a = gaussian_packet(grid, -2.0, 0.7)
        b = gaussian_packet(grid, 2.0, 0.9, k0=1.0)
        psi2 = WaveFunction2D(grid, grid, np.outer(a.amp, b.amp))
        purity, schmidt = schmidt_purity(psi2)
        assert abs(purity - 1.0) <= 1e-10
        assert schmidt == pytest.approx(1.0, abs=1e-9)

    def test_two_branch_superposition(self, grid):
        from rdmsim import box_ground_state, inner_product
        psi1 = box_ground_state(grid, -6.0, 2.0)
        psi2 = box_ground_state(grid, -2.0, 2.0)
        phi1 = box_ground_state(grid, 2.0, 2.0)
        phi2 = box_ground_state(grid, 6.0, 2.0)
        amp = (np.outer(psi1.amp, phi1.amp) + np.outer(psi2.amp, phi2.amp)) / np.sqrt(2.0)
        state = WaveFunction2D(grid, grid, amp)
        purity, schmidt = schmidt_purity(state)
        # oracle: coefficient block over the orthonormal packet pairs
        block = np.array([
            [inner_product(WaveFunction2D(grid, grid, np.outer(pa.amp, pb.amp)), state)
             for pb in (phi1, phi2)]
            for pa in (psi1, psi2)
        ])
        s2 = np.linalg.svd(block, compute_uv=False) ** 2
        oracle = float(np.sum(s2) ** 2 / np.sum(s2 ** 2))
        assert abs(schmidt - 2.0) <= 1e-6
        assert schmidt == pytest.approx(oracle, abs=1e-9)

    def test_equal_weight_diagonal(self, grid):
        n_terms = 5
        amp = np.zeros((grid.n, grid.n), dtype=complex)
        for i in range(n_terms):
            amp[100 + 40 * i, 100 + 40 * i] = 1.0
        state = normalize(WaveFunction2D(grid, grid, amp))
        _, schmidt = schmidt_purity(state)
        assert schmidt == pytest.approx(n_terms, abs=1e-6)
