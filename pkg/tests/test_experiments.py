import numpy as np
import pytest

from pekar import (
    Field3D,
    Grid3D,
    PotentialSpec,
    RadialGrid,
    SolveOptions,
    fd_derivative,
    minimize,
    perturbed_energy,
    rotation_orbit_evidence,
    rotational_density_check,
    solve_free,
    sweep_R,
    translate_seed,
    trial_upper_bound,
)
from pekar.experiments import center_of_mass

from conftest import gaussian_psi

OPTS = SolveOptions(max_iters=400, tolerance_residual=2e-5, tolerance_energy=1e-10)


@pytest.fixture(scope="module")
def grid_R4():
    # smallest comfortable box for the R=4 well (R+1 = 5 < L/2 = 10)
    return Grid3D(48, 20.0)


@pytest.fixture(scope="module")
def base_R4(grid_R4):
    V = PotentialSpec(kind="annular", R=4.0).build(grid_R4)
    seed = translate_seed(solve_free().psi, 4.0, grid_R4)
    return minimize(V, OPTS, seed_field=seed)


class TestTrialBound:
    def test_bounded_below_by_e0_minus_one(self, grid_R4):
        e0 = solve_free().energy.total
        for R in (4.0, 6.0):
            g = Grid3D(48, max(20.0, 4 * (R + 2)))
            tb = trial_upper_bound(R, g)
            assert tb >= e0 - 1.0 - 1e-9

    def test_below_e0_and_decreasing_in_R(self):
        e0 = solve_free().energy.total
        vals = [trial_upper_bound(R, Grid3D(48, 4 * (R + 2))) for R in (6.0, 8.0, 10.0)]
        assert all(v < e0 for v in vals)
        assert vals[0] > vals[1] > vals[2]

    def test_well_pairing_in_unit_interval_and_growing(self):
        # ∫ V_R |Q_R|² ∈ [0,1] and → 1 as the well swallows the translate
        from pekar.potentials import PotentialSpec, potential_energy

        free = solve_free()
        pairs = []
        for R in (6.0, 8.0, 10.0):
            g = Grid3D(96, 4 * (R + 2))
            QR = translate_seed(free.psi, R, g)
            VR = PotentialSpec(kind="annular", R=R).build(g)
            pairs.append(potential_energy(VR, QR.density()))
        assert all(0.0 <= p <= 1.0 for p in pairs)
        assert pairs[0] < pairs[1] < pairs[2]

    def test_energy_of_translate_is_e0_minus_pairing(self):
        # E_{V_R}(Q_R) decomposes as free energy (≈ e(0)) minus the pairing
        from pekar import pekar_energy
        from pekar.potentials import PotentialSpec, potential_energy

        free = solve_free()
        g = Grid3D(64, 32.0)
        R = 6.0
        QR = translate_seed(free.psi, R, g)
        VR = PotentialSpec(kind="annular", R=R).build(g)
        b = pekar_energy(QR, VR)
        pairing = potential_energy(VR, QR.density())
        assert b.potential == pytest.approx(pairing, rel=1e-12)
        assert b.total == pytest.approx(free.energy.total - pairing, abs=5e-3)


class TestPerturbedEnergy:
    def test_delta_zero_reproduces_base(self, grid_R4, base_R4):
        V = PotentialSpec(kind="annular", R=4.0).build(grid_R4)
        Z = PotentialSpec(kind="radial_bump", center=3.0, width=1.0).build(grid_R4)
        res = perturbed_energy(V, Z, 0.0, OPTS, warm=base_R4.psi)
        # the warm start is already stationary, so the solve returns it as is
        # (re-normalizing the seed costs one ulp in the re-evaluated energies)
        assert res.energy.total == pytest.approx(base_R4.energy.total, abs=1e-13)
        assert res.iterations == 0

    def test_constant_shift_is_exact(self, grid_R4, base_R4):
        # V + δc shifts the functional by -δc: identical iterates, shifted energy
        V = PotentialSpec(kind="annular", R=4.0).build(grid_R4)
        c, d = 0.7, 0.05
        Z = Field3D(grid_R4, np.full(grid_R4.shape, c))
        res = perturbed_energy(V, Z, d, OPTS, warm=base_R4.psi)
        assert res.energy.total == pytest.approx(base_R4.energy.total - d * c, abs=1e-12)


class TestFdDerivative:
    def test_zero_perturbation(self, grid_R4, base_R4):
        V = PotentialSpec(kind="annular", R=4.0).build(grid_R4)
        Z = PotentialSpec(kind="constant", value=0.0)
        rep = fd_derivative(V, Z, grid_R4, OPTS, deltas=(0.02, 0.01), base=base_R4)
        assert rep.pairing == 0.0
        assert rep.richardson == pytest.approx(0.0, abs=1e-8)

    def test_unit_perturbation_exact_derivative(self, grid_R4, base_R4):
        V = PotentialSpec(kind="annular", R=4.0).build(grid_R4)
        Z = PotentialSpec(kind="constant", value=1.0)
        rep = fd_derivative(V, Z, grid_R4, OPTS, deltas=(0.02, 0.01), base=base_R4)
        assert rep.pairing == pytest.approx(1.0, abs=1e-10)
        assert rep.richardson == pytest.approx(-1.0, abs=1e-8)
        assert rep.defect <= 1e-8

    def test_bump_perturbation_brackets_and_defect(self, grid_R4, base_R4):
        V = PotentialSpec(kind="annular", R=4.0).build(grid_R4)
        Z = PotentialSpec(kind="radial_bump", center=3.0, width=1.5)
        rep = fd_derivative(V, Z, grid_R4, OPTS, deltas=(0.04, 0.02, 0.01), base=base_R4)
        assert not rep.flagged
        assert rep.pairing > 0.1
        for i in range(len(rep.deltas)):
            lo = min(rep.forward[i], rep.backward[i]) - 1e-12
            hi = max(rep.forward[i], rep.backward[i]) + 1e-12
            assert lo <= rep.central[i] <= hi
            # warm-started monotone solves make the variational bounds exact
            assert rep.forward[i] <= -rep.pairing + 1e-10
            assert rep.backward[i] >= -rep.pairing - 0.05 * rep.deltas[i] - 1e-10
        assert rep.defect <= 1e-2 * rep.pairing

    def test_nonradial_perturbation_rejected(self, grid_R4):
        V = PotentialSpec(kind="annular", R=4.0).build(grid_R4)
        with pytest.raises(ValueError, match="radial"):
            fd_derivative(V, PotentialSpec(kind="x1_squared"), grid_R4, OPTS)


class TestRotationalDensityCheck:
    def test_radial_density_is_exact(self, grid32):
        u = gaussian_psi(grid32, 1.2)
        X, _, _ = grid32.meshgrid()
        W = Field3D(grid32, np.broadcast_to(X * X, grid32.shape).copy())
        d1, d2 = rotational_density_check(u, W)
        assert d1 <= 1e-6 and d2 <= 1e-6

    def test_nonradial_density_still_exact_by_projection(self, grid32):
        u = gaussian_psi(grid32, 1.0, center=(1.5, -0.5, 0.75))
        rng = np.random.default_rng(0)
        W = Field3D(grid32, rng.standard_normal(grid32.shape))
        d1, d2 = rotational_density_check(u, W)
        assert d1 <= 1e-10 and d2 <= 1e-10

    def test_radial_W_first_defect_vanishes(self, grid32):
        u = gaussian_psi(grid32, 1.0, center=(1.0, 0.0, 0.0))
        W = Field3D(grid32, np.exp(-grid32.radius()))
        d1, _ = rotational_density_check(u, W)
        assert d1 <= 1e-6


class TestOrbitEvidence:
    def test_single_seed_trivially_consistent(self, grid_R4):
        spec = PotentialSpec(kind="annular", R=4.0)
        rep = rotation_orbit_evidence(spec, 1, grid_R4, OPTS, rng_seed=3)
        assert len(rep.energies) == 1
        assert rep.max_profile_mismatch == 0.0
        assert rep.energy_spread == 0.0

    def test_two_random_directions_agree(self, grid_R4):
        spec = PotentialSpec(kind="annular", R=4.0)
        rep = rotation_orbit_evidence(spec, 2, grid_R4, OPTS, rng_seed=11)
        assert all(rep.converged)
        assert rep.energy_spread <= 1e-3 * abs(np.mean(rep.energies))
        peak = 0.06  # density scale of the bound lump
        assert rep.max_profile_mismatch <= 2e-3 * peak + 5e-4


class TestSweep:
    def test_rows_satisfy_ordering_invariants(self, grid_R4):
        rg = RadialGrid(1024, np.sqrt(3) / 2 * grid_R4.L + 0.5)
        rows = sweep_R([4.0, 5.0], grid_R4, rg, OPTS)
        assert len(rows) == 2
        for row in rows:
            assert not row.flagged
            # 3D-vs-radial comparisons carry the lifted-consistency tolerance
            assert row.e_full <= row.e_rad + 5e-3 * abs(row.e_rad)
            assert row.e_full <= row.trial_bound + 1e-6
            assert 0.0 <= row.well_mass <= 1.0
        # deeper well binds harder
        assert rows[1].e_full < rows[0].e_full

    def test_workers_give_identical_rows(self, grid_R4):
        rg = RadialGrid(1024, np.sqrt(3) / 2 * grid_R4.L + 0.5)
        serial = sweep_R([4.0], grid_R4, rg, OPTS, workers=1)
        threaded = sweep_R([4.0], grid_R4, rg, OPTS, workers=2)
        assert serial[0].e_full == threaded[0].e_full
        assert serial[0].e_rad == threaded[0].e_rad


class TestCenterOfMass:
    def test_symmetric_density_centered(self, grid32):
        rho = gaussian_psi(grid32, 1.0).density()
        np.testing.assert_allclose(center_of_mass(rho), 0.0, atol=1e-12)

    def test_offset_density_detected(self, grid32):
        rho = gaussian_psi(grid32, 0.8, center=(2.0, -1.0, 0.5)).density()
        np.testing.assert_allclose(center_of_mass(rho), [2.0, -1.0, 0.5], atol=1e-3)
