import math

import numpy as np
import pytest

from ejcsim.constants import CONSTANTS, PhysicalConstants
from ejcsim.errors import GridCommensurabilityError
from ejcsim.model import (Basis, CavityMode, CavityModeSet, FockSpace,
                          JointState, MomentumGrid, PhysicalSetup,
                          build_momentum_grid, find_commensurate_resolution,
                          initial_state)


def make_setup(**overrides) -> PhysicalSetup:
    values = dict(
        kinetic_energy_ev=100.0,
        energy_uncertainty_ev=0.010,
        cavity_length_m=1e-5,
        design_wavelength_m=532e-9,
        refractive_index=1.5,
        grating_period_m=1.0781e-8,
        free_spectral_range=2 * math.pi * 13e12,
        dimensionless_coupling=math.pi / 2,
        loss_probability=1e-2,
    )
    values.update(overrides)
    return PhysicalSetup(**values)


def make_mode(index: int, recoil: float, role: str = "signal") -> CavityMode:
    return CavityMode(index=index, frequency=3.54e15, wavenumber=1.77e7,
                      total_recoil=recoil, role=role)


class TestConstants:
    def test_rest_energy_consistent_with_mass(self):
        c = CONSTANTS
        mc2_ev = c.electron_mass * c.light_speed**2 / c.electron_charge
        assert mc2_ev == pytest.approx(c.electron_rest_energy, rel=1e-6)

    def test_rejects_nonpositive_values(self):
        with pytest.raises(ValueError):
            PhysicalConstants(hbar=-1.0)

    def test_rejects_inconsistent_rest_energy(self):
        with pytest.raises(ValueError):
            PhysicalConstants(electron_rest_energy=511200.0)


class TestPhysicalSetup:
    def test_accepts_reference_parameters(self):
        setup = make_setup()
        assert setup.kinetic_energy_ev == 100.0

    def test_rejects_relativistic_energy(self):
        # beta = 0.1 corresponds to ~2.56 keV
        with pytest.raises(ValueError, match="nonrelativistic"):
            make_setup(kinetic_energy_ev=5000.0)

    def test_rejects_out_of_range_loss(self):
        with pytest.raises(ValueError):
            make_setup(loss_probability=1.5)

    def test_rejects_negative_energy(self):
        with pytest.raises(ValueError):
            make_setup(kinetic_energy_ev=-1.0)


class TestMomentumGrid:
    def test_single_point_per_recoil_gives_eight_points(self):
        # span of 7 recoils sampled once per recoil: 8 points
        setup = make_setup()
        modes = CavityModeSet(modes=(make_mode(0, 6.0e8),))
        grid = build_momentum_grid(setup, modes, points_per_recoil=1)
        assert len(grid) == 8
        assert grid.spacing == pytest.approx(6.0e8)
        assert grid.span == pytest.approx(7 * 6.0e8)

    def test_center_lands_on_grid_point(self):
        setup = make_setup()
        modes = CavityModeSet(modes=(make_mode(0, 6.0e8),))
        for ppr in (1, 2, 3, 8):
            grid = build_momentum_grid(setup, modes, points_per_recoil=ppr)
            # de Broglie cross-check: lambda[m] = 2 pi hbar / sqrt(2 m E)
            k0 = math.sqrt(2 * CONSTANTS.electron_mass * 100.0
                           * CONSTANTS.electron_charge) / CONSTANTS.hbar
            assert grid.center == pytest.approx(k0, rel=1e-12)
            assert len(grid) == 7 * ppr + 1

    def test_reference_wavenumber_value(self):
        # 100 eV electron: k0 ~ 5.12e10 rad/m, de Broglie ~ 1.23 angstrom
        setup = make_setup()
        modes = CavityModeSet(modes=(make_mode(0, 6.0e8),))
        grid = build_momentum_grid(setup, modes, points_per_recoil=1)
        assert grid.center == pytest.approx(5.1232e10, rel=1e-4)
        assert 2 * math.pi / grid.center == pytest.approx(1.2264e-10, rel=1e-4)

    def test_incommensurate_mode_rejected(self):
        setup = make_setup()
        modes = CavityModeSet(modes=(make_mode(0, 6.0e8),
                                     make_mode(1, 9.0e8)))
        with pytest.raises(GridCommensurabilityError):
            build_momentum_grid(setup, modes, points_per_recoil=1)

    def test_near_commensurate_mode_accepted(self):
        setup = make_setup()
        modes = CavityModeSet(modes=(make_mode(0, 6.0e8),
                                     make_mode(1, 6.0e8 * (1 + 1e-4))))
        grid = build_momentum_grid(setup, modes, points_per_recoil=4)
        assert grid.cells_for(modes.modes[1].total_recoil) == 4

    def test_snap_residual_bound(self):
        grid = MomentumGrid(values=np.arange(10) * 2.0, center_index=5,
                            spacing=2.0)
        assert grid.cells_for(6.5) == 3  # 0.25 cells off, accepted
        with pytest.raises(GridCommensurabilityError):
            grid.cells_for(7.0)  # exactly half a cell off


class TestFockSpace:
    @pytest.mark.parametrize("mode_count,cutoff", [(1, 3), (2, 3), (3, 2)])
    def test_flatten_unflatten_bijection(self, mode_count, cutoff):
        fock = FockSpace(mode_count=mode_count, cutoff=cutoff)
        seen = set()
        for f in range(fock.dim):
            occ = fock.unflatten(f)
            assert fock.flatten(occ) == f
            seen.add(occ)
        assert len(seen) == fock.dim == (cutoff + 1) ** mode_count

    def test_little_endian_layout(self):
        fock = FockSpace(mode_count=2, cutoff=3)
        # one photon in the second mode sits one radix step up
        assert fock.flatten((0, 1)) == 4
        assert fock.flatten((1, 0)) == 1

    def test_occupation_out_of_range(self):
        fock = FockSpace(mode_count=2, cutoff=3)
        with pytest.raises(ValueError):
            fock.flatten((4, 0))

    def test_occupation_table_matches_unflatten(self):
        fock = FockSpace(mode_count=3, cutoff=2)
        table = fock.occupation_table()
        for f in range(fock.dim):
            assert tuple(table[f]) == fock.unflatten(f)


def small_basis(n_points: int = 9, mode_count: int = 2, cutoff: int = 2
                ) -> Basis:
    grid = MomentumGrid(values=5e10 + np.arange(n_points) * 6e8,
                        center_index=n_points // 2, spacing=6e8)
    return Basis(grid=grid, fock=FockSpace(mode_count=mode_count,
                                           cutoff=cutoff))


class TestInitialState:
    def test_zero_spread_is_delta(self):
        basis = small_basis()
        state = initial_state(basis.grid, basis.fock, 0.0, (0, 0))
        idx = basis.flat_index(basis.grid.center_index, (0, 0))
        assert state.amplitudes[idx] == 1.0
        assert state.norm() == pytest.approx(1.0, abs=1e-12)

    def test_momentum_width_matches_energy_spread(self):
        # sigma_k = sigma_E e / (hbar v); 10 meV at 100 eV -> ~2.56e6 rad/m
        k0 = 5.1232e10
        v = CONSTANTS.hbar * k0 / CONSTANTS.electron_mass
        sigma_k = 0.010 * CONSTANTS.electron_charge / (CONSTANTS.hbar * v)
        assert sigma_k == pytest.approx(2.5616e6, rel=1e-3)

        grid = MomentumGrid(values=k0 + (np.arange(201) - 100) * sigma_k / 8,
                            center_index=100, spacing=sigma_k / 8)
        fock = FockSpace(mode_count=1, cutoff=1)
        state = initial_state(grid, fock, 0.010, (0,), velocity=v)
        assert state.norm() == pytest.approx(1.0, abs=1e-9)
        weights = np.abs(state.as_matrix()[:, 0]) ** 2
        second_moment = np.sqrt(np.sum(weights * (grid.values - k0) ** 2))
        assert second_moment == pytest.approx(sigma_k, rel=1e-3)

    def test_occupation_placement(self):
        basis = small_basis(mode_count=2, cutoff=3)
        state = initial_state(basis.grid, basis.fock, 0.0, (0, 1))
        idx = basis.flat_index(basis.grid.center_index, (0, 1))
        assert state.amplitudes[idx] == 1.0

    def test_truncated_wavepacket_rejected(self):
        basis = small_basis(n_points=5)
        v = CONSTANTS.hbar * basis.grid.center / CONSTANTS.electron_mass
        # spread much wider than the grid span
        with pytest.raises(ValueError, match="truncated"):
            initial_state(basis.grid, basis.fock, 50.0, (0, 0), velocity=v)

    def test_shifted_center(self):
        basis = small_basis()
        state = initial_state(basis.grid, basis.fock, 0.0, (0, 0),
                              center_shift_cells=-2)
        idx = basis.flat_index(basis.grid.center_index - 2, (0, 0))
        assert state.amplitudes[idx] == 1.0


class TestJointState:
    def test_shape_validation(self):
        basis = small_basis()
        with pytest.raises(ValueError):
            JointState(basis, np.zeros(basis.dim + 1, dtype=complex))

    def test_matrix_view_round_trip(self):
        basis = small_basis()
        rng = np.random.default_rng(3)
        amps = rng.normal(size=(len(basis.grid), basis.fock.dim)) + 0j
        state = JointState(basis, amps)
        assert np.array_equal(state.as_matrix().reshape(-1), state.amplitudes)

    def test_amplitudes_read_only(self):
        basis = small_basis()
        state = initial_state(basis.grid, basis.fock, 0.0, (0, 0))
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0.5


class TestCommensurateResolution:
    def test_exact_multiples_need_no_refinement(self):
        assert find_commensurate_resolution([6e8, 1.2e9], 1e-5, 4) == 4

    def test_refines_until_kernel_weight_recovers(self):
        recoils = [6.0e8, 6.0e8 * 1.0608]
        ppr = find_commensurate_resolution(recoils, 1e-5, 8, distinct=True)
        spacing = recoils[0] / ppr
        cells = round(recoils[1] / spacing)
        assert cells != ppr
        offset = abs(recoils[1] - cells * spacing) * 1e-5 / 2
        assert np.sinc(offset / np.pi) >= 0.8

    def test_unreachable_budget_raises(self):
        with pytest.raises(GridCommensurabilityError):
            find_commensurate_resolution([6e8, 6e8 * 1.4142135623],
                                         1e-5, 8, max_points_per_recoil=16)
