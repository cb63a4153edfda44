import math

import numpy as np
import pytest

from ejcsim.constants import CONSTANTS
from ejcsim.errors import (BasisMismatchError, DenseGuardError,
                           ReductionCriterionError)
from ejcsim.hamiltonian import (build_coupling_table, build_dense_hamiltonian,
                                loss_coupling, rhs, rhs_flat, rwa_reduce)
from ejcsim.model import FockSpace, JointState, initial_state
from ejcsim.phasematch import electron_kinematics
from ejcsim.scenarios import (NumericsOptions, build_single_photon_system,
                              _detuning_point_setup, resolve_setup)


@pytest.fixture(scope="module")
def fig2_setup():
    return resolve_setup()


@pytest.fixture(scope="module")
def small_bundle(fig2_setup):
    numerics = NumericsOptions(points_per_recoil=1, photon_cutoff=2,
                               signal_mode_count=3, loss_mode_count=1)
    return build_single_photon_system(fig2_setup, numerics)


@pytest.fixture(scope="module")
def two_level_bundle():
    setup = resolve_setup(loss_probability=0.0)
    numerics = NumericsOptions(points_per_recoil=1, photon_cutoff=1,
                               signal_mode_count=1, loss_mode_count=0)
    return build_single_photon_system(setup, numerics)


def random_states(bundle, count, seed=0):
    rng = np.random.default_rng(seed)
    dim = bundle.basis.dim
    for _ in range(count):
        y = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        yield y / np.linalg.norm(y)


class TestCouplingCalibration:
    def test_target_coupling_is_gq_over_transit(self, small_bundle):
        # g_Q = pi/2 over T = 1.686 ps -> 9.316e11 rad/s
        g = small_bundle.coupling
        assert g == pytest.approx(math.pi / 2 / 1.68606e-12, rel=1e-4)
        assert g == pytest.approx(9.3163e11, rel=1e-3)
        target_slot = [i for i, m in enumerate(small_bundle.modes)
                       if m.index == 0 and m.role == "signal"][0]
        resonant = small_bundle.table.resonant_couplings[target_slot]
        assert resonant == pytest.approx(g, rel=1e-12)

    def test_loss_coupling_calibration(self, small_bundle):
        # arcsin(sqrt(0.01)) = 0.100167...
        assert loss_coupling(0.01, 1.0) == pytest.approx(0.100167421, abs=1e-8)
        loss_slot = [i for i, m in enumerate(small_bundle.modes)
                     if m.role == "loss"][0]
        g_loss = small_bundle.table.resonant_couplings[loss_slot]
        assert abs(g_loss) * small_bundle.transit_time == pytest.approx(
            math.asin(0.1), rel=1e-12)

    def test_far_transfers_pruned(self, small_bundle):
        table = small_bundle.table
        # only the snapped resonant transfer of each mode survives pruning
        cells = {e.cells for e in table.entries}
        assert cells == {1}
        assert table.coupling(0, 3) == 0.0

    def test_kernel_profile_respected_without_population_prune(self,
                                                               fig2_setup):
        from ejcsim.phasematch import coupling_kernel
        numerics = NumericsOptions(points_per_recoil=1, photon_cutoff=1,
                                   signal_mode_count=1, loss_mode_count=0)
        bundle = build_single_photon_system(fig2_setup, numerics)
        table = build_coupling_table(
            fig2_setup, bundle.modes, bundle.grid, bundle.fock,
            sinc_prune=1e-5, population_prune=0.0)
        mode = bundle.modes.target
        length = fig2_setup.cavity_length_m
        resonant = table.coupling(0, 1)
        for entry in table.entries:
            q = entry.cells * bundle.grid.spacing
            expected = resonant * coupling_kernel(q, mode, length)
            assert entry.coupling == pytest.approx(expected, rel=1e-12)
        assert len(table.entries) > 3


class TestGeneratorHealth:
    def test_dense_hamiltonian_hermitian(self, small_bundle):
        for t in (0.0, 0.31e-12, 1.1e-12):
            h = build_dense_hamiltonian(t, small_bundle.table)
            gap = np.max(np.abs(h - h.conj().T))
            assert gap <= 1e-12 * np.max(np.abs(h))

    def test_antihermitian_generator_on_random_states(self, small_bundle):
        t = 0.4e-12
        for y in random_states(small_bundle, 100, seed=42):
            dy = rhs_flat(t, y, small_bundle.table)
            assert abs(np.vdot(y, dy).real) <= 1e-12 * np.linalg.norm(dy)

    def test_dense_matches_sparse_action(self, small_bundle):
        t = 0.77e-12
        h = build_dense_hamiltonian(t, small_bundle.table)
        for y in random_states(small_bundle, 100, seed=7):
            dense = (-1j / CONSTANTS.hbar) * (h @ y)
            sparse = rhs_flat(t, y, small_bundle.table)
            assert np.linalg.norm(dense - sparse) <= 1e-12 * np.linalg.norm(
                dense)

    def test_dense_guard(self, small_bundle):
        with pytest.raises(DenseGuardError):
            build_dense_hamiltonian(0.0, small_bundle.table, guard=4)

    def test_rhs_checks_basis(self, small_bundle, two_level_bundle):
        psi = initial_state(two_level_bundle.grid, two_level_bundle.fock,
                            0.0, (0,))
        with pytest.raises(BasisMismatchError):
            rhs(0.0, psi, small_bundle.table)


class TestTwoLevelReduction:
    def test_resonant_block_equations(self, two_level_bundle):
        """The resonant pair obeys d a = g b, d b = -g a."""
        bundle = two_level_bundle
        g = bundle.coupling
        basis = bundle.basis
        excited = basis.flat_index(basis.grid.center_index, (0,))
        recoiled = basis.flat_index(basis.grid.center_index - 1, (1,))
        y = np.zeros(basis.dim, dtype=complex)
        y[excited] = 0.8
        y[recoiled] = 0.6
        dy = rhs_flat(0.0, y, bundle.table)
        assert dy[excited] == pytest.approx(g * 0.6, rel=1e-12)
        assert dy[recoiled] == pytest.approx(-g * 0.8, rel=1e-12)

    def test_recoiled_vacuum_nearly_dark(self, two_level_bundle):
        """Fully recoiled electron with no photon has no resonant channel."""
        from ejcsim.dynamics import integrate
        bundle = two_level_bundle
        psi0 = initial_state(bundle.grid, bundle.fock, 0.0, (0,),
                             center_shift_cells=-1)
        traj = integrate(psi0, bundle.table, bundle.transit_time, tol=1e-10)
        survival = abs(np.vdot(psi0.amplitudes,
                               traj.final().amplitudes)) ** 2
        assert survival >= 0.99

    @pytest.mark.parametrize("n_photons", (1, 2, 3))
    def test_reduced_blocks_have_polariton_eigenvalues(self, fig2_setup,
                                                       small_bundle,
                                                       n_photons):
        from ejcsim.analytic import jc_block_hamiltonian
        model = rwa_reduce(fig2_setup, small_bundle.modes, "two_level")
        g = model.couplings[0]
        block = jc_block_hamiltonian(n_photons, g, hbar=CONSTANTS.hbar)
        values = np.linalg.eigvalsh(block)
        expected = CONSTANTS.hbar * g * math.sqrt(n_photons)
        assert values[0] == pytest.approx(-expected, rel=1e-12)
        assert values[1] == pytest.approx(expected, rel=1e-12)


class TestRwaReduce:
    def test_two_level_levels(self, fig2_setup, small_bundle):
        model = rwa_reduce(fig2_setup, small_bundle.modes, "two_level")
        hbar_ev = CONSTANTS.hbar / CONSTANTS.electron_charge
        omega = small_bundle.modes.target.frequency
        assert model.labels == ("E1,0", "E0,1")
        assert model.level_energies_ev[0] == 100.0
        assert model.level_energies_ev[1] == pytest.approx(
            100.0 - hbar_ev * omega)
        assert model.couplings[0] == pytest.approx(small_bundle.coupling)

    def test_ladder_levels(self, fig2_setup):
        from ejcsim.scenarios import build_photon_pair_system
        setup = resolve_setup(
            dimensionless_coupling=math.pi / math.sqrt(2.0))
        numerics = NumericsOptions(points_per_recoil=1, photon_cutoff=1)
        bundle = build_photon_pair_system(setup, numerics)
        model = rwa_reduce(setup, bundle.modes, "ladder")
        hbar_ev = CONSTANTS.hbar / CONSTANTS.electron_charge
        signal = [m for m in bundle.modes if m.role == "signal"]
        w_first = bundle.modes.target.frequency
        w_second = [m.frequency for m in signal if m.index != 0][0]
        assert model.level_energies_ev[1] == pytest.approx(
            100.0 - hbar_ev * w_first)
        assert model.level_energies_ev[2] == pytest.approx(
            100.0 - hbar_ev * (w_first + w_second))

    def test_lambda_levels(self):
        from ejcsim.scenarios import build_swap_system
        setup = resolve_setup(dimensionless_coupling=math.pi / math.sqrt(2.0))
        numerics = NumericsOptions(points_per_recoil=8, photon_cutoff=1)
        bundle = build_swap_system(setup, numerics)
        model = rwa_reduce(bundle.setup, bundle.modes, "lambda")
        hbar_ev = CONSTANTS.hbar / CONSTANTS.electron_charge
        signal = [m for m in bundle.modes if m.role == "signal"]
        assert model.level_energies_ev[0] == 100.0
        grounds = sorted(model.level_energies_ev[1:])
        expected = sorted(100.0 - hbar_ev * m.frequency for m in signal)
        assert grounds == pytest.approx(expected)

    def test_refuses_invalid_reduction(self, fig2_setup):
        # a fast-electron configuration breaks the phase-slip criterion
        weak = _detuning_point_setup(fig2_setup, 0.05)
        numerics = NumericsOptions(points_per_recoil=1, photon_cutoff=1)
        bundle = build_single_photon_system(weak, numerics)
        with pytest.raises(ReductionCriterionError):
            rwa_reduce(weak, bundle.modes, "two_level")
        model = rwa_reduce(weak, bundle.modes, "two_level", override=True)
        assert not model.report.passes

    def test_unknown_kind_rejected(self, fig2_setup, small_bundle):
        with pytest.raises(ValueError):
            rwa_reduce(fig2_setup, small_bundle.modes, "four_level")
