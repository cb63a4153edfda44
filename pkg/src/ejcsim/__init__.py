"""Jaynes-Cummings dynamics of slow free electrons in photonic microcavities.

Quantum recoil detunes every photon emission after the first, turning a slow
electron crossing a grating-coupled microcavity into an effective few-level
emitter. This package builds the truncated electron-momentum x multimode-Fock
interaction Hamiltonian, integrates the amplitude equations, and checks the
dynamics against the closed-form few-level solutions.
"""

from .analytic import (FewLevelState, jc_eigensystem, jc_two_level,
                       ladder_three_level, lambda_three_level, swap_gate,
                       symmetric_ladder_coefficient,
                       tavis_cummings_single_excitation)
from .constants import CONSTANTS, PhysicalConstants
from .dynamics import Trajectory, integrate, propagate_oracle
from .errors import (BasisMismatchError, ConfigError, DenseGuardError,
                     EjcsimError, GridCommensurabilityError, IntegrationError,
                     ReductionCriterionError)
from .hamiltonian import (CouplingTable, build_coupling_table,
                          build_dense_hamiltonian, rhs, rwa_reduce)
from .metrics import (fidelity, labeled_probabilities,
                      photon_number_distribution, poissonian_reference)
from .model import (Basis, CavityMode, CavityModeSet, FockSpace, JointState,
                    LabeledStateProbability, MomentumGrid, PhysicalSetup,
                    build_momentum_grid, initial_state)
from .phasematch import (DetuningReport, coupling_kernel, detuning_table,
                         electron_kinematics, solve_grating_period)
from .scenarios import (NumericsOptions, ScenarioResult, resolve_setup,
                        run_detuning_sweep, run_phase_match_report,
                        run_photon_pair, run_single_photon, run_swap,
                        run_symmetric_n)

__version__ = "0.1.0"
