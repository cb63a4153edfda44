"""Interaction-picture Hamiltonian action over the truncated basis.

The amplitude equations factorize: with theta the diagonal of free phase
frequencies (electron kinetic term plus photon energies) and K the static
coupling operator, the interaction-picture generator is

    d psi / dt = -i * D(t) K D(t)^dagger psi,   D(t) = diag(exp(i theta t)).

K is Hermitian and sparse: each kept momentum transfer of each mode
contributes one band. Emission of a photon into mode j with transfer q maps
(k, n_j) -> (k - q, n_j + 1) with matrix element -i G*_{q,j} sqrt(n_j + 1);
absorption is the Hermitian conjugate. The phase differences across an entry
reproduce the free-electron energy mismatch (hbar/m) k q -/+ hbar q^2 / 2m
minus the mode frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .constants import CONSTANTS
from .errors import (BasisMismatchError, DenseGuardError,
                     GridCommensurabilityError, ReductionCriterionError)
from .model import (Basis, CavityModeSet, FockSpace, JointState, MomentumGrid,
                    PhysicalSetup)
from .phasematch import DetuningReport, detuning_table, electron_kinematics

DENSE_DIMENSION_GUARD = 4096
#: grating-kernel weights below this are dropped outright
SINC_PRUNE_DEFAULT = 1e-4
#: transfers whose worst-case off-resonant population (|G| sqrt(N)/delta)^2
#: stays below this are dropped as dynamically inert
POPULATION_PRUNE_DEFAULT = 1e-8
#: designed couplings may only be recalibrated against a healthy kernel peak
MIN_RESONANT_WEIGHT = 0.5


def loss_coupling(loss_probability: float, transit_time: float) -> float:
    """Coupling making the single-pass loss emission probability exact.

    A resonant two-level pass emits with probability sin^2(g T), so
    g_loss = arcsin(sqrt(p_loss)) / T; for weak loss this reduces to the
    familiar sqrt(p_loss) amplitude.
    """
    return math.asin(math.sqrt(loss_probability)) / transit_time


@dataclass(frozen=True)
class TransferEntry:
    """One kept momentum transfer of one mode."""

    mode: int            # position in the mode set
    cells: int           # transfer in grid cells (signed)
    coupling: complex    # G_{q, mode} in rad/s


@dataclass(frozen=True)
class CouplingTable:
    """Precomputed generator data for one (setup, modes, grid, fock) choice."""

    basis: Basis
    modes: CavityModeSet
    entries: tuple[TransferEntry, ...]
    theta: np.ndarray            # (dim,) free phase frequencies, rad/s
    interaction: sp.csr_matrix   # K, rad/s, Hermitian
    resonant_couplings: tuple[complex, ...]  # per mode, at its snapped cell
    dispersion: str
    transit_time: float          # s

    def coupling(self, mode: int, cells: int) -> complex:
        for entry in self.entries:
            if entry.mode == mode and entry.cells == cells:
                return entry.coupling
        return 0.0j


def _electron_phase(grid: MomentumGrid, setup: PhysicalSetup,
                    dispersion: str) -> np.ndarray:
    """(E(k) - E(k_center)) / hbar over the grid, rad/s."""
    con = setup.constants
    k = grid.values
    k0 = grid.center
    if dispersion == "quadratic":
        return con.hbar * (k**2 - k0**2) / (2.0 * con.electron_mass)
    if dispersion == "linear":
        v = con.hbar * k0 / con.electron_mass
        return v * (k - k0)
    raise ValueError(f"unknown dispersion {dispersion!r}")


def build_coupling_table(setup: PhysicalSetup, modes: CavityModeSet,
                         grid: MomentumGrid, fock: FockSpace, *,
                         dispersion: str = "quadratic",
                         sinc_prune: float = SINC_PRUNE_DEFAULT,
                         population_prune: float = POPULATION_PRUNE_DEFAULT
                         ) -> CouplingTable:
    """Assemble the coupling table for the given truncation.

    The target-mode resonant coupling is calibrated to g = g_Q / T. Loss
    modes are always calibrated to arcsin(sqrt(p_loss)) / T. Other signal
    modes use their ``target_coupling`` when set, otherwise the raw grating
    kernel around the global amplitude g.

    Transfers are kept per mode when the kernel weight clears ``sinc_prune``
    and the worst-case off-resonant population (|G| sqrt(N_max) / delta)^2
    clears ``population_prune``; resonant transfers always survive. Pruning
    far-detuned kernel tails keeps the generator's fastest phases at the
    physically populated scale.
    """
    if fock.mode_count != len(modes):
        raise BasisMismatchError("Fock space mode count must match mode set")
    basis = Basis(grid=grid, fock=fock)
    con = setup.constants
    kin = electron_kinematics(setup.kinetic_energy_ev, con)
    transit = setup.cavity_length_m / kin.velocity
    g_target = setup.dimensionless_coupling / transit
    g_loss = loss_coupling(setup.loss_probability, transit)
    half_length = setup.cavity_length_m / 2.0

    n_k = len(grid)
    dk = grid.spacing
    e_phase = _electron_phase(grid, setup, dispersion)
    sqrt_nmax = math.sqrt(fock.cutoff)

    entries: list[TransferEntry] = []
    resonant: list[complex] = []
    for j, mode in enumerate(modes):
        # per-mode amplitude calibration at the snapped resonant cell
        s_res = int(round(mode.total_recoil / dk))
        w_res = float(np.sinc((mode.total_recoil - s_res * dk)
                              * half_length / np.pi))
        if mode.role == "loss":
            target = g_loss
        elif mode.target_coupling is not None:
            target = complex(mode.target_coupling)
        else:
            target = None
        if target is not None:
            if abs(w_res) < MIN_RESONANT_WEIGHT:
                raise GridCommensurabilityError(
                    f"mode {mode.index}: kernel weight {w_res:.3f} at its "
                    "snapped cell is too small to calibrate against; refine "
                    "points_per_recoil")
            amplitude = target / w_res
        else:
            amplitude = complex(g_target)
        resonant.append(amplitude * w_res)

        if amplitude == 0.0:
            continue
        for cells in range(-(n_k - 1), n_k):
            if cells == 0:
                continue
            q = cells * dk
            weight = float(np.sinc((mode.total_recoil - q)
                                   * half_length / np.pi))
            if abs(weight) < sinc_prune:
                continue
            coupling = amplitude * weight
            # emission detuning over all valid source cells
            lo, hi = max(0, cells), n_k + min(0, cells)
            delta = (e_phase[lo:hi] - e_phase[lo - cells:hi - cells]
                     - mode.frequency)
            delta_min = float(np.min(np.abs(delta)))
            ratio = abs(coupling) * sqrt_nmax / max(delta_min, 1e-300)
            if delta_min > 0.0 and ratio**2 < population_prune:
                continue
            entries.append(TransferEntry(mode=j, cells=cells,
                                         coupling=coupling))

    theta = (e_phase[:, None]
             + basis.fock.occupation_table().astype(float)
             @ np.array([m.frequency for m in modes])).reshape(-1)

    interaction = _assemble_interaction(basis, entries)
    return CouplingTable(
        basis=basis, modes=modes, entries=tuple(entries), theta=theta,
        interaction=interaction, resonant_couplings=tuple(resonant),
        dispersion=dispersion, transit_time=transit)


def _assemble_interaction(basis: Basis,
                          entries: list[TransferEntry]) -> sp.csr_matrix:
    n_k = len(basis.grid)
    n_f = basis.fock.dim
    dim = basis.dim
    occ = basis.fock.occupation_table()
    radix = basis.fock.cutoff + 1

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for entry in entries:
        stride = radix**entry.mode
        f_src = np.flatnonzero(occ[:, entry.mode] < basis.fock.cutoff)
        sqrt_fac = np.sqrt(occ[f_src, entry.mode] + 1.0)
        lo, hi = max(0, entry.cells), n_k + min(0, entry.cells)
        i_src = np.arange(lo, hi)
        # emission: (i, n_j) -> (i - cells, n_j + 1)
        r = ((i_src - entry.cells) * n_f)[:, None] + (f_src + stride)[None, :]
        c = (i_src * n_f)[:, None] + f_src[None, :]
        v = (-1j * np.conj(entry.coupling)) * np.broadcast_to(
            sqrt_fac[None, :], r.shape)
        rows.append(r.reshape(-1))
        cols.append(c.reshape(-1))
        vals.append(v.reshape(-1))

    if rows:
        half = sp.coo_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim), dtype=complex)
    else:
        half = sp.coo_matrix((dim, dim), dtype=complex)
    full = (half + half.conj().T).tocsr()
    full.sum_duplicates()
    return full


def rhs(t: float, psi: JointState, table: CouplingTable) -> np.ndarray:
    """Time derivative of the amplitudes under the interaction Hamiltonian."""
    if psi.basis != table.basis:
        raise BasisMismatchError("state does not match the coupling table")
    return rhs_flat(t, psi.amplitudes, table)


def rhs_flat(t: float, y: np.ndarray, table: CouplingTable) -> np.ndarray:
    phase = np.exp(1j * t * table.theta)
    return -1j * (phase * (table.interaction @ (np.conj(phase) * y)))


def build_dense_hamiltonian(t: float, table: CouplingTable, *,
                            guard: int = DENSE_DIMENSION_GUARD) -> np.ndarray:
    """H(t) as a dense Hermitian matrix (J); rhs == -i/hbar H psi."""
    dim = table.basis.dim
    if dim > guard:
        raise DenseGuardError(f"dimension {dim} exceeds dense guard {guard}")
    phase = np.exp(1j * t * table.theta)
    return CONSTANTS.hbar * (phase[:, None] * table.interaction.toarray()
                             * np.conj(phase)[None, :])


@dataclass(frozen=True)
class FewLevelModel:
    """Effective few-level reduction: labels, level energies, couplings."""

    kind: str
    labels: tuple[str, ...]
    level_energies_ev: tuple[float, ...]
    couplings: tuple[float, ...]      # rad/s, one per transition
    report: DetuningReport


def rwa_reduce(setup: PhysicalSetup, modes: CavityModeSet, kind: str, *,
               override: bool = False) -> FewLevelModel:
    """Few-level reduction after dropping all far-detuned transitions.

    Refuses to reduce when the phase-slip criterion fails, unless
    ``override`` is set. ``kind`` selects the level structure:

    - ``two_level``: levels (E, E - hbar w0), one coupling g.
    - ``ladder``: E2 = E, E1 = E - hbar w_first, E0 = E1 - hbar w_second,
      couplings (g, g); the first transition belongs to the target mode.
    - ``lambda``: shared excited E1 = E with grounds E - hbar w0 and
      E - hbar w1, couplings (g, g).
    """
    report = detuning_table(setup, modes)
    if not report.passes and not override:
        raise ReductionCriterionError(
            f"delta_min*T = {report.criterion_value:.2f} below threshold "
            f"{report.criterion_threshold:.2f}; pass override=True to force")

    con = setup.constants
    kin = electron_kinematics(setup.kinetic_energy_ev, con)
    transit = setup.cavity_length_m / kin.velocity
    g = setup.dimensionless_coupling / transit
    energy = setup.kinetic_energy_ev
    hbar_ev = con.hbar / con.electron_charge
    signal = [m for m in modes if m.role == "signal"]

    if kind == "two_level":
        w0 = modes.target.frequency
        return FewLevelModel(
            kind=kind, labels=("E1,0", "E0,1"),
            level_energies_ev=(energy, energy - hbar_ev * w0),
            couplings=(g,), report=report)
    if kind == "ladder":
        if len(signal) != 2:
            raise ValueError("ladder reduction needs exactly two signal modes")
        w_first = modes.target.frequency
        w_second = next(m.frequency for m in signal if m.index != 0)
        return FewLevelModel(
            kind=kind, labels=("E2,0,0", "E1,1,0", "E0,1,1"),
            level_energies_ev=(energy,
                               energy - hbar_ev * w_first,
                               energy - hbar_ev * (w_first + w_second)),
            couplings=(g, g), report=report)
    if kind == "lambda":
        if len(signal) != 2:
            raise ValueError("lambda reduction needs exactly two signal modes")
        w0 = modes.target.frequency
        w1 = next(m.frequency for m in signal if m.index != 0)
        return FewLevelModel(
            kind=kind, labels=("E1", "E0", "E2"),
            level_energies_ev=(energy,
                               energy - hbar_ev * w0,
                               energy - hbar_ev * w1),
            couplings=(g, g), report=report)
    raise ValueError(f"unknown reduction kind {kind!r}")
