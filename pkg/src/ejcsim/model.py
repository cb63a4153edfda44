"""Domain types: experiment parameters, cavity modes, basis, and states.

Basis layout (fixed; golden files depend on it): the joint amplitude array has
shape ``(n_momentum, n_fock)``. The flat index of ``(i, occupations)`` is
``i * n_fock + f`` where ``f`` is the little-endian mixed-radix occupation
index, ``f = sum_j n_j * (cutoff+1)**j`` over modes ordered as in the
:class:`CavityModeSet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .constants import CONSTANTS, PhysicalConstants
from .errors import BasisMismatchError, GridCommensurabilityError

BETA_NONRELATIVISTIC_MAX = 0.1
#: residual (in grid cells) beyond which a recoil is considered off-grid
CELL_SNAP_TOLERANCE = 0.5


@dataclass(frozen=True)
class PhysicalSetup:
    """Scalar parameters of one electron-cavity experiment.

    ``dimensionless_coupling`` is the single-pass coupling g*T for the target
    transition; ``loss_probability`` is the single-pass emission probability
    into the free-space channel.
    """

    kinetic_energy_ev: float
    energy_uncertainty_ev: float
    cavity_length_m: float
    design_wavelength_m: float
    refractive_index: float
    grating_period_m: float
    free_spectral_range: float          # rad/s
    dimensionless_coupling: float       # g*T
    loss_probability: float
    constants: PhysicalConstants = field(default=CONSTANTS)

    def __post_init__(self) -> None:
        if self.kinetic_energy_ev <= 0.0:
            raise ValueError("kinetic energy must be positive")
        beta = math.sqrt(2.0 * self.kinetic_energy_ev
                         / self.constants.electron_rest_energy)
        if beta >= BETA_NONRELATIVISTIC_MAX:
            raise ValueError(
                f"beta={beta:.4f} outside nonrelativistic validity (< 0.1)")
        if self.cavity_length_m <= 0.0:
            raise ValueError("cavity length must be positive")
        if self.grating_period_m <= 0.0:
            raise ValueError("grating period must be positive")
        if not 0.0 <= self.loss_probability < 1.0:
            raise ValueError("loss probability must be in [0, 1)")
        if self.free_spectral_range <= 0.0:
            raise ValueError("free spectral range must be positive")
        if self.energy_uncertainty_ev < 0.0:
            raise ValueError("energy uncertainty must be nonnegative")


@dataclass(frozen=True)
class CavityMode:
    """One photonic mode seen by the electron.

    ``total_recoil`` is the momentum the electron exchanges when coupling to
    the mode (mode wavenumber plus the grating reciprocal vector).
    ``target_coupling`` pins the resonant coupling amplitude (rad/s) for modes
    whose phase matching is part of the design; ``None`` leaves the raw
    grating-kernel weight in place.
    """

    index: int
    frequency: float        # rad/s
    wavenumber: float       # rad/m
    total_recoil: float     # rad/m
    role: str               # "signal" | "loss"
    target_coupling: complex | None = None

    def __post_init__(self) -> None:
        if self.frequency <= 0.0:
            raise ValueError("mode frequency must be positive")
        if self.role not in ("signal", "loss"):
            raise ValueError(f"unknown mode role {self.role!r}")


@dataclass(frozen=True)
class CavityModeSet:
    """Ordered collection of modes; the target mode has index 0."""

    modes: tuple[CavityMode, ...]

    def __post_init__(self) -> None:
        if not self.modes:
            raise ValueError("mode set must not be empty")
        if sum(1 for m in self.modes if m.index == 0 and m.role == "signal") != 1:
            raise ValueError("exactly one signal mode must carry index 0")

    @property
    def target(self) -> CavityMode:
        return next(m for m in self.modes
                    if m.index == 0 and m.role == "signal")

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self) -> Iterator[CavityMode]:
        return iter(self.modes)


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Uniform, recoil-commensurate electron momentum lattice."""

    values: np.ndarray      # rad/m, strictly increasing
    center_index: int
    spacing: float          # rad/m

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MomentumGrid):
            return NotImplemented
        return (self.center_index == other.center_index
                and self.spacing == other.spacing
                and np.array_equal(self.values, other.values))

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("grid needs at least two points")
        steps = np.diff(vals)
        # differences of large wavenumbers round at eps * |k|
        round_off = 32 * np.finfo(float).eps * float(np.max(np.abs(vals)))
        if not np.allclose(steps, self.spacing, rtol=1e-9, atol=round_off):
            raise ValueError("grid spacing must be uniform")

    @property
    def center(self) -> float:
        return float(self.values[self.center_index])

    @property
    def span(self) -> float:
        return float(self.values[-1] - self.values[0])

    def __len__(self) -> int:
        return self.values.size

    def cells_for(self, recoil: float) -> int:
        """Nearest whole number of grid cells representing ``recoil``."""
        cells = round(recoil / self.spacing)
        residual = abs(recoil - cells * self.spacing)
        if residual >= CELL_SNAP_TOLERANCE * self.spacing:
            raise GridCommensurabilityError(
                f"recoil {recoil:.6e} sits {residual / self.spacing:.3f} cells "
                "off-grid; refine points_per_recoil")
        return int(cells)


@dataclass(frozen=True)
class FockSpace:
    """Product of per-mode occupation ladders, each truncated at ``cutoff``."""

    mode_count: int
    cutoff: int

    def __post_init__(self) -> None:
        if self.mode_count < 1:
            raise ValueError("need at least one mode")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.mode_count

    def flatten(self, occupation: Sequence[int]) -> int:
        if len(occupation) != self.mode_count:
            raise ValueError("occupation length must equal mode count")
        radix = self.cutoff + 1
        f = 0
        for j, n in enumerate(occupation):
            if not 0 <= n <= self.cutoff:
                raise ValueError(f"occupation {n} outside [0, {self.cutoff}]")
            f += n * radix**j
        return f

    def unflatten(self, f: int) -> tuple[int, ...]:
        if not 0 <= f < self.dim:
            raise ValueError("flat index out of range")
        radix = self.cutoff + 1
        occ = []
        for _ in range(self.mode_count):
            occ.append(f % radix)
            f //= radix
        return tuple(occ)

    def occupation_table(self) -> np.ndarray:
        """(dim, mode_count) array of occupations for every flat index."""
        radix = self.cutoff + 1
        f = np.arange(self.dim)
        cols = [(f // radix**j) % radix for j in range(self.mode_count)]
        return np.stack(cols, axis=1)


@dataclass(frozen=True)
class Basis:
    """Momentum grid x Fock space; owned by states and operators alike."""

    grid: MomentumGrid
    fock: FockSpace

    @property
    def dim(self) -> int:
        return len(self.grid) * self.fock.dim

    def flat_index(self, i: int, occupation: Sequence[int]) -> int:
        if not 0 <= i < len(self.grid):
            raise ValueError("momentum index out of range")
        return i * self.fock.dim + self.fock.flatten(occupation)


@dataclass(frozen=True)
class LabeledStateProbability:
    label: str
    probability: float

    def __post_init__(self) -> None:
        if not -1e-12 <= self.probability <= 1.0 + 1e-9:
            raise ValueError(f"probability {self.probability} outside [0, 1]")


class JointState:
    """Complex amplitudes over (momentum index, occupation tuple)."""

    __slots__ = ("basis", "amplitudes")

    def __init__(self, basis: Basis, amplitudes: np.ndarray):
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.shape == (len(basis.grid), basis.fock.dim):
            amps = amps.reshape(-1)
        if amps.shape != (basis.dim,):
            raise ValueError(
                f"amplitude shape {amps.shape} does not match basis dim {basis.dim}")
        amps = amps.copy()
        amps.setflags(write=False)
        self.basis = basis
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_matrix(self) -> np.ndarray:
        """View shaped (n_momentum, n_fock)."""
        return self.amplitudes.reshape(len(self.basis.grid), self.basis.fock.dim)

    def overlap(self, other: "JointState") -> complex:
        require_same_basis(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def require_same_basis(a: JointState, b: JointState) -> None:
    if a.basis is not b.basis and a.basis != b.basis:
        raise BasisMismatchError("states live on different bases")


def build_momentum_grid(setup: PhysicalSetup, modes: CavityModeSet,
                        points_per_recoil: int) -> MomentumGrid:
    """Uniform grid centered on the electron momentum, spanning 7 recoils.

    Spacing is ``Q_target / points_per_recoil``. Every mode recoil must land
    on a whole number of cells to within half a cell, otherwise the setup is
    rejected so the caller can refine ``points_per_recoil``.
    """
    if points_per_recoil < 1:
        raise ValueError("points_per_recoil must be >= 1")
    con = setup.constants
    beta = math.sqrt(2.0 * setup.kinetic_energy_ev / con.electron_rest_energy)
    k0 = con.electron_mass * beta * con.light_speed / con.hbar
    q_target = modes.target.total_recoil
    spacing = q_target / points_per_recoil

    n_cells = 7 * points_per_recoil
    center_index = math.ceil(3.5 * points_per_recoil)
    offsets = np.arange(n_cells + 1) - center_index
    grid = MomentumGrid(values=k0 + offsets * spacing,
                        center_index=center_index, spacing=spacing)
    for mode in modes:
        grid.cells_for(mode.total_recoil)
    return grid


def initial_state(grid: MomentumGrid, fock: FockSpace,
                  sigma_e_ev: float, occupation: Sequence[int],
                  *, velocity: float | None = None,
                  center_shift_cells: int = 0,
                  constants: PhysicalConstants = CONSTANTS) -> JointState:
    """Gaussian electron wavepacket tensor a definite Fock occupation.

    The energy spread ``sigma_e_ev`` (standard deviation) converts to a
    momentum spread sigma_k = sigma_E / (hbar v). ``velocity`` defaults to the
    group velocity at the grid center. A zero spread yields a single delta
    amplitude at the (possibly shifted) center cell.
    """
    basis = Basis(grid=grid, fock=fock)
    center = grid.center_index + center_shift_cells
    if not 0 <= center < len(grid):
        raise ValueError("shifted wavepacket center falls outside the grid")

    amps = np.zeros((len(grid), fock.dim), dtype=complex)
    f = fock.flatten(occupation)
    if sigma_e_ev == 0.0:
        amps[center, f] = 1.0
        return JointState(basis, amps)

    if velocity is None:
        velocity = constants.hbar * grid.center / constants.electron_mass
    sigma_k = sigma_e_ev * constants.electron_charge / (constants.hbar * velocity)
    k_center = float(grid.values[center])
    envelope = np.exp(-((grid.values - k_center) ** 2) / (4.0 * sigma_k**2))

    # mass outside the grid, estimated from the continuum Gaussian
    half_left = k_center - grid.values[0]
    half_right = grid.values[-1] - k_center
    lost = 0.5 * (math.erfc(half_left / (math.sqrt(2.0) * sigma_k))
                  + math.erfc(half_right / (math.sqrt(2.0) * sigma_k)))
    if lost > 1e-6:
        raise ValueError(
            f"wavepacket truncated by the grid ({lost:.2e} norm lost); "
            "reduce sigma_E or widen the grid")

    envelope = envelope / np.linalg.norm(envelope)
    amps[:, f] = envelope
    return JointState(basis, amps)


def find_commensurate_resolution(recoils: Sequence[float],
                                 cavity_length_m: float,
                                 base_points_per_recoil: int,
                                 *, min_weight: float = 0.8,
                                 distinct: bool = False,
                                 max_points_per_recoil: int = 512) -> int:
    """Smallest resolution putting every recoil near a grid cell.

    A recoil sitting ``delta_q`` off its snapped cell couples through the
    grating kernel with weight sinc(delta_q * L / 2); this searches for the
    first ``points_per_recoil >= base`` where every weight stays above
    ``min_weight`` (so a mild recalibration restores the design coupling).
    With ``distinct=True``, recoils that differ must also snap to different
    cells.
    """
    q0 = recoils[0]
    for ppr in range(base_points_per_recoil, max_points_per_recoil + 1):
        spacing = q0 / ppr
        cells = [round(q / spacing) for q in recoils]
        ok = True
        for q, s in zip(recoils, cells):
            x = abs(q - s * spacing) * cavity_length_m / 2.0
            if np.sinc(x / np.pi) < min_weight:
                ok = False
                break
        if ok and distinct and len(set(cells)) != len(cells):
            ok = False
        if ok:
            return ppr
    raise GridCommensurabilityError(
        f"no commensurate grid up to points_per_recoil={max_points_per_recoil}")
