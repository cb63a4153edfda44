"""Phase-matching and detuning algebra.

The grating reciprocal vector closes the momentum gap between the electron
transition and a cavity mode. After one photon emission the electron has
recoiled, so every subsequent transition is detuned; the accumulated phase
slip delta_min * T over the transit time decides whether the system behaves
as a two-level emitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import CONSTANTS, PhysicalConstants
from .errors import ConfigError
from .model import CavityMode, CavityModeSet, PhysicalSetup

#: "much greater than 2 pi" pass mark for the phase-slip criterion
CRITERION_THRESHOLD = 10.0 * 2.0 * math.pi


@dataclass(frozen=True)
class ElectronKinematics:
    beta: float
    velocity: float          # m/s
    wavenumber: float        # rad/m (k0 = m v / hbar)
    time_per_length: float   # s/m (transit time per cavity length)


@dataclass(frozen=True)
class ModeDetuning:
    index: int
    frequency: float
    emission: float      # rad/s, second emission after one recoil
    absorption: float    # rad/s, re-absorption branch


@dataclass(frozen=True)
class DetuningReport:
    """Per-mode detunings plus the two-level validity criterion."""

    per_mode: tuple[ModeDetuning, ...]
    recoil_detuning: float       # rad/s
    delta_min: float             # rad/s, folded into the FSR lattice
    fsr_fraction: float          # p = delta_min / FSR, in [0, 1/2]
    criterion_value: float       # delta_min * T
    criterion_threshold: float
    passes: bool
    closed_form_value: float | None  # p*pi/(n*beta) when FSR == pi c / (n L)


def electron_kinematics(kinetic_energy_ev: float,
                        constants: PhysicalConstants = CONSTANTS
                        ) -> ElectronKinematics:
    """Nonrelativistic beta, velocity, and wavenumber for a given energy."""
    if kinetic_energy_ev <= 0.0:
        raise ValueError("kinetic energy must be positive")
    beta = math.sqrt(2.0 * kinetic_energy_ev / constants.electron_rest_energy)
    if beta >= 0.1:
        raise ValueError(f"beta={beta:.4f} outside nonrelativistic validity")
    v = beta * constants.light_speed
    k0 = constants.electron_mass * v / constants.hbar
    return ElectronKinematics(beta=beta, velocity=v, wavenumber=k0,
                              time_per_length=1.0 / v)


def solve_grating_period(kinetic_energy_ev: float, design_wavelength_m: float,
                         refractive_index: float,
                         constants: PhysicalConstants = CONSTANTS
                         ) -> tuple[float, float]:
    """Grating period and total recoil phase-matching the target mode.

    Solves (hbar/m) k0 Q - hbar Q^2 / 2m = omega0 for the smaller positive
    root (the forward-recoil branch) and returns (Lambda, Q) with
    Lambda = 2 pi / (Q - q0), q0 = n omega0 / c.
    """
    kin = electron_kinematics(kinetic_energy_ev, constants)
    omega0 = 2.0 * math.pi * constants.light_speed / design_wavelength_m
    hbar_m = constants.hbar / constants.electron_mass
    disc = kin.velocity**2 - 2.0 * hbar_m * omega0
    if disc <= 0.0:
        raise ConfigError(
            "no phase-matched recoil: electron too slow for this wavelength")
    total_recoil = 2.0 * omega0 / (kin.velocity + math.sqrt(disc))
    mode_q = refractive_index * omega0 / constants.light_speed
    grating_q = total_recoil - mode_q
    if grating_q <= 0.0:
        raise ConfigError("phase matching requires a positive grating vector")
    residual = (hbar_m * kin.wavenumber * total_recoil
                - 0.5 * hbar_m * total_recoil**2 - omega0)
    if abs(residual) > 1e-9 * omega0:
        raise ConfigError(f"phase-matching residual too large: {residual:.3e}")
    return 2.0 * math.pi / grating_q, total_recoil


def coupling_kernel(q: float, mode: CavityMode, cavity_length_m: float) -> float:
    """Normalized grating-kernel weight sinc[(Q_mode - q) L / 2]."""
    if cavity_length_m <= 0.0:
        raise ValueError("cavity length must be positive")
    x = (mode.total_recoil - q) * cavity_length_m / 2.0
    return float(np.sinc(x / np.pi))


def fold_into_fsr(detuning: float, fsr: float) -> float:
    """Distance from ``detuning`` to the nearest point of the FSR lattice."""
    frac = detuning / fsr
    return fsr * min(frac - math.floor(frac), math.ceil(frac) - frac)


def detuning_table(setup: PhysicalSetup, modes: CavityModeSet,
                   *, criterion_threshold: float = CRITERION_THRESHOLD
                   ) -> DetuningReport:
    """Detunings of all post-recoil transitions and the validity criterion.

    The recoil detuning is (hbar/m)(2 pi / Lambda)^2. For mode j relative to
    the target, the second-emission branch is detuned by
    |recoil + (j - j0) FSR| and the re-absorption branch by
    |recoil - (j - j0) FSR|. delta_min folds the recoil into the FSR lattice,
    so p = delta_min / FSR never exceeds 1/2.
    """
    con = setup.constants
    kin = electron_kinematics(setup.kinetic_energy_ev, con)
    grating_q = 2.0 * math.pi / setup.grating_period_m
    recoil_detuning = (con.hbar / con.electron_mass) * grating_q**2
    fsr = setup.free_spectral_range

    per_mode = tuple(
        ModeDetuning(
            index=m.index,
            frequency=m.frequency,
            emission=abs(recoil_detuning + m.index * fsr),
            absorption=abs(recoil_detuning - m.index * fsr),
        )
        for m in modes if m.role == "signal"
    )

    delta_min = fold_into_fsr(recoil_detuning, fsr)
    p = delta_min / fsr
    transit = setup.cavity_length_m * kin.time_per_length
    criterion = delta_min * transit

    natural_fsr = math.pi * con.light_speed / (setup.refractive_index
                                               * setup.cavity_length_m)
    closed_form = None
    if math.isclose(fsr, natural_fsr, rel_tol=1e-12):
        closed_form = p * math.pi / (setup.refractive_index * kin.beta)

    return DetuningReport(
        per_mode=per_mode,
        recoil_detuning=recoil_detuning,
        delta_min=delta_min,
        fsr_fraction=p,
        criterion_value=criterion,
        criterion_threshold=criterion_threshold,
        passes=criterion >= criterion_threshold,
        closed_form_value=closed_form,
    )
