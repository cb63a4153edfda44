"""Closed-form few-level solutions and collective-emitter algebra."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12


@dataclass(frozen=True)
class FewLevelState:
    """Amplitudes over a small ordered set of labeled basis states."""

    labels: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (len(self.labels),):
            raise ValueError("one amplitude per label required")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError("few-level state must have unit norm")

    def probability(self, label: str) -> float:
        return float(abs(self.amplitudes[self.labels.index(label)]) ** 2)


def _phase(g: complex) -> complex:
    return cmath.exp(-1j * cmath.phase(g))


def jc_two_level(g: complex, t: float) -> FewLevelState:
    """Vacuum Rabi evolution of the two-level emitter and one mode.

    cos(|g| t) on the excited/vacuum state, -exp(-i arg g) sin(|g| t) on the
    recoiled/one-photon state.
    """
    gt = abs(g) * t
    return FewLevelState(
        labels=("E1,0", "E0,1"),
        amplitudes=np.array([math.cos(gt), -_phase(g) * math.sin(gt)]),
    )


def ladder_three_level(g: float, t: float) -> FewLevelState:
    """Cascade through two sequential transitions with equal real coupling."""
    half = g * t / math.sqrt(2.0)
    return FewLevelState(
        labels=("E2,0,0", "E1,1,0", "E0,1,1"),
        amplitudes=np.array([
            math.cos(half) ** 2,
            -math.sin(math.sqrt(2.0) * g * t) / math.sqrt(2.0),
            math.sin(half) ** 2,
        ]),
    )


def lambda_three_level(g: float, t: float,
                       initial: str = "E0_0_1") -> FewLevelState:
    """Two ground states exchanging a photon through a shared excited level.

    Starting from one ground state with its photon present, population flows
    through the excited level into the other ground state; the roles of the
    two ground states swap with ``initial``.
    """
    half = g * t / math.sqrt(2.0)
    stay = math.cos(half) ** 2
    mid = math.sin(math.sqrt(2.0) * g * t) / math.sqrt(2.0)
    toggle = -math.sin(half) ** 2
    if initial == "E0_0_1":
        labels = ("E0,0,1", "E1,0,0", "E2,1,0")
    elif initial == "E2_1_0":
        labels = ("E2,1,0", "E1,0,0", "E0,0,1")
    else:
        raise ValueError("initial must be 'E0_0_1' or 'E2_1_0'")
    return FewLevelState(labels=labels,
                         amplitudes=np.array([stay, mid, toggle]))


def swap_gate(alpha_el: complex, beta_el: complex,
              alpha_ph: complex, beta_ph: complex
              ) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
    """State exchange between the electron qubit and the photon qubit.

    Product states map as
    (a_el, b_el) x (a_ph, b_ph) -> (-b_ph, a_ph) x (b_el, -a_el),
    i.e. a SWAP dressed with a sigma_y on each qubit.
    """
    for pair in ((alpha_el, beta_el), (alpha_ph, beta_ph)):
        if abs(abs(pair[0]) ** 2 + abs(pair[1]) ** 2 - 1.0) > NORM_TOL:
            raise ValueError("qubit coefficients must be normalized")
    electron = (-beta_ph, alpha_ph)
    photon = (beta_el, -alpha_el)
    return electron, photon


def symmetric_ladder_coefficient(n_emitters: int, n_excited: int,
                                 direction: str) -> float:
    """Matrix element of the collective ladder operators on symmetric states.

    Lowering |n> gives sqrt((N - n + 1) n) |n-1>; raising gives
    sqrt((N - n)(n + 1)) |n+1>. The n=1 lowering element sqrt(N) is the
    collective coupling enhancement.
    """
    if not 0 <= n_excited <= n_emitters:
        raise ValueError("excitation count outside [0, N]")
    if direction == "raise":
        if n_excited >= n_emitters:
            raise ValueError("cannot raise the fully excited state")
        return math.sqrt((n_emitters - n_excited) * (n_excited + 1))
    if direction == "lower":
        if n_excited <= 0:
            raise ValueError("cannot lower the collective ground state")
        return math.sqrt((n_emitters - n_excited + 1) * n_excited)
    raise ValueError("direction must be 'raise' or 'lower'")


def tavis_cummings_single_excitation(n_emitters: int, g: complex,
                                     t: float) -> FewLevelState:
    """Single shared excitation of N emitters Rabi-coupled to one mode.

    The collective coupling is sqrt(N) |g|, so a full photon transfer needs
    only g*T = pi / (2 sqrt(N)).
    """
    if n_emitters < 1:
        raise ValueError("need at least one emitter")
    gt = math.sqrt(n_emitters) * abs(g) * t
    return FewLevelState(
        labels=("1S,0", "0S,1"),
        amplitudes=np.array([math.cos(gt), -_phase(g) * math.sin(gt)]),
    )


def jc_eigensystem(n_photons: int, g: complex, hbar: float = 1.0
                   ) -> list[tuple[float, np.ndarray]]:
    """Polariton eigenpairs of the n-photon excitation block.

    Returns the symmetric/antisymmetric combinations of |excited, n-1> and
    |recoiled, n> with eigenvalues +/- hbar |g| sqrt(n); n = 0 gives the
    single dark ground state at zero.
    """
    if n_photons < 0:
        raise ValueError("photon number must be nonnegative")
    if n_photons == 0:
        return [(0.0, np.array([1.0 + 0.0j]))]
    mag = hbar * abs(g) * math.sqrt(n_photons)
    inv = math.sqrt(0.5)
    phase = _phase(g)
    # block Hamiltonian [[0, i hbar g sqrt(n)], [-i hbar g* sqrt(n), 0]]
    plus = np.array([inv * 1j * phase.conjugate(), inv], dtype=complex)
    minus = np.array([-inv * 1j * phase.conjugate(), inv], dtype=complex)
    return [(mag, plus), (-mag, minus)]


def jc_block_hamiltonian(n_photons: int, g: complex,
                         hbar: float = 1.0) -> np.ndarray:
    """2x2 excitation block on (|excited, n-1>, |recoiled, n>)."""
    if n_photons < 1:
        raise ValueError("block exists only for n >= 1")
    coup = 1j * hbar * g * math.sqrt(n_photons)
    return np.array([[0.0, coup], [np.conj(coup), 0.0]], dtype=complex)
