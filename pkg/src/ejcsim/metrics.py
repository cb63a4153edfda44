"""Observables: fidelity, labeled probabilities, photon statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .analytic import FewLevelState
from .errors import BasisMismatchError
from .model import Basis, JointState, LabeledStateProbability, require_same_basis


@dataclass(frozen=True)
class StateLabel:
    """Maps a display label to a momentum window and an occupation tuple.

    The electron window is a recoil-centered bin: all grid cells within
    ``half_width_cells`` of ``center_index``.
    """

    label: str
    center_index: int
    occupation: tuple[int, ...]
    half_width_cells: int

    def window(self, n_momentum: int) -> range:
        lo = max(0, self.center_index - self.half_width_cells)
        hi = min(n_momentum - 1, self.center_index + self.half_width_cells)
        return range(lo, hi + 1)


def fidelity(psi: JointState, phi: JointState) -> float:
    """|<psi|phi>|^2 for pure states on the same basis."""
    require_same_basis(psi, phi)
    return float(abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2)


def embed_few_level(state: FewLevelState, label_map: Mapping[str, StateLabel],
                    basis: Basis, envelope: np.ndarray) -> JointState:
    """Lift a few-level state onto the full basis.

    Each label becomes the electron ``envelope`` rigidly shifted to the
    label's center cell, tensor its occupation; coherences between labels are
    preserved. ``envelope`` is the momentum-space wavepacket centered on the
    grid center (typically the initial state's envelope).
    """
    envelope = np.asarray(envelope, dtype=complex)
    if envelope.shape != (len(basis.grid),):
        raise BasisMismatchError("envelope length must match the grid")
    amps = np.zeros((len(basis.grid), basis.fock.dim), dtype=complex)
    center = basis.grid.center_index
    for label, amplitude in zip(state.labels, state.amplitudes):
        if label not in label_map:
            raise BasisMismatchError(f"no basis mapping for label {label!r}")
        entry = label_map[label]
        shift = entry.center_index - center
        f = basis.fock.flatten(entry.occupation)
        src_lo, src_hi = max(0, -shift), min(len(basis.grid),
                                             len(basis.grid) - shift)
        if src_lo >= src_hi:
            raise BasisMismatchError(f"label {label!r} shifts off the grid")
        amps[src_lo + shift:src_hi + shift, f] += amplitude * envelope[src_lo:src_hi]
    out = JointState(basis, amps)
    if abs(out.norm() - 1.0) > 1e-9:
        raise BasisMismatchError("embedded state lost norm; check label map")
    return out


def fidelity_to_few_level(psi: JointState, state: FewLevelState,
                          label_map: Mapping[str, StateLabel],
                          envelope: np.ndarray) -> float:
    return fidelity(psi, embed_few_level(state, label_map, psi.basis, envelope))


def labeled_probabilities(psi: JointState, labels: Sequence[StateLabel]
                          ) -> list[LabeledStateProbability]:
    """Summed |amplitude|^2 over each label's window; residual under 'other'.

    Labels must not overlap: same occupation with intersecting momentum
    windows is rejected.
    """
    mat = np.abs(psi.as_matrix()) ** 2
    n_momentum = mat.shape[0]
    seen: dict[tuple[int, ...], set[int]] = {}
    for entry in labels:
        cells = set(entry.window(n_momentum))
        prior = seen.setdefault(entry.occupation, set())
        if prior & cells:
            raise ValueError(f"label {entry.label!r} overlaps another window")
        prior |= cells

    out = []
    total = 0.0
    for entry in labels:
        f = psi.basis.fock.flatten(entry.occupation)
        window = entry.window(n_momentum)
        p = float(mat[window.start:window.stop, f].sum())
        total += p
        out.append(LabeledStateProbability(label=entry.label, probability=p))
    out.append(LabeledStateProbability(
        label="other", probability=max(0.0, float(mat.sum()) - total)))
    return out


def photon_number_distribution(psi: JointState, mode: int) -> np.ndarray:
    """Marginal occupation distribution of one mode, tracing everything else."""
    fock = psi.basis.fock
    if not 0 <= mode < fock.mode_count:
        raise ValueError("mode index out of range")
    probs = np.abs(psi.as_matrix()) ** 2
    occ = fock.occupation_table()[:, mode]
    dist = np.zeros(fock.cutoff + 1)
    np.add.at(dist, occ, probs.sum(axis=0))
    return dist


def poissonian_reference(mean: float, cutoff: int) -> np.ndarray:
    """Poisson distribution truncated at ``cutoff`` and renormalized."""
    if mean < 0.0:
        raise ValueError("mean must be nonnegative")
    n = np.arange(cutoff + 1)
    if mean == 0.0:
        dist = np.zeros(cutoff + 1)
        dist[0] = 1.0
        return dist
    log_p = -mean + n * math.log(mean) - np.array(
        [math.lgamma(k + 1) for k in n])
    dist = np.exp(log_p)
    return dist / dist.sum()


def total_variation_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
