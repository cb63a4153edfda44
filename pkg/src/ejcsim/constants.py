"""Physical constants (CODATA 2018, SI units)."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants used throughout the simulator.

    All values are SI; ``electron_rest_energy`` is in eV for convenient
    nonrelativistic bookkeeping.
    """

    electron_mass: float = 9.1093837015e-31      # kg
    electron_charge: float = 1.602176634e-19     # C
    hbar: float = 1.054571817e-34                # J*s
    light_speed: float = 299792458.0             # m/s
    electron_rest_energy: float = 510998.9499961642  # eV

    def __post_init__(self) -> None:
        for name in ("electron_mass", "electron_charge", "hbar",
                     "light_speed", "electron_rest_energy"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        mc2_ev = self.electron_mass * self.light_speed**2 / self.electron_charge
        if abs(mc2_ev - self.electron_rest_energy) > 1e-6 * self.electron_rest_energy:
            raise ValueError("rest energy inconsistent with mass*c^2")


CONSTANTS = PhysicalConstants()
