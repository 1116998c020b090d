"""Physical constants (exact SI values)."""
import math

HBAR = 1.054571817e-34  # J s
C_LIGHT = 2.99792458e8  # m / s

#: Linear power below which a bin is clamped before log conversion.
POWER_FLOOR = 1e-30


def photon_energy(wavelength_m):
    """Energy of one photon, hbar * omega, in joules."""
    return HBAR * 2.0 * math.pi * C_LIGHT / wavelength_m
