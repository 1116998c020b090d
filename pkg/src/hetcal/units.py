"""Conversions between linear trace power and the analyzer's dBmV scale."""
import numpy as np

from .constants import POWER_FLOOR


def linear_to_dbmv(power, reference_power=1.0, floor=POWER_FLOOR):
    """Linear power to dBmV; bins below ``floor`` are clamped first."""
    if reference_power <= 0:
        raise ValueError("reference_power must be positive")
    p = np.maximum(np.asarray(power, dtype=float), floor)
    return 10.0 * np.log10(p / reference_power)


def dbmv_to_linear(values_dbmv, reference_power=1.0):
    if reference_power <= 0:
        raise ValueError("reference_power must be positive")
    return reference_power * 10.0 ** (np.asarray(values_dbmv, dtype=float) / 10.0)
