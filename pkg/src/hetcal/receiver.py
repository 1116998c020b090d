"""
Closed-form model of a lossy, imbalanced balanced heterodyne receiver.

The beam splitter has power transmission ``1/2 + delta_tau`` towards
detector 1 and ``1/2 - delta_tau`` towards detector 2. Insertion losses
``tau_alpha`` / ``tau_beta`` act on the signal and LO inputs and the two
photodiodes have quantum efficiencies ``eta1`` / ``eta2``. Everything in this
module is an expectation value; the stochastic side lives in :mod:`hetcal.esa`.

Photon fluxes are in photons/s, so the shot-noise variance comes out per Hz
of measurement bandwidth and the beat power as a mean-square amplitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .exceptions import ConfigError


def _check_unit_interval(name, value, *, allow_zero=False):
    lo_ok = value >= 0.0 if allow_zero else value > 0.0
    if not (lo_ok and value <= 1.0):
        interval = "[0, 1]" if allow_zero else "(0, 1]"
        raise ConfigError(f"{name}={value!r} must lie in {interval}")


@dataclass(frozen=True)
class ReceiverParams:
    """Ground-truth physical parameters of the balanced receiver.

    ``k_conv`` and ``gain`` only set the display units of the traces; they
    cancel in every ratio the calibration uses.
    """

    delta_tau: float = 0.0
    tau_alpha: float = 0.92
    tau_beta: float = 0.92
    eta1: float = 0.75
    eta2: float = 0.75
    eta_mm: float = 0.5
    k_conv: float = 1.0
    gain: float = 1.0
    noise_factor: float = 1.0

    def __post_init__(self):
        if not 4.0 * self.delta_tau**2 <= 1.0:
            raise ConfigError(
                f"delta_tau={self.delta_tau!r} violates 4*delta_tau**2 <= 1"
            )
        for name in ("tau_alpha", "tau_beta", "eta1", "eta2"):
            _check_unit_interval(name, getattr(self, name))
        _check_unit_interval("eta_mm", self.eta_mm, allow_zero=True)
        if self.k_conv <= 0 or self.gain <= 0:
            raise ConfigError("k_conv and gain must be positive")
        if not self.noise_factor >= 1.0:
            raise ConfigError(f"noise_factor={self.noise_factor!r} must be >= 1")

    @property
    def eta_av(self):
        return 0.5 * (self.eta1 + self.eta2)

    @property
    def delta_eta(self):
        return self.eta1 - self.eta2


@dataclass(frozen=True)
class FieldParams:
    """Input fields: photon fluxes, signal wavelength and intermediate frequency."""

    photon_flux_signal: float
    photon_flux_lo: float
    wavelength: float = 1542e-9
    if_hz: float = 20e6
    max_flux_ratio: float = 1e-3

    def __post_init__(self):
        if self.photon_flux_signal < 0 or self.photon_flux_lo <= 0:
            raise ConfigError("photon fluxes must be non-negative (LO strictly positive)")
        if self.photon_flux_signal > self.max_flux_ratio * self.photon_flux_lo:
            raise ConfigError(
                "photon_flux_signal must be weak compared to photon_flux_lo "
                f"(ratio {self.photon_flux_signal / self.photon_flux_lo:.3g} "
                f"> {self.max_flux_ratio:g})"
            )
        if self.wavelength <= 0:
            raise ConfigError("wavelength must be positive")
        if self.if_hz <= 0:
            raise ConfigError("if_hz must be positive")


@dataclass(frozen=True)
class ChannelParams:
    """Ordered power transmission factors placed in the signal path."""

    transmissions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "transmissions", tuple(float(t) for t in self.transmissions))
        for t in self.transmissions:
            _check_unit_interval("transmission", t)

    @property
    def total(self):
        return math.prod(self.transmissions)


@dataclass(frozen=True)
class GaussianBeam:
    """Fundamental Gaussian mode; ``waist`` is the 1/e field radius."""

    waist: float
    lateral_offset: float = 0.0

    def __post_init__(self):
        if self.waist <= 0:
            raise ConfigError("waist must be positive")
        if self.lateral_offset < 0:
            raise ConfigError("lateral_offset must be non-negative")


def lumped_efficiency(rx: ReceiverParams) -> float:
    """Effective heterodyne efficiency ``(1 - 4 dtau^2) tau_alpha eta_av eta_mm``."""
    return (1.0 - 4.0 * rx.delta_tau**2) * rx.tau_alpha * rx.eta_av * rx.eta_mm


def shot_noise_variance_density(rx: ReceiverParams, fields: FieldParams) -> float:
    """LO shot-noise variance per Hz of the difference photocurrent.

    Keeps the second-order ``delta_eta * delta_tau`` term, i.e. the detector
    that sees the larger splitter output is weighted by its own efficiency.
    """
    gain2 = (rx.k_conv * rx.gain) ** 2
    return (
        gain2
        * rx.noise_factor
        * rx.tau_beta
        * fields.photon_flux_lo
        * (rx.eta_av + rx.delta_eta * rx.delta_tau)
    )


def beat_power_rms(rx: ReceiverParams, fields: FieldParams) -> float:
    """Mean-square amplitude of the beat note at the IF (DC terms excluded)."""
    gain2 = (rx.k_conv * rx.gain) ** 2
    return (
        gain2
        * 2.0
        * (1.0 - 4.0 * rx.delta_tau**2)
        * rx.tau_alpha
        * rx.tau_beta
        * rx.eta_mm
        * rx.eta_av**2
        * fields.photon_flux_signal
        * fields.photon_flux_lo
    )


def gaussian_mode_overlap(a: GaussianBeam, b: GaussianBeam) -> float:
    """Power overlap ``|gamma|^2`` of two coaxial fundamental Gaussian modes.

    Both beams are displaced along the same transverse axis, so only the
    difference of their offsets matters.
    """
    s = a.waist**2 + b.waist**2
    d = a.lateral_offset - b.lateral_offset
    return (2.0 * a.waist * b.waist / s) ** 2 * math.exp(-2.0 * d * d / s)


def apply_attenuation(fields: FieldParams, ch: ChannelParams | Sequence[float]) -> FieldParams:
    """Scale the signal photon flux by the channel transmission; LO untouched."""
    if not isinstance(ch, ChannelParams):
        ch = ChannelParams(tuple(ch))
    return replace(fields, photon_flux_signal=fields.photon_flux_signal * ch.total)
