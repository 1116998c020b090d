"""
Electrical spectrum analyzer and power-monitor emulation.

Expected spectra are built from the receiver model, then realized as
averaged sweeps. Noise-only bins follow a unit-mean gamma law with shape
``n_avg`` (power averaging of a complex Gaussian field). Bins that carry a
coherent tone use the matching noncentral chi-squared law, so a strong tone
only fluctuates through its beating with the noise underneath it.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from .constants import POWER_FLOOR
from .exceptions import ConfigError
from .receiver import FieldParams, ReceiverParams, beat_power_rms, shot_noise_variance_density
from .units import linear_to_dbmv

FILTER_FAMILIES = ("gaussian", "supergaussian", "rectangular")
TRACE_KINDS = ("electronic", "shot", "quadrature")

#: ENBW/RBW ratio of the analyzer the supergaussian family is tuned to mimic.
ANALYZER_ENBW_RATIO = 1.12


def supergaussian_enbw_ratio(order):
    """Analytic ENBW/RBW of ``exp(-ln2 * |2f/RBW|**(2*order))``.

    ``order=1`` is the gaussian family (ratio ``sqrt(pi / (4 ln2))``); the
    ratio tends to 1 as ``order`` grows and exceeds the gaussian value for
    ``order < 1``.
    """
    q = 2.0 * order
    return gamma_fn(1.0 + 1.0 / q) * math.log(2.0) ** (-1.0 / q)


@functools.lru_cache(maxsize=None)
def calibrated_supergaussian_order(ratio=ANALYZER_ENBW_RATIO):
    """Filter order whose analytic ENBW/RBW equals ``ratio``."""
    if not 1.0 < ratio < supergaussian_enbw_ratio(0.25):
        raise ConfigError(f"ENBW/RBW ratio {ratio} is not reachable by the supergaussian family")
    return brentq(lambda p: supergaussian_enbw_ratio(p) - ratio, 0.25, 50.0, xtol=1e-15, rtol=1e-15)


@dataclass(frozen=True)
class EsaConfig:
    """Analyzer settings.

    ``filter_order`` only applies to the supergaussian family; left as None it
    takes the order calibrated to :data:`ANALYZER_ENBW_RATIO`.
    """

    center_hz: float = 20e6
    span_hz: float = 10e6
    rbw_hz: float = 1e6
    n_bins: int = 1001
    n_avg: int = 100
    filter_family: str = "gaussian"
    filter_order: float | None = None
    reference_power: float = 1.0

    def __post_init__(self):
        if self.filter_family not in FILTER_FAMILIES:
            raise ConfigError(
                f"filter_family={self.filter_family!r} not in {FILTER_FAMILIES}"
            )
        if self.filter_family == "supergaussian":
            if self.filter_order is None:
                object.__setattr__(self, "filter_order", calibrated_supergaussian_order())
            elif self.filter_order <= 0:
                raise ConfigError("filter_order must be positive")
        elif self.filter_order is not None:
            raise ConfigError("filter_order only applies to the supergaussian family")
        if self.span_hz <= 0 or self.rbw_hz <= 0:
            raise ConfigError("span_hz and rbw_hz must be positive")
        if self.rbw_hz > self.span_hz:
            raise ConfigError(f"rbw_hz={self.rbw_hz:g} exceeds span_hz={self.span_hz:g}")
        if int(self.n_bins) != self.n_bins or self.n_bins < 32:
            raise ConfigError(f"n_bins={self.n_bins!r} must be an integer >= 32")
        if int(self.n_avg) != self.n_avg or self.n_avg < 1:
            raise ConfigError(f"n_avg={self.n_avg!r} must be an integer >= 1")
        if self.reference_power <= 0:
            raise ConfigError("reference_power must be positive")
        if self.center_hz - self.span_hz / 2 < 0:
            raise ConfigError("span extends below 0 Hz")

    def freq_axis(self):
        half = self.span_hz / 2.0
        return np.linspace(self.center_hz - half, self.center_hz + half, int(self.n_bins))

    @property
    def bin_width(self):
        return self.span_hz / (self.n_bins - 1)

    @property
    def enbw_ratio(self):
        """Analytic ENBW/RBW of the configured filter."""
        if self.filter_family == "rectangular":
            return 1.0
        order = 1.0 if self.filter_family == "gaussian" else self.filter_order
        return supergaussian_enbw_ratio(order)

    @property
    def enbw_hz(self):
        return self.enbw_ratio * self.rbw_hz

    def covers(self, f_hz):
        return abs(f_hz - self.center_hz) < self.span_hz / 2.0


@dataclass(frozen=True, eq=False)
class Trace:
    """One analyzer trace on a uniform ascending frequency axis."""

    freq_hz: np.ndarray
    values_dbmv: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float)
        v = np.asarray(self.values_dbmv, dtype=float)
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "values_dbmv", v)
        if f.ndim != 1 or v.shape != f.shape:
            raise ConfigError("trace axis and values must be 1-D arrays of equal length")
        if f.size < 2:
            raise ConfigError("trace needs at least two bins")
        step = np.diff(f)
        if np.any(step <= 0):
            raise ConfigError("trace frequency axis is not strictly ascending")
        if np.ptp(step) > 1e-6 * abs(step.mean()):
            raise ConfigError("trace frequency axis is not uniformly spaced")

    @property
    def bin_width(self):
        return (self.freq_hz[-1] - self.freq_hz[0]) / (self.freq_hz.size - 1)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return np.array_equal(self.freq_hz, other.freq_hz) and np.array_equal(
            self.values_dbmv, other.values_dbmv
        )


@dataclass(frozen=True)
class MonitorModel:
    """Signal power monitor: voltage = responsivity * P[uW] + dark offset + noise."""

    responsivity: float = 0.5  # V/uW
    dark_offset: float = 0.01  # V
    readout_noise_std: float = 1e-3  # V

    def __post_init__(self):
        if self.responsivity <= 0:
            raise ConfigError("monitor responsivity must be positive")
        if self.readout_noise_std < 0:
            raise ConfigError("monitor readout_noise_std must be non-negative")


def filter_power_response(cfg: EsaConfig, f_offset):
    """Normalized power response ``|H(f)/H(0)|**2`` of the RBW filter.

    All families are -3 dB at ``f_offset = +-RBW/2``. A rectangular filter
    sampled exactly on its edge returns the midpoint value 0.5.
    """
    x = 2.0 * np.abs(np.asarray(f_offset, dtype=float)) / cfg.rbw_hz
    if cfg.filter_family == "rectangular":
        h = np.where(x < 1.0, 1.0, 0.0)
        return np.where(np.abs(x - 1.0) <= 1e-9, 0.5, h)
    order = 1.0 if cfg.filter_family == "gaussian" else cfg.filter_order
    return np.exp(-math.log(2.0) * x ** (2.0 * order))


def expected_components(rx: ReceiverParams, fields: FieldParams, cfg: EsaConfig, kind, s_elec):
    """Expected per-bin (noise, tone) linear powers for one trace kind."""
    if kind not in TRACE_KINDS:
        raise ConfigError(f"unknown trace kind {kind!r}")
    if s_elec < 0:
        raise ConfigError("s_elec must be non-negative")
    n = int(cfg.n_bins)
    if kind == "electronic":
        return np.full(n, s_elec * cfg.enbw_hz), np.zeros(n)
    noise = np.full(n, (shot_noise_variance_density(rx, fields) + s_elec) * cfg.enbw_hz)
    if kind == "shot":
        return noise, np.zeros(n)
    if not cfg.covers(fields.if_hz):
        raise ConfigError(
            f"IF {fields.if_hz:g} Hz lies outside the analyzer span "
            f"{cfg.center_hz:g} +- {cfg.span_hz / 2:g} Hz"
        )
    tone = beat_power_rms(rx, fields) * filter_power_response(cfg, cfg.freq_axis() - fields.if_hz)
    return noise, tone


def expected_spectrum(rx: ReceiverParams, fields: FieldParams, cfg: EsaConfig, kind, s_elec):
    """Expected per-bin linear power of an electronic, shot or quadrature trace."""
    noise, tone = expected_components(rx, fields, cfg, kind, s_elec)
    return noise + tone


def _averaged_power(rng, noise, tone, n_avg):
    # Mean of n_avg sweeps of |sqrt(tone) + complex gaussian|^2: a scaled
    # noncentral chi-squared with 2*n_avg degrees of freedom, split into its
    # coherent and central parts so huge tone/noise ratios stay stable.
    scale = noise / (2.0 * n_avg)
    coherent = (np.sqrt(tone) + np.sqrt(scale) * rng.standard_normal(noise.shape)) ** 2
    return coherent + scale * rng.chisquare(2 * n_avg - 1, size=noise.shape)


def sample_trace(expected, cfg: EsaConfig, rng_seed=None, *, tone=None, deterministic=False) -> Trace:
    """Draw one averaged analyzer trace around ``expected``.

    Parameters
    ----------
    expected : array_like
        Expected linear power per bin. When ``tone`` is given this is the
        noise part only and the coherent tone power is added on top.
    rng_seed : int, SeedSequence or Generator
        Anything accepted by :func:`numpy.random.default_rng`.
    deterministic : bool
        Return the expectation itself (the ``n_avg -> inf`` limit).
    """
    noise = np.asarray(expected, dtype=float)
    if noise.shape != (int(cfg.n_bins),):
        raise ConfigError(f"expected spectrum has {noise.size} bins, config says {cfg.n_bins}")
    tone = np.zeros_like(noise) if tone is None else np.asarray(tone, dtype=float)
    if deterministic:
        power = noise + tone
    else:
        rng = np.random.default_rng(rng_seed)
        noise_c = np.maximum(noise, 0.0)
        if np.any(tone > 0):
            power = _averaged_power(rng, noise_c, np.maximum(tone, 0.0), int(cfg.n_avg))
        else:
            power = noise_c * rng.gamma(cfg.n_avg, 1.0 / cfg.n_avg, size=noise.shape)
    return Trace(cfg.freq_axis(), linear_to_dbmv(power, cfg.reference_power, POWER_FLOOR))


def synthesize_tone_cal_trace(
    cfg: EsaConfig, tone_hz, tone_power, rng_seed=None, *, floor_power=0.0, deterministic=False
) -> Trace:
    """Analyzer trace of a single narrow tone, used to measure the ENBW."""
    if not cfg.covers(tone_hz):
        raise ConfigError(f"calibration tone {tone_hz:g} Hz lies outside the analyzer span")
    shape = tone_power * filter_power_response(cfg, cfg.freq_axis() - tone_hz)
    floor = np.full(int(cfg.n_bins), float(floor_power))
    return sample_trace(floor, cfg, rng_seed, tone=shape, deterministic=deterministic)


def synthesize_monitor_samples(mon: MonitorModel, p_at_monitor_uw, n, rng_seed=None, *, deterministic=False):
    """Monitor voltages for optical power ``p_at_monitor_uw`` (in uW)."""
    if n < 1:
        raise ConfigError("need at least one monitor sample")
    mean = mon.responsivity * p_at_monitor_uw + mon.dark_offset
    if deterministic or mon.readout_noise_std == 0:
        return np.full(int(n), mean)
    rng = np.random.default_rng(rng_seed)
    return mean + mon.readout_noise_std * rng.standard_normal(int(n))
