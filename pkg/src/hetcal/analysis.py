"""
Calibration pipeline: ENBW, signal power, spectral ratio and efficiency.

The efficiency estimator is

    eta = hbar * omega * B_neq * X / (2 * P_alpha)

where ``X`` is the beat-note power divided by the shot-noise power read in
one analyzer bin and ``B_neq`` refers that noise back to 1 Hz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .constants import POWER_FLOOR, photon_energy
from .dataset import Dataset
from .esa import Trace
from .exceptions import AnalysisError, ConfigError, InsufficientSNRError, UnphysicalEfficiencyError
from .uncertainty import UncertainValue, propagate_uncertainty
from .units import dbmv_to_linear, linear_to_dbmv

#: Type-B relative ENBW uncertainty used when only one calibration trace exists.
DEFAULT_ENBW_REL_U = 0.003
#: Worst-case relative Type-B term for the second-order shot-noise approximation.
DEFAULT_TYPE_B_REL = 0.005
DEFAULT_K = 2.0

__all__ = [
    "EnbwResult",
    "PowerCalibration",
    "EfficiencyEstimate",
    "SpectralRatio",
    "dbmv_to_linear",
    "linear_to_dbmv",
    "compute_enbw",
    "calibrated_power",
    "power_calibration_from_dataset",
    "spectral_ratio",
    "extract_spectral_ratio",
    "estimate_efficiency",
]


@dataclass(frozen=True)
class EnbwResult:
    enbw_hz: UncertainValue
    rbw_hz: float
    ratio: float

    def to_dict(self):
        return {
            "enbw_hz": self.enbw_hz.value,
            "u_std_hz": self.enbw_hz.u_std,
            "u_kind": self.enbw_hz.kind,
            "rbw_hz": self.rbw_hz,
            "ratio": self.ratio,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(UncertainValue(float(d["enbw_hz"]), float(d["u_std_hz"]), d.get("u_kind", "typeB")),
                   float(d["rbw_hz"]), float(d["ratio"]))


@dataclass(frozen=True)
class PowerCalibration:
    attenuation_l: UncertainValue
    responsivity_r: UncertainValue  # V/uW
    voltage_v: UncertainValue  # dark-corrected


@dataclass(frozen=True)
class EfficiencyEstimate:
    eta: UncertainValue
    expanded_u: float
    k: float
    budget: dict
    x_ratio: UncertainValue
    p_alpha_w: UncertainValue
    enbw_hz: UncertainValue

    def to_dict(self):
        return {
            "eta": self.eta.value,
            "u_std": self.eta.u_std,
            "expanded_u": self.expanded_u,
            "k": self.k,
            "x_ratio": self.x_ratio.value,
            "p_alpha_w": self.p_alpha_w.value,
            "enbw_hz": self.enbw_hz.value,
            "budget": dict(self.budget),
        }


def _fit_halfwidth_bins(rbw_hz, step):
    """Half width of the peak fit: about RBW/20, at least one bin."""
    return max(1, int(round(rbw_hz / (20.0 * step))))


def _local_peak(lin, candidates, k):
    """Peak of a sampled curve by a least-squares quadratic in the log domain.

    The peak bin is located on a ``2k+1``-bin moving average of ``lin`` among
    ``candidates``, so that bin-to-bin noise on a flat top does not pick the
    luckiest sample. The quadratic is fitted to ``10*log10(lin)`` over ``+-k``
    bins around it; with ``k == 1`` this is the classic 3-point parabola.

    Returns ``(center_bin, bin_offset, peak_db)``. The vertex is used only if
    the fit is concave with its vertex inside the fit window, otherwise the
    fitted value at the center bin.
    """
    n = lin.size
    smooth = np.convolve(lin, np.ones(2 * k + 1) / (2 * k + 1), mode="same")
    i = int(candidates[np.argmax(smooth[candidates])])
    k = min(k, i, n - 1 - i)
    seg = lin[i - k : i + k + 1]
    if k < 1 or not np.all(seg > 0):
        return i, 0.0, 10.0 * math.log10(lin[i]) if lin[i] > 0 else -math.inf
    x = np.arange(-k, k + 1, dtype=float)
    c2, c1, c0 = np.polyfit(x, 10.0 * np.log10(seg), 2)
    if c2 < 0 and abs(c1 / (2.0 * c2)) <= k:
        offset = -c1 / (2.0 * c2)
        return i, offset, float(c0 - c1 * c1 / (4.0 * c2))
    return i, 0.0, float(c0)


def _off_tone_median(lin, freq, i, rbw_hz):
    # a wide RBW filter fills much of the span, so judge prominence against
    # the bins well clear of the tone when there are any
    far = np.abs(freq - freq[i]) > 2.0 * rbw_hz
    return float(np.median(lin[far] if far.sum() >= 8 else lin))


def _enbw_single(trace: Trace, rbw_hz, reference_power, min_peak_db):
    lin = dbmv_to_linear(trace.values_dbmv, reference_power)
    step = trace.freq_hz[1] - trace.freq_hz[0]
    i, _, peak_db = _local_peak(lin, np.arange(lin.size), _fit_halfwidth_bins(rbw_hz, step))
    median = _off_tone_median(lin, trace.freq_hz, i, rbw_hz)
    if median > 0 and lin[i] < median * 10 ** (min_peak_db / 10):
        raise InsufficientSNRError(
            f"no dominant tone: peak is {10 * math.log10(lin[i] / median):.1f} dB above the "
            f"off-tone median, need >= {min_peak_db:g} dB"
        )
    peak = 10 ** (peak_db / 10)
    return float(trapezoid(lin / peak, trace.freq_hz))


def compute_enbw(
    tone_traces: Trace | Sequence[Trace],
    rbw_hz,
    *,
    reference_power=1.0,
    type_b_rel=DEFAULT_ENBW_REL_U,
    min_peak_db=20.0,
) -> EnbwResult:
    """Equivalent noise bandwidth from narrow-tone analyzer traces.

    Each trace is converted to linear power, normalized to its interpolated
    peak and integrated over the full span. With several traces the result is
    their mean with a Type-A standard uncertainty of the mean; a single trace
    gets the Type-B relative uncertainty ``type_b_rel``.
    """
    if isinstance(tone_traces, Trace):
        tone_traces = [tone_traces]
    tone_traces = list(tone_traces)
    if not tone_traces:
        raise ConfigError("need at least one tone trace")
    if rbw_hz <= 0:
        raise ConfigError("rbw_hz must be positive")
    widths = np.array([_enbw_single(t, rbw_hz, reference_power, min_peak_db) for t in tone_traces])
    mean = float(widths.mean())
    if widths.size > 1:
        u = UncertainValue(mean, float(widths.std(ddof=1) / math.sqrt(widths.size)), "typeA")
    else:
        u = UncertainValue.from_relative(mean, type_b_rel, "typeB")
    return EnbwResult(u, float(rbw_hz), mean / rbw_hz)


def calibrated_power(cal: PowerCalibration) -> UncertainValue:
    """Signal power in watts, ``V * l / R * 1e-6`` with R in V/uW."""
    v, l, r = cal.voltage_v, cal.attenuation_l, cal.responsivity_r
    if v.value <= 0:
        raise AnalysisError(
            f"dark-corrected monitor voltage {v.value:.3g} V is not positive: "
            "signal blocked or monitor miswired"
        )
    if l.value <= 0 or r.value <= 0:
        raise ConfigError("attenuation and responsivity must be positive")
    p = v.value * l.value / r.value * 1e-6
    return UncertainValue(p, p * propagate_uncertainty([v.rel, l.rel, r.rel]), "combined")


def power_calibration_from_dataset(
    datasets: Dataset | Sequence[Dataset], rel_u_attenuation, rel_u_responsivity
) -> PowerCalibration:
    """Pool the dark-corrected monitor samples of one or more acquisitions.

    The voltage carries the Type-A standard error of the pooled mean; the
    attenuation and responsivity carry their certificate (Type-B) values.
    """
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    corrected = np.concatenate([ds.monitor_samples - ds.monitor_dark_mean for ds in datasets])
    first = datasets[0]
    for ds in datasets[1:]:
        if ds.responsivity != first.responsivity or ds.attenuation_l != first.attenuation_l:
            raise ConfigError("datasets were recorded with different monitor calibrations")
    u_v = float(corrected.std(ddof=1) / math.sqrt(corrected.size)) if corrected.size > 1 else 0.0
    return PowerCalibration(
        attenuation_l=UncertainValue.from_relative(first.attenuation_l, rel_u_attenuation),
        responsivity_r=UncertainValue.from_relative(first.responsivity, rel_u_responsivity),
        voltage_v=UncertainValue(float(corrected.mean()), u_v, "typeA"),
    )


@dataclass(frozen=True)
class SpectralRatio:
    """Per-dataset pieces of the spectral ratio."""

    tone_power: float
    noise_level: float
    x: float
    rel_u_noise: float
    tone_freq_hz: float = field(default=math.nan)


def _region_mask(freq, noise_region, noise_exclude):
    mask = np.ones(freq.size, dtype=bool)
    if noise_region is not None:
        lo, hi = noise_region
        mask &= (freq >= lo) & (freq <= hi)
    for lo, hi in noise_exclude or ():
        mask &= ~((freq >= lo) & (freq <= hi))
    if mask.sum() < 2:
        raise ConfigError("noise region selects fewer than two bins")
    return mask


def spectral_ratio(ds: Dataset, *, tone_halfwidth_hz=None, noise_region=None, noise_exclude=None) -> SpectralRatio:
    """Beat-note power over shot-noise level for one acquisition.

    Electronic noise is removed from both the shot and quadrature traces in
    linear units. The shot level is the mean corrected LO-only trace over the
    noise region; the tone power is the log-domain fitted peak of
    (corrected quadrature - corrected shot) within ``tone_halfwidth_hz`` of
    the recorded IF (default two RBWs).
    """
    ref = ds.esa.reference_power
    freq = ds.freq_hz
    elec = dbmv_to_linear(ds.trace_electronic.values_dbmv, ref)
    shot = dbmv_to_linear(ds.trace_shot.values_dbmv, ref) - elec
    quad = dbmv_to_linear(ds.trace_quadrature.values_dbmv, ref) - elec

    mask = _region_mask(freq, noise_region, noise_exclude)
    n0 = float(shot[mask].mean())
    if not n0 > 0:
        raise AnalysisError(
            "shot-noise level is not positive after electronic-noise subtraction: "
            "electronic trace exceeds the shot-noise trace"
        )
    rel_u_noise = float(shot[mask].std(ddof=1) / math.sqrt(mask.sum()) / n0)

    if_hz = ds.metadata.if_hz
    halfwidth = 2.0 * ds.esa.rbw_hz if tone_halfwidth_hz is None else float(tone_halfwidth_hz)
    window = np.flatnonzero(np.abs(freq - if_hz) <= halfwidth)
    if window.size == 0:
        raise ConfigError(f"IF {if_hz:g} Hz is outside the recorded span")
    diff = np.maximum(quad, POWER_FLOOR) - np.maximum(shot, POWER_FLOOR)
    step = freq[1] - freq[0]
    i, offset, peak_db = _local_peak(diff, window, _fit_halfwidth_bins(ds.esa.rbw_hz, step))
    s = 10 ** (peak_db / 10) if diff[i] > 0 else 0.0
    if s < 3.0 * n0:
        raise InsufficientSNRError(
            f"beat-note power {s:.3g} is below 3x the shot-noise level {n0:.3g} "
            "(insufficient SNR: is the signal present and the IF inside the tone window?)"
        )
    return SpectralRatio(s, n0, s / n0, rel_u_noise, float(freq[i] + offset * step))


def extract_spectral_ratio(datasets: Dataset | Sequence[Dataset], **window) -> UncertainValue:
    """Spectral ratio ``X`` with a Type-A standard uncertainty.

    With repeated acquisitions ``X`` is their mean and ``u(X)`` the standard
    error of the mean. A single acquisition falls back to the standard error
    of its shot-noise level.
    """
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    parts = [spectral_ratio(ds, **window) for ds in datasets]
    xs = np.array([p.x for p in parts])
    if xs.size > 1:
        return UncertainValue(float(xs.mean()), float(xs.std(ddof=1) / math.sqrt(xs.size)), "typeA")
    return UncertainValue(float(xs[0]), float(xs[0] * parts[0].rel_u_noise), "typeA")


def _as_enbw_value(enbw):
    if isinstance(enbw, EnbwResult):
        return enbw.enbw_hz
    if isinstance(enbw, UncertainValue):
        return enbw
    return UncertainValue.from_relative(float(enbw), DEFAULT_ENBW_REL_U)


def estimate_efficiency(
    x: UncertainValue,
    p_alpha: UncertainValue,
    enbw,
    wavelength_m,
    type_b_rel=DEFAULT_TYPE_B_REL,
    k=DEFAULT_K,
    *,
    check_physical=True,
) -> EfficiencyEstimate:
    """Heterodyne detection efficiency with its uncertainty budget.

    The combined relative uncertainty is the quadrature sum of the power,
    ENBW, spectral-ratio and Type-B terms; ``expanded_u = k * u_std``.

    Raises
    ------
    UnphysicalEfficiencyError
        If ``eta > 1 + 3 u(eta)`` and ``check_physical`` is set.
    """
    b = _as_enbw_value(enbw)
    if x.value < 0:
        raise ConfigError("spectral ratio must be non-negative")
    if p_alpha.value <= 0 or b.value <= 0 or wavelength_m <= 0:
        raise ConfigError("signal power, ENBW and wavelength must be positive")
    if type_b_rel < 0 or k <= 0:
        raise ConfigError("type_b_rel must be >= 0 and k > 0")
    scale = photon_energy(wavelength_m) * b.value / (2.0 * p_alpha.value)
    eta = scale * x.value
    budget = {
        "rel_p_alpha": p_alpha.rel,
        "rel_enbw": b.rel,
        "rel_x": x.rel if x.value > 0 else 0.0,
        "rel_type_b": float(type_b_rel),
    }
    if x.value > 0:
        u = eta * propagate_uncertainty(budget.values())
    else:
        u = scale * x.u_std
    if check_physical and eta > 1.0 + 3.0 * u:
        raise UnphysicalEfficiencyError(
            f"estimated efficiency {eta:.4g} exceeds 1 by more than 3 standard uncertainties "
            f"({u:.2g}): inconsistent power or ENBW calibration"
        )
    return EfficiencyEstimate(
        eta=UncertainValue(eta, u, "combined"),
        expanded_u=k * u,
        k=float(k),
        budget=budget,
        x_ratio=x,
        p_alpha_w=p_alpha,
        enbw_hz=b,
    )
