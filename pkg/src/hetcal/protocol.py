"""
Simulated acquisition sequence and validation sweeps.

A run at one setting starts with a both-blocked step (electronic-noise trace
plus a dark batch of the power monitor) and then repeats, per acquisition:
LO-only shot-noise trace, signal+LO quadrature trace, synchronous monitor
samples. The monitor sits before the fixed ND attenuation ``l``; channel
transmissions (the attenuation-sweep axis) sit after it, so the protocol
recovers ``T * eta`` when a channel is present.

Random streams are derived from ``numpy.random.SeedSequence`` keyed by
``(base seed, point, repeat)``, so every acquisition is reproducible on its
own and independent of all others.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

import numpy as np

from .analysis import EfficiencyEstimate, EnbwResult, compute_enbw
from .constants import photon_energy
from .dataset import Dataset, GroundTruth, Metadata, dumps, load_dataset, persist_dataset
from .esa import (
    EsaConfig,
    MonitorModel,
    expected_components,
    sample_trace,
    synthesize_monitor_samples,
    synthesize_tone_cal_trace,
)
from .estimator import (
    DEFAULT_REL_U_ATTENUATION,
    DEFAULT_REL_U_RESPONSIVITY,
    HeterodyneEfficiencyEstimator,
)
from .exceptions import ConfigError
from .receiver import ChannelParams, FieldParams, ReceiverParams, apply_attenuation, lumped_efficiency
from .uncertainty import compare_estimates

__all__ = [
    "AnalysisSettings",
    "Scenario",
    "SweepSpec",
    "SweepRow",
    "SweepReport",
    "fields_from_power",
    "run_protocol",
    "calibrate_enbw",
    "analyze",
    "validate_scenario",
    "run_sweep",
    "persist_dataset",
    "load_dataset",
]

SWEEP_AXES = ("signal_power", "attenuation", "if_frequency")
CSV_COLUMNS = ("axis_value", "eta", "u_std", "expanded_u_k2", "eta_true", "e_n")

# Stream keys: run-level streams and per-acquisition streams never collide.
_RUN_KEY, _ACQ_KEY = 0, 1


def fields_from_power(p_signal_w, p_lo_w=1e-3, wavelength=1542e-9, if_hz=20e6) -> FieldParams:
    """Field parameters from optical powers in watts."""
    e = photon_energy(wavelength)
    return FieldParams(p_signal_w / e, p_lo_w / e, wavelength, if_hz)


@dataclass(frozen=True)
class AnalysisSettings:
    k: float = 2.0
    type_b_rel: float = 0.005
    enbw_type_b_rel: float = 0.003
    rel_u_attenuation: float = DEFAULT_REL_U_ATTENUATION
    rel_u_responsivity: float = DEFAULT_REL_U_RESPONSIVITY
    tone_halfwidth_hz: float | None = None

    def __post_init__(self):
        if self.k <= 0:
            raise ConfigError("analysis.k must be positive")
        for name in ("type_b_rel", "enbw_type_b_rel", "rel_u_attenuation", "rel_u_responsivity"):
            if getattr(self, name) < 0:
                raise ConfigError(f"analysis.{name} must be non-negative")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to simulate and analyze one calibration setting.

    ``fields.photon_flux_signal`` is the flux at the power reference plane,
    i.e. after the fixed attenuation ``attenuation_l`` and before the channel.
    ``tone_cal_floor_dbc`` sets the noise floor of the ENBW calibration trace.
    """

    rx: ReceiverParams = field(default_factory=ReceiverParams)
    fields: FieldParams = field(default_factory=lambda: fields_from_power(10e-9))
    channel: ChannelParams = field(default_factory=ChannelParams)
    esa: EsaConfig = field(default_factory=EsaConfig)
    monitor: MonitorModel = field(default_factory=MonitorModel)
    attenuation_l: float = 0.01
    s_elec: float = 5e14
    n_repeats: int = 10
    seed: int = 0
    deterministic: bool = False
    n_dark: int = 100
    n_monitor: int = 100
    tone_cal_floor_dbc: float = -90.0
    start_time: str = "2026-01-01T00:00:00+00:00"
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)

    def __post_init__(self):
        if int(self.n_repeats) != self.n_repeats or self.n_repeats < 1:
            raise ConfigError(f"n_repeats={self.n_repeats!r} must be an integer >= 1")
        if self.n_dark < 1 or self.n_monitor < 1:
            raise ConfigError("n_dark and n_monitor must be >= 1")
        if not 0 < self.attenuation_l <= 1:
            raise ConfigError("attenuation_l must lie in (0, 1]")
        if self.s_elec < 0:
            raise ConfigError("s_elec must be non-negative")
        if not self.esa.covers(self.fields.if_hz):
            raise ConfigError(
                f"fields.if_hz={self.fields.if_hz:g} Hz lies outside the analyzer span "
                f"esa.center_hz={self.esa.center_hz:g} Hz +- esa.span_hz/2={self.esa.span_hz / 2:g} Hz"
            )
        try:
            datetime.fromisoformat(self.start_time)
        except ValueError:
            raise ConfigError(f"start_time={self.start_time!r} is not ISO 8601") from None

    @property
    def p_alpha_w(self):
        """Signal power at the reference plane."""
        return self.fields.photon_flux_signal * photon_energy(self.fields.wavelength)

    @property
    def eta_true(self):
        """Efficiency the protocol should recover: receiver times channel."""
        return lumped_efficiency(self.rx) * self.channel.total

    def with_axis_value(self, axis, value) -> "Scenario":
        """Copy of the scenario moved to ``value`` along a sweep axis."""
        if axis == "signal_power":
            flux = value / photon_energy(self.fields.wavelength)
            return replace(self, fields=replace(self.fields, photon_flux_signal=flux))
        if axis == "attenuation":
            return replace(self, channel=ChannelParams((value,)))
        if axis == "if_frequency":
            return replace(
                self,
                fields=replace(self.fields, if_hz=value),
                esa=replace(self.esa, center_hz=value),
            )
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def _run_streams(sc: Scenario, point):
    return np.random.SeedSequence(sc.seed, spawn_key=(_RUN_KEY, point)).spawn(3)


def run_protocol(sc: Scenario, point=0) -> list[Dataset]:
    """Simulate ``sc.n_repeats`` acquisitions of the measurement sequence."""
    esa, det = sc.esa, sc.deterministic
    elec_seq, dark_seq, _ = _run_streams(sc, point)

    # both-blocked step
    elec_noise, _ = expected_components(sc.rx, sc.fields, esa, "electronic", sc.s_elec)
    trace_elec = sample_trace(elec_noise, esa, elec_seq, deterministic=det)
    dark = synthesize_monitor_samples(sc.monitor, 0.0, sc.n_dark, dark_seq, deterministic=det)
    dark_mean = float(dark.mean())

    at_rx = apply_attenuation(sc.fields, sc.channel)
    shot_noise, _ = expected_components(sc.rx, at_rx, esa, "shot", sc.s_elec)
    quad_noise, quad_tone = expected_components(sc.rx, at_rx, esa, "quadrature", sc.s_elec)
    p_monitor_uw = sc.p_alpha_w / sc.attenuation_l * 1e6
    truth = GroundTruth(sc.eta_true, sc.p_alpha_w)
    t0 = datetime.fromisoformat(sc.start_time)

    out = []
    for i in range(int(sc.n_repeats)):
        acq_seq = np.random.SeedSequence(sc.seed, spawn_key=(_ACQ_KEY, point, i))
        seed = _seed_int(acq_seq)
        shot_seq, quad_seq, mon_seq = np.random.SeedSequence(seed).spawn(3)
        trace_shot = sample_trace(shot_noise, esa, shot_seq, deterministic=det)
        trace_quad = sample_trace(quad_noise, esa, quad_seq, tone=quad_tone, deterministic=det)
        samples = synthesize_monitor_samples(sc.monitor, p_monitor_uw, sc.n_monitor, mon_seq, deterministic=det)
        out.append(
            Dataset(
                esa=esa,
                trace_electronic=trace_elec,
                trace_shot=trace_shot,
                trace_quadrature=trace_quad,
                monitor_samples=samples,
                monitor_dark_mean=dark_mean,
                responsivity=sc.monitor.responsivity,
                attenuation_l=sc.attenuation_l,
                metadata=Metadata(
                    wavelength_m=sc.fields.wavelength,
                    if_hz=sc.fields.if_hz,
                    seed=seed,
                    timestamp=(t0 + timedelta(seconds=i)).isoformat(),
                ),
                ground_truth=truth,
            )
        )
    return out


def tone_cal_trace(sc: Scenario, point=0):
    """Narrow-tone calibration trace at the scenario's IF."""
    *_, enbw_seq = _run_streams(sc, point)
    tone_power = sc.esa.reference_power
    floor = tone_power * 10 ** (sc.tone_cal_floor_dbc / 10)
    return synthesize_tone_cal_trace(
        sc.esa, sc.fields.if_hz, tone_power, enbw_seq,
        floor_power=floor, deterministic=sc.deterministic,
    )


def calibrate_enbw(sc: Scenario, point=0) -> EnbwResult:
    return compute_enbw(
        tone_cal_trace(sc, point),
        sc.esa.rbw_hz,
        reference_power=sc.esa.reference_power,
        type_b_rel=sc.analysis.enbw_type_b_rel,
    )


def make_estimator(settings: AnalysisSettings, enbw) -> HeterodyneEfficiencyEstimator:
    return HeterodyneEfficiencyEstimator(
        enbw=enbw,
        k=settings.k,
        type_b_rel=settings.type_b_rel,
        rel_u_attenuation=settings.rel_u_attenuation,
        rel_u_responsivity=settings.rel_u_responsivity,
        tone_halfwidth_hz=settings.tone_halfwidth_hz,
    )


def analyze(datasets, settings: AnalysisSettings, enbw) -> EfficiencyEstimate:
    return make_estimator(settings, enbw).fit(datasets).estimate_


def validate_scenario(sc: Scenario, point=0) -> dict:
    """Simulate, analyze and compare the estimate with the ground truth."""
    datasets = run_protocol(sc, point)
    enbw = calibrate_enbw(sc, point)
    est = analyze(datasets, sc.analysis, enbw)
    cmp = compare_estimates(est, (sc.eta_true, 0.0))
    eta = est.eta.value
    return {
        "eta": eta,
        "u_std": est.eta.u_std,
        "expanded_u": est.expanded_u,
        "k": est.k,
        "eta_true": sc.eta_true,
        "rel_error": (eta - sc.eta_true) / sc.eta_true,
        "e_n": cmp.e_n,
        "agree": cmp.agree,
        "enbw_hz": enbw.enbw_hz.value,
        "n_repeats": len(datasets),
        "estimate": est.to_dict(),
    }


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    points: tuple
    base: Scenario = field(default_factory=Scenario)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep.axis={self.axis!r} not in {SWEEP_AXES}")
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        if len(self.points) < 2:
            raise ConfigError("a sweep needs at least two points")
        if any(p <= 0 for p in self.points):
            raise ConfigError("sweep points must be positive")
        # builds every point once so range errors surface before any run
        for p in self.points:
            self.base.with_axis_value(self.axis, p)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    estimate: EfficiencyEstimate
    eta_true: float
    e_n: float

    @property
    def agree(self):
        return self.e_n <= 1.0


@dataclass(frozen=True)
class SweepReport:
    axis: str
    rows: tuple
    summary: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            u = r.estimate.eta.u_std
            w.writerow([repr(float(v)) for v in (r.axis_value, r.estimate.eta.value, u, 2.0 * u, r.eta_true, r.e_n)])
        return buf.getvalue()

    def to_dict(self):
        rows = []
        for r in self.rows:
            u = r.estimate.eta.u_std
            rows.append({
                "axis_value": r.axis_value,
                "eta": r.estimate.eta.value,
                "u_std": u,
                "expanded_u_k2": 2.0 * u,
                "eta_true": r.eta_true,
                "e_n": r.e_n,
                "budget": dict(r.estimate.budget),
                "x_ratio": r.estimate.x_ratio.value,
                "p_alpha_w": r.estimate.p_alpha_w.value,
            })
        return {"axis": self.axis, "rows": rows, "summary": dict(self.summary)}

    def to_json(self) -> str:
        return dumps(self.to_dict())


def _weighted_slope(x, y, sigma):
    """Weighted least-squares slope and its standard uncertainty."""
    w = 1.0 / np.asarray(sigma) ** 2
    xm = np.sum(w * x) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    if sxx == 0:
        return math.nan, math.nan
    slope = np.sum(w * (x - xm) * y) / sxx
    return float(slope), float(math.sqrt(1.0 / sxx))


def summarize(axis, rows) -> dict:
    etas = np.array([r.estimate.eta.value for r in rows])
    us = np.array([max(r.estimate.eta.u_std, 1e-300) for r in rows])
    x = np.array([r.axis_value for r in rows])
    if axis == "attenuation":
        slope, slope_u = _weighted_slope(np.log(x), np.log(etas), us / etas)
        fit = "loglog"
    else:
        slope, slope_u = _weighted_slope(x, etas, us)
        fit = "linear"
    pairwise = [compare_estimates(a.estimate, b.estimate).e_n for a, b in itertools.combinations(rows, 2)]
    return {
        "mean_eta": float(etas.mean()),
        "spread": float(etas.max() - etas.min()),
        "mean_expanded_u": float(np.mean([r.estimate.expanded_u for r in rows])),
        "fit": fit,
        "slope": slope,
        "slope_u": slope_u,
        "max_e_n": float(max(r.e_n for r in rows)),
        "max_pairwise_e_n": float(max(pairwise)),
        "fraction_agree": float(np.mean([r.agree for r in rows])),
    }


def run_sweep(spec: SweepSpec) -> SweepReport:
    """Run the protocol at every sweep point and compare with the ground truth."""
    rows = []
    for j, value in enumerate(spec.points):
        sc = spec.base.with_axis_value(spec.axis, value)
        datasets = run_protocol(sc, point=j)
        est = analyze(datasets, sc.analysis, calibrate_enbw(sc, point=j))
        e_n = compare_estimates(est, (sc.eta_true, 0.0)).e_n
        rows.append(SweepRow(value, est, sc.eta_true, e_n))
    return SweepReport(spec.axis, tuple(rows), summarize(spec.axis, rows))
