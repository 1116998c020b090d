"""
Declarative JSON run configuration.

A config is one JSON document with ``"version": 1``. Every section is
optional; omitted keys take the defaults of the corresponding dataclass::

    {
      "version": 1,
      "receiver": {"delta_tau": 0.0, "eta_mm": 0.5},
      "fields": {"signal_power_w": 1e-8, "lo_power_w": 1e-3, "if_hz": 20e6},
      "esa": {"rbw_hz": 1e6, "filter_family": "gaussian"},
      "sweep": {"axis": "attenuation", "points": [1, 0.1, 0.01]},
      "seed": 0
    }

``esa.center_hz`` defaults to ``fields.if_hz``. The signal and LO may be
given as powers (``signal_power_w``, ``lo_power_w``) or photon fluxes
(``photon_flux_signal``, ``photon_flux_lo``), not both.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace

from .constants import photon_energy
from .esa import EsaConfig, MonitorModel
from .exceptions import ConfigError
from .protocol import AnalysisSettings, Scenario, SweepSpec
from .receiver import ChannelParams, FieldParams, ReceiverParams

CONFIG_VERSION = 1

DEFAULT_SIGNAL_POWER_W = 10e-9
DEFAULT_LO_POWER_W = 1e-3

_SCENARIO_KEYS = (
    "attenuation_l", "s_elec", "n_repeats", "seed", "deterministic",
    "n_dark", "n_monitor", "tone_cal_floor_dbc", "start_time",
)
_TOP_KEYS = {"version", "receiver", "fields", "channel", "esa", "monitor", "analysis",
             "sweep", "output_dir", "verbosity", *_SCENARIO_KEYS}
_FIELD_KEYS = {"signal_power_w", "lo_power_w", "photon_flux_signal", "photon_flux_lo",
               "wavelength", "if_hz", "max_flux_ratio"}


@dataclass(frozen=True)
class CliConfig:
    scenario: Scenario
    sweep_axis: str | None = None
    sweep_points: tuple = ()
    output_dir: str = "."
    verbosity: int = 0

    def with_overrides(self, *, seed=None, repeats=None, deterministic=False, k=None, output_dir=None):
        """Copy with command-line flags applied on top of the document."""
        sc = self.scenario
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if repeats is not None:
            changes["n_repeats"] = repeats
        if deterministic:
            changes["deterministic"] = True
        if k is not None:
            changes["analysis"] = replace(sc.analysis, k=k)
        try:
            sc = replace(sc, **changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return replace(self, scenario=sc, output_dir=self.output_dir if output_dir is None else output_dir)

    def sweep_spec(self) -> SweepSpec:
        if self.sweep_axis is None:
            raise ConfigError("sweep.axis is not set: add a 'sweep' section or pass --axis/--points")
        return SweepSpec(self.sweep_axis, self.sweep_points, self.scenario)


def _section(doc, name):
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected an object, got {type(sec).__name__}")
    return sec


def _build(cls, sec, name, **extra):
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(sec) - allowed)
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")
    try:
        return cls(**{**sec, **extra})
    except ConfigError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: invalid value ({exc})") from None


def _field_params(sec) -> FieldParams:
    unknown = sorted(set(sec) - _FIELD_KEYS)
    if unknown:
        raise ConfigError(f"fields: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(_FIELD_KEYS))}")
    sec = dict(sec)
    wavelength = sec.pop("wavelength", FieldParams.__dataclass_fields__["wavelength"].default)
    try:
        e = photon_energy(wavelength)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"fields.wavelength: invalid value ({exc})") from None
    for flux, power, default in (
        ("photon_flux_signal", "signal_power_w", DEFAULT_SIGNAL_POWER_W),
        ("photon_flux_lo", "lo_power_w", DEFAULT_LO_POWER_W),
    ):
        if flux in sec and power in sec:
            raise ConfigError(f"fields: give either {flux} or {power}, not both")
        if flux not in sec:
            p = sec.pop(power, default)
            if not isinstance(p, (int, float)):
                raise ConfigError(f"fields.{power}: expected a number, got {p!r}")
            sec[flux] = p / e
    return _build(FieldParams, sec, "fields", wavelength=wavelength)


def parse_config(doc) -> CliConfig:
    """Build and invariant-check a :class:`CliConfig` from a parsed document."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    version = doc.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"version: expected {CONFIG_VERSION}, got {version!r}")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(unknown)}")

    rx = _build(ReceiverParams, _section(doc, "receiver"), "receiver")
    fp = _field_params(_section(doc, "fields"))
    chan = _section(doc, "channel")
    channel = _build(ChannelParams, {k: tuple(v) if k == "transmissions" else v for k, v in chan.items()}, "channel")
    esa_sec = dict(_section(doc, "esa"))
    esa_sec.setdefault("center_hz", fp.if_hz)
    esa = _build(EsaConfig, esa_sec, "esa")
    monitor = _build(MonitorModel, _section(doc, "monitor"), "monitor")
    analysis = _build(AnalysisSettings, _section(doc, "analysis"), "analysis")
    top = {k: doc[k] for k in _SCENARIO_KEYS if k in doc}
    sc = _build(Scenario, top, "scenario", rx=rx, fields=fp, channel=channel, esa=esa,
                monitor=monitor, analysis=analysis)

    sweep = _section(doc, "sweep")
    bad = sorted(set(sweep) - {"axis", "points"})
    if bad:
        raise ConfigError(f"sweep: unknown key(s) {', '.join(bad)}")
    axis, points = sweep.get("axis"), tuple(sweep.get("points", ()))
    if axis is not None:
        try:
            SweepSpec(axis, points, sc)
        except ConfigError as exc:
            raise ConfigError(f"sweep: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sweep: invalid value ({exc})") from None

    output_dir = doc.get("output_dir", ".")
    verbosity = doc.get("verbosity", 0)
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir: expected a string")
    if not isinstance(verbosity, int) or verbosity < 0:
        raise ConfigError("verbosity: expected a non-negative integer")
    return CliConfig(sc, axis, points, output_dir, verbosity)


def load_config(path) -> CliConfig:
    """Read, parse and validate a JSON config file.

    Raises
    ------
    ConfigError
        On unreadable files, JSON syntax errors (with line and column) and
        invariant violations (naming the offending field).
    """
    try:
        with open(os.fspath(path), encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(doc)


def default_config() -> CliConfig:
    return parse_config({"version": CONFIG_VERSION})
