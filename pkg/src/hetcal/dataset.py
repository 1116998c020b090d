"""
One protocol acquisition and its JSON document format.

Floats are written with Python's shortest round-trip repr, which is exact
(17 significant digits at most), so ``load(persist(ds))`` loses nothing.
"""
from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .esa import EsaConfig, Trace
from .exceptions import ConfigError, SchemaError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Metadata:
    wavelength_m: float
    if_hz: float
    seed: int
    timestamp: str


@dataclass(frozen=True)
class GroundTruth:
    """Simulator truth: the efficiency the protocol should recover and the
    signal power at the monitor reference plane."""

    eta_true: float
    p_alpha_w: float


@dataclass(frozen=True, eq=False)
class Dataset:
    esa: EsaConfig
    trace_electronic: Trace
    trace_shot: Trace
    trace_quadrature: Trace
    monitor_samples: np.ndarray
    monitor_dark_mean: float
    responsivity: float  # V/uW
    attenuation_l: float
    metadata: Metadata
    ground_truth: GroundTruth | None = None

    def __post_init__(self):
        samples = np.atleast_1d(np.asarray(self.monitor_samples, dtype=float))
        object.__setattr__(self, "monitor_samples", samples)
        if samples.size < 1:
            raise ConfigError("dataset needs at least one monitor sample")
        f = self.trace_electronic.freq_hz
        for tr in (self.trace_shot, self.trace_quadrature):
            if not np.array_equal(tr.freq_hz, f):
                raise ConfigError("dataset traces do not share one frequency axis")
        if f.size != self.esa.n_bins:
            raise ConfigError("trace length does not match esa.n_bins")

    @property
    def freq_hz(self):
        return self.trace_electronic.freq_hz

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    def to_dict(self):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "esa": esa_to_dict(self.esa),
            "freq_hz": self.freq_hz.tolist(),
            "trace_electronic_dbmv": self.trace_electronic.values_dbmv.tolist(),
            "trace_shot_dbmv": self.trace_shot.values_dbmv.tolist(),
            "trace_quadrature_dbmv": self.trace_quadrature.values_dbmv.tolist(),
            "monitor": {
                "samples_v": self.monitor_samples.tolist(),
                "dark_mean_v": float(self.monitor_dark_mean),
                "responsivity_v_per_uw": float(self.responsivity),
                "attenuation_l": float(self.attenuation_l),
            },
            "metadata": {
                "wavelength_m": float(self.metadata.wavelength_m),
                "if_hz": float(self.metadata.if_hz),
                "seed": int(self.metadata.seed),
                "timestamp_iso8601": self.metadata.timestamp,
            },
        }
        if self.ground_truth is not None:
            doc["ground_truth"] = {
                "eta_true": float(self.ground_truth.eta_true),
                "p_alpha_w": float(self.ground_truth.p_alpha_w),
            }
        return doc

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise SchemaError("dataset document must be a JSON object")
        version = doc.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        try:
            esa = esa_from_dict(doc["esa"])
            freq = np.asarray(doc["freq_hz"], dtype=float)
            traces = [
                Trace(freq, np.asarray(doc[key], dtype=float))
                for key in ("trace_electronic_dbmv", "trace_shot_dbmv", "trace_quadrature_dbmv")
            ]
            mon = doc["monitor"]
            meta = doc["metadata"]
            gt = doc.get("ground_truth")
            return cls(
                esa=esa,
                trace_electronic=traces[0],
                trace_shot=traces[1],
                trace_quadrature=traces[2],
                monitor_samples=np.asarray(mon["samples_v"], dtype=float),
                monitor_dark_mean=float(mon["dark_mean_v"]),
                responsivity=float(mon["responsivity_v_per_uw"]),
                attenuation_l=float(mon["attenuation_l"]),
                metadata=Metadata(
                    wavelength_m=float(meta["wavelength_m"]),
                    if_hz=float(meta["if_hz"]),
                    seed=int(meta["seed"]),
                    timestamp=str(meta["timestamp_iso8601"]),
                ),
                ground_truth=None
                if gt is None
                else GroundTruth(float(gt["eta_true"]), float(gt["p_alpha_w"])),
            )
        except KeyError as exc:
            raise SchemaError(f"dataset document is missing key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"invalid dataset document: {exc}") from None


_SUPERGAUSS = re.compile(r"^supergaussian:(.+)$")


def esa_to_dict(esa: EsaConfig):
    family = esa.filter_family
    if family == "supergaussian":
        family = f"supergaussian:{esa.filter_order!r}"
    return {
        "center_hz": esa.center_hz,
        "span_hz": esa.span_hz,
        "rbw_hz": esa.rbw_hz,
        "n_bins": int(esa.n_bins),
        "n_avg": int(esa.n_avg),
        "filter_family": family,
        "reference_power": esa.reference_power,
    }


def esa_from_dict(d):
    """Inverse of :func:`esa_to_dict`; ``supergaussian:<order>`` carries the order."""
    family = d["filter_family"]
    order = None
    m = _SUPERGAUSS.match(family)
    if m:
        family, order = "supergaussian", float(m.group(1))
    return EsaConfig(
        center_hz=float(d["center_hz"]),
        span_hz=float(d["span_hz"]),
        rbw_hz=float(d["rbw_hz"]),
        n_bins=int(d["n_bins"]),
        n_avg=int(d["n_avg"]),
        filter_family=family,
        filter_order=order,
        reference_power=float(d["reference_power"]),
    )


def tone_trace_to_dict(trace: Trace, esa: EsaConfig, tone_hz):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "tone_trace",
        "esa": esa_to_dict(esa),
        "tone_hz": float(tone_hz),
        "freq_hz": trace.freq_hz.tolist(),
        "values_dbmv": trace.values_dbmv.tolist(),
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def persist_dataset(ds: Dataset, path):
    write_atomic(path, dumps(ds.to_dict()))


def load_dataset(path) -> Dataset:
    return Dataset.from_dict(read_json(path))
