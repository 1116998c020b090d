"""Input validation helpers shared by the estimators and the CLI."""
from __future__ import annotations

import os
from collections.abc import Iterable, Mapping

from .dataset import SCHEMA_VERSION, Dataset, load_dataset, read_json
from .esa import Trace
from .exceptions import ConfigError, SchemaError


def check_dataset(obj) -> Dataset:
    """Coerce a Dataset, its JSON dict or a path to it into a :class:`Dataset`."""
    if isinstance(obj, Dataset):
        return obj
    if isinstance(obj, Mapping):
        return Dataset.from_dict(dict(obj))
    if isinstance(obj, (str, os.PathLike)):
        return load_dataset(obj)
    raise TypeError(f"expected a Dataset, dict or path, got {type(obj).__name__}")


def check_datasets(X, *, min_count=1) -> list[Dataset]:
    """Coerce one or many acquisitions into a non-empty list of datasets.

    All entries must share the analyzer configuration and IF, because the
    repeats are pooled into one estimate.
    """
    if isinstance(X, (Dataset, Mapping, str, os.PathLike)):
        X = [X]
    if not isinstance(X, Iterable):
        raise TypeError(f"expected datasets, got {type(X).__name__}")
    out = [check_dataset(x) for x in X]
    if len(out) < min_count:
        raise ConfigError(f"need at least {min_count} dataset(s), got {len(out)}")
    first = out[0]
    for ds in out[1:]:
        if ds.esa != first.esa or ds.metadata.if_hz != first.metadata.if_hz:
            raise ConfigError("datasets to be pooled differ in analyzer settings or IF")
        if ds.metadata.wavelength_m != first.metadata.wavelength_m:
            raise ConfigError("datasets to be pooled differ in wavelength")
    return out


def trace_from_dict(doc) -> Trace:
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    if doc.get("kind", "tone_trace") != "tone_trace":
        raise SchemaError(f"expected a tone_trace document, got kind={doc['kind']!r}")
    try:
        return Trace(doc["freq_hz"], doc["values_dbmv"])
    except KeyError as exc:
        raise SchemaError(f"tone trace document is missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid tone trace document: {exc}") from None


def check_trace(obj) -> Trace:
    """Coerce a Trace, a tone-trace dict or a path to one into a :class:`Trace`."""
    if isinstance(obj, Trace):
        return obj
    if isinstance(obj, (str, os.PathLike)):
        obj = read_json(obj)
    if isinstance(obj, Mapping):
        return trace_from_dict(obj)
    raise TypeError(f"expected a Trace, dict or path, got {type(obj).__name__}")


def check_traces(X) -> list[Trace]:
    if isinstance(X, (Trace, Mapping, str, os.PathLike)):
        X = [X]
    out = [check_trace(x) for x in X]
    if not out:
        raise ConfigError("need at least one trace")
    return out
