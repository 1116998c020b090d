import json

import numpy as np
import pytest

from hetcal.dataset import Dataset, dumps, load_dataset, persist_dataset, read_json, write_atomic
from hetcal.esa import EsaConfig
from hetcal.exceptions import SchemaError
from hetcal.protocol import Scenario, run_protocol

DATASET_KEYS = {
    "esa", "freq_hz", "trace_electronic_dbmv", "trace_shot_dbmv", "trace_quadrature_dbmv",
    "monitor", "metadata", "ground_truth",
}


def _arrays(ds):
    return [ds.freq_hz, ds.trace_electronic.values_dbmv, ds.trace_shot.values_dbmv,
            ds.trace_quadrature.values_dbmv, ds.monitor_samples]


def _max_rel_drift(a, b):
    worst = 0.0
    for x, y in zip(_arrays(a), _arrays(b)):
        scale = np.maximum(np.abs(x), 1e-300)
        worst = max(worst, float(np.max(np.abs(x - y) / scale)))
    return worst


def test_round_trip_is_exact(tmp_path, noisy_datasets):
    ds = noisy_datasets[0]
    path = tmp_path / "ds.json"
    persist_dataset(ds, path)
    back = load_dataset(path)
    assert _max_rel_drift(ds, back) <= 1e-14
    assert back.esa == ds.esa
    assert back.metadata == ds.metadata
    assert back.ground_truth == ds.ground_truth
    assert back.monitor_dark_mean == ds.monitor_dark_mean


def test_supergaussian_order_survives_round_trip(tmp_path):
    sc = Scenario(esa=EsaConfig(filter_family="supergaussian"), n_repeats=1)
    ds = run_protocol(sc)[0]
    persist_dataset(ds, tmp_path / "sg.json")
    assert load_dataset(tmp_path / "sg.json").esa == ds.esa


def test_document_keys(noisy_datasets):
    doc = noisy_datasets[0].to_dict()
    assert DATASET_KEYS <= set(doc)
    assert set(doc) - DATASET_KEYS == {"schema_version"}
    assert set(doc["esa"]) == {"center_hz", "span_hz", "rbw_hz", "n_bins", "n_avg", "filter_family", "reference_power"}
    assert set(doc["monitor"]) == {"samples_v", "dark_mean_v", "responsivity_v_per_uw", "attenuation_l"}
    assert set(doc["metadata"]) == {"wavelength_m", "if_hz", "seed", "timestamp_iso8601"}
    assert set(doc["ground_truth"]) == {"eta_true", "p_alpha_w"}


def test_numbers_keep_17_significant_digits(noisy_datasets):
    text = dumps(noisy_datasets[0].to_dict())
    value = noisy_datasets[0].trace_shot.values_dbmv[3]
    assert repr(float(value)) in text


def test_missing_ground_truth_loads(noisy_datasets):
    doc = noisy_datasets[0].to_dict()
    del doc["ground_truth"]
    assert Dataset.from_dict(doc).ground_truth is None


def test_truncated_file_is_schema_error(tmp_path, noisy_datasets):
    path = tmp_path / "ds.json"
    persist_dataset(noisy_datasets[0], path)
    text = path.read_text(encoding="utf-8")
    path.write_text(text[: len(text) // 2], encoding="utf-8")
    with pytest.raises(SchemaError, match="line"):
        load_dataset(path)


@pytest.mark.parametrize(
    "mutate, match",
    [
        (lambda d: d.update(schema_version=2), "schema_version"),
        (lambda d: d.pop("trace_shot_dbmv"), "trace_shot_dbmv"),
        (lambda d: d["freq_hz"].reverse(), "ascending"),
        (lambda d: d["trace_quadrature_dbmv"].pop(), "length"),
        (lambda d: d["monitor"].update(samples_v=[]), "monitor sample"),
    ],
)
def test_malformed_documents(noisy_datasets, mutate, match):
    doc = json.loads(dumps(noisy_datasets[0].to_dict()))
    mutate(doc)
    with pytest.raises(SchemaError, match=match):
        Dataset.from_dict(doc)


def test_nan_is_refused():
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_write_atomic_leaves_no_temporaries(tmp_path):
    target = tmp_path / "sub" / "out.json"
    write_atomic(target, "one\n")
    write_atomic(target, "two\n")
    assert target.read_text(encoding="utf-8") == "two\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]


def test_read_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "a": 1,\n  oops\n}', encoding="utf-8")
    with pytest.raises(SchemaError, match="line 3, column 3"):
        read_json(p)


def test_datasets_compare_by_value(noisy_datasets):
    a = noisy_datasets[0]
    b = Dataset.from_dict(a.to_dict())
    assert a == b
    assert a != noisy_datasets[1]
