import math

import numpy as np
import pytest

from hetcal.analysis import spectral_ratio
from hetcal.dataset import dumps
from hetcal.esa import EsaConfig
from hetcal.exceptions import ConfigError
from hetcal.protocol import (
    CSV_COLUMNS,
    Scenario,
    SweepSpec,
    analyze,
    calibrate_enbw,
    fields_from_power,
    run_protocol,
    run_sweep,
    validate_scenario,
)
from hetcal.receiver import FieldParams


def test_datasets_satisfy_invariants(noisy_datasets):
    for ds in noisy_datasets:
        assert ds.trace_shot.freq_hz is ds.freq_hz or np.array_equal(ds.trace_shot.freq_hz, ds.freq_hz)
        assert ds.monitor_samples.size >= 1
        assert ds.ground_truth.eta_true == pytest.approx(0.345)


def test_noise_free_round_trip():
    r = validate_scenario(Scenario(deterministic=True))
    assert abs(r["rel_error"]) < 1e-3
    assert r["agree"]


def test_same_seed_same_bytes():
    a = [dumps(d.to_dict()) for d in run_protocol(Scenario(seed=5, n_repeats=3))]
    b = [dumps(d.to_dict()) for d in run_protocol(Scenario(seed=5, n_repeats=3))]
    c = [dumps(d.to_dict()) for d in run_protocol(Scenario(seed=6, n_repeats=3))]
    assert a == b and a != c


def test_repeats_use_distinct_seeds(noisy_datasets):
    seeds = [d.metadata.seed for d in noisy_datasets]
    assert len(set(seeds)) == len(seeds)
    assert len({d.trace_shot.values_dbmv.tobytes() for d in noisy_datasets}) == len(noisy_datasets)


def test_timestamps_are_reproducible(noisy_datasets):
    stamps = [d.metadata.timestamp for d in noisy_datasets]
    assert stamps[0] == "2026-01-01T00:00:00+00:00"
    assert stamps == sorted(stamps)


def test_electronic_trace_independent_of_lo():
    base = Scenario(seed=3, n_repeats=1)
    more_lo = Scenario(seed=3, n_repeats=1, fields=fields_from_power(10e-9, p_lo_w=5e-3))
    a, b = run_protocol(base)[0], run_protocol(more_lo)[0]
    assert a.trace_electronic == b.trace_electronic
    assert a.trace_shot != b.trace_shot


def test_if_outside_span_names_both_settings():
    with pytest.raises(ConfigError, match=r"fields\.if_hz.*esa\.center_hz"):
        Scenario(fields=FieldParams(1e10, 1e16, if_hz=50e6))


def test_scenario_invariants():
    with pytest.raises(ConfigError):
        Scenario(n_repeats=0)
    with pytest.raises(ConfigError):
        Scenario(attenuation_l=0.0)
    with pytest.raises(ConfigError):
        Scenario(start_time="yesterday")


def test_monitor_reads_before_attenuation():
    sc = Scenario(deterministic=True, n_repeats=1, attenuation_l=0.02)
    ds = run_protocol(sc)[0]
    v = ds.monitor_samples[0] - ds.monitor_dark_mean
    assert v * ds.attenuation_l / ds.responsivity * 1e-6 == pytest.approx(sc.p_alpha_w, rel=1e-12)


def test_sweep_rows_and_csv():
    rep = run_sweep(SweepSpec("attenuation", (1.0, 0.1, 0.01), Scenario(deterministic=True, n_repeats=1)))
    etas = [r.estimate.eta.value for r in rep.rows]
    assert etas[1] / etas[0] == pytest.approx(0.1, rel=1e-3)
    assert etas[2] / etas[0] == pytest.approx(0.01, rel=1e-3)
    assert rep.summary["slope"] == pytest.approx(1.0, abs=1e-3)
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4
    row = rep.to_dict()["rows"][0]
    assert set(CSV_COLUMNS) <= set(row) and "budget" in row


def test_power_sweep_noise_free_is_flat():
    pts = (4.9e-9, 10e-9, 18.6e-9)
    rep = run_sweep(SweepSpec("signal_power", pts, Scenario(deterministic=True, n_repeats=1)))
    for r in rep.rows:
        assert r.estimate.eta.value == pytest.approx(r.eta_true, rel=1e-3)


def test_sweep_spec_invariants():
    with pytest.raises(ConfigError):
        SweepSpec("attenuation", (1.0,))
    with pytest.raises(ConfigError):
        SweepSpec("attenuation", (1.0, -0.1))
    with pytest.raises(ConfigError):
        SweepSpec("temperature", (1.0, 2.0))
    with pytest.raises(ConfigError):
        SweepSpec("attenuation", (1.0, 2.0))


def test_lo_invariance_noise_free():
    a = validate_scenario(Scenario(deterministic=True, n_repeats=1))
    b = validate_scenario(Scenario(deterministic=True, n_repeats=1, fields=fields_from_power(10e-9, p_lo_w=10e-3)))
    assert a["eta"] == pytest.approx(b["eta"], rel=1e-3)


def test_signal_power_invariance_and_linear_ratio():
    etas, xs = [], []
    for p in (1e-9, 1e-8, 1e-7, 1e-6):
        sc = Scenario(deterministic=True, n_repeats=1, fields=fields_from_power(p, p_lo_w=1e-2))
        ds = run_protocol(sc)
        xs.append(spectral_ratio(ds[0]).x / p)
        etas.append(analyze(ds, sc.analysis, calibrate_enbw(sc)).eta.value)
    assert np.ptp(etas) / np.mean(etas) < 1e-3
    assert np.ptp(xs) / np.mean(xs) < 1e-9


def test_type_a_uncertainty_matches_observed_scatter():
    # 50 repeats: the spread of single-acquisition estimates should match the
    # Type-A u(X) reported for one acquisition within a factor 1.5
    sc = Scenario(seed=11, n_repeats=50)
    datasets = run_protocol(sc)
    enbw = calibrate_enbw(sc)
    fitted = analyze(datasets, sc.analysis, enbw)
    rel_x_single = fitted.x_ratio.rel * math.sqrt(len(datasets))
    etas = np.array([analyze([d], sc.analysis, enbw).eta.value for d in datasets])
    observed = etas.std(ddof=1) / etas.mean()
    assert 1 / 1.5 <= observed / rel_x_single <= 1.5


def test_if_axis_moves_the_analyzer():
    sc = Scenario().with_axis_value("if_frequency", 80e6)
    assert sc.fields.if_hz == 80e6 and sc.esa.center_hz == 80e6
    assert isinstance(sc.esa, EsaConfig)
