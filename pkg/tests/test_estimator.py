import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hetcal.analysis import spectral_ratio
from hetcal.dataset import persist_dataset
from hetcal.esa import EsaConfig, synthesize_tone_cal_trace
from hetcal.estimator import EnbwEstimator, HeterodyneEfficiencyEstimator
from hetcal.exceptions import ConfigError
from hetcal.protocol import calibrate_enbw
from hetcal.validation import check_datasets, check_traces


def test_get_params_and_clone():
    est = HeterodyneEfficiencyEstimator(enbw=1.12e6, k=3.0)
    params = est.get_params()
    assert params["enbw"] == 1.12e6 and params["k"] == 3.0
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(k=2.5)
    assert est.k == 2.5


def test_fit_recovers_truth(det_scenario, det_datasets):
    est = HeterodyneEfficiencyEstimator(enbw=calibrate_enbw(det_scenario)).fit(det_datasets)
    assert est.eta_ == pytest.approx(det_scenario.eta_true, rel=1e-3)
    assert est.expanded_u_ == pytest.approx(2 * est.u_std_)
    assert est.n_datasets_ == len(det_datasets)
    assert set(est.budget_) == {"rel_p_alpha", "rel_enbw", "rel_x", "rel_type_b"}
    assert est.predict(det_datasets) == pytest.approx(np.full(len(det_datasets), est.eta_), rel=1e-12)


def test_transform_is_per_dataset_ratio(noisy_datasets):
    est = HeterodyneEfficiencyEstimator(enbw=1.0645e6)
    xs = est.transform(noisy_datasets)
    assert xs == pytest.approx([spectral_ratio(d).x for d in noisy_datasets])
    est.fit(noisy_datasets)
    assert est.x_ratio_.value == pytest.approx(xs.mean())


def test_predict_before_fit_raises(noisy_datasets):
    with pytest.raises(NotFittedError):
        HeterodyneEfficiencyEstimator(enbw=1e6).predict(noisy_datasets)


def test_enbw_is_required(noisy_datasets):
    with pytest.raises(ConfigError, match="ENBW"):
        HeterodyneEfficiencyEstimator().fit(noisy_datasets)


def test_accepts_fitted_enbw_estimator(det_scenario, det_datasets):
    cfg = det_scenario.esa
    tone = synthesize_tone_cal_trace(cfg, cfg.center_hz, 1.0, deterministic=True)
    enbw = EnbwEstimator(rbw_hz=cfg.rbw_hz).fit(tone)
    est = HeterodyneEfficiencyEstimator(enbw=enbw).fit(det_datasets)
    assert est.eta_ == pytest.approx(det_scenario.eta_true, rel=1e-3)
    with pytest.raises(NotFittedError):
        HeterodyneEfficiencyEstimator(enbw=EnbwEstimator(rbw_hz=1e6)).fit(det_datasets)


def test_enbw_estimator_fit_transform():
    cfg = EsaConfig()
    traces = [synthesize_tone_cal_trace(cfg, 20e6, 1.0, s, floor_power=1e-9) for s in range(4)]
    enbw = EnbwEstimator(rbw_hz=1e6).fit(traces)
    widths = enbw.transform(traces)
    assert enbw.enbw_hz_ == pytest.approx(widths.mean())
    assert enbw.n_traces_ == 4 and enbw.ratio_ == pytest.approx(1.0645, abs=2e-3)
    with pytest.raises(ConfigError):
        EnbwEstimator().fit(traces)


def test_inputs_may_be_paths_or_dicts(tmp_path, noisy_datasets):
    paths = []
    for i, ds in enumerate(noisy_datasets[:2]):
        persist_dataset(ds, tmp_path / f"d{i}.json")
        paths.append(str(tmp_path / f"d{i}.json"))
    assert check_datasets(paths) == noisy_datasets[:2]
    assert check_datasets(noisy_datasets[0].to_dict()) == [noisy_datasets[0]]
    with pytest.raises(TypeError):
        check_datasets(42)
    with pytest.raises(ConfigError):
        check_datasets([])


def test_pooling_rejects_mixed_settings(noisy_datasets):
    from hetcal.protocol import Scenario, run_protocol

    other = run_protocol(Scenario(esa=EsaConfig(rbw_hz=0.5e6), n_repeats=1))[0]
    with pytest.raises(ConfigError, match="analyzer"):
        check_datasets([noisy_datasets[0], other])


def test_check_traces():
    cfg = EsaConfig()
    t = synthesize_tone_cal_trace(cfg, 20e6, 1.0, deterministic=True)
    assert check_traces(t) == [t]
    with pytest.raises(ConfigError):
        check_traces([])
