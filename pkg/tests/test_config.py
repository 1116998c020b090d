import json

import pytest

from hetcal.config import CliConfig, default_config, load_config, parse_config
from hetcal.constants import photon_energy
from hetcal.exceptions import ConfigError
from hetcal.protocol import Scenario


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc), encoding="utf-8")
    return p


def test_minimal_document_fills_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, {"version": 1}))
    sc = cfg.scenario
    assert sc.analysis.k == 2
    assert sc.esa.n_avg == 100
    assert sc.esa.filter_family == "gaussian"
    assert sc.esa.center_hz == sc.fields.if_hz
    assert sc.n_repeats == 10 and sc.seed == 0 and not sc.deterministic
    assert cfg.output_dir == "." and cfg.verbosity == 0 and cfg.sweep_axis is None
    assert sc == Scenario()


def test_default_config_equals_minimal_document():
    assert default_config() == parse_config({"version": 1})


def test_imbalance_violation_names_invariant(tmp_path):
    with pytest.raises(ConfigError, match=r"receiver.*4\*delta_tau\*\*2 <= 1"):
        load_config(_write(tmp_path, {"version": 1, "receiver": {"delta_tau": 0.6}}))


def test_if_outside_span_names_both_fields():
    with pytest.raises(ConfigError, match=r"fields\.if_hz.*esa\.center_hz"):
        parse_config({"version": 1, "fields": {"if_hz": 50e6}, "esa": {"center_hz": 20e6}})


def test_esa_follows_if_when_center_omitted():
    cfg = parse_config({"version": 1, "fields": {"if_hz": 80e6}})
    assert cfg.scenario.esa.center_hz == 80e6


def test_syntax_error_reports_line_and_column(tmp_path):
    p = _write(tmp_path, '{\n  "version": 1,\n  "seed": ,\n}')
    with pytest.raises(ConfigError, match=r"line 3, column 11"):
        load_config(p)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


@pytest.mark.parametrize(
    "doc, match",
    [
        ({}, "version"),
        ({"version": 2}, "version"),
        ([1], "JSON object"),
        ({"version": 1, "colour": "red"}, "colour"),
        ({"version": 1, "receiver": {"eta3": 0.5}}, r"receiver: unknown key\(s\) eta3"),
        ({"version": 1, "esa": {"n_avg": 0}}, "esa"),
        ({"version": 1, "esa": []}, "esa: expected an object"),
        ({"version": 1, "fields": {"power": 1}}, "fields: unknown"),
        ({"version": 1, "n_repeats": 0}, "scenario"),
        ({"version": 1, "sweep": {"axis": "temperature", "points": [1, 2]}}, "sweep"),
        ({"version": 1, "sweep": {"axis": "attenuation", "step": 2}}, "sweep: unknown"),
        ({"version": 1, "verbosity": -1}, "verbosity"),
        ({"version": 1, "output_dir": 3}, "output_dir"),
    ],
)
def test_rejections_name_the_field(doc, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(doc)


def test_powers_and_fluxes_are_equivalent():
    e = photon_energy(1542e-9)
    a = parse_config({"version": 1, "fields": {"signal_power_w": 5e-9, "lo_power_w": 2e-3}})
    b = parse_config({"version": 1, "fields": {"photon_flux_signal": 5e-9 / e, "photon_flux_lo": 2e-3 / e}})
    assert a.scenario.fields.photon_flux_signal == pytest.approx(b.scenario.fields.photon_flux_signal, rel=1e-15)
    assert a.scenario.p_alpha_w == pytest.approx(5e-9, rel=1e-12)
    with pytest.raises(ConfigError, match="not both"):
        parse_config({"version": 1, "fields": {"signal_power_w": 1e-9, "photon_flux_signal": 1e9}})


def test_sweep_section():
    cfg = parse_config({"version": 1, "sweep": {"axis": "attenuation", "points": [1, 0.1, 0.01]}})
    spec = cfg.sweep_spec()
    assert spec.axis == "attenuation" and tuple(spec.points) == (1, 0.1, 0.01)
    with pytest.raises(ConfigError, match="sweep.axis"):
        default_config().sweep_spec()


def test_flag_overrides():
    cfg = default_config().with_overrides(seed=4, repeats=3, deterministic=True, k=3.0, output_dir="out")
    assert isinstance(cfg, CliConfig)
    sc = cfg.scenario
    assert (sc.seed, sc.n_repeats, sc.deterministic, sc.analysis.k) == (4, 3, True, 3.0)
    assert cfg.output_dir == "out"
    with pytest.raises(ConfigError):
        default_config().with_overrides(repeats=0)
