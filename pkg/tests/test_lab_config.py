import json
from pathlib import Path

import pytest

from lab_config import (
    CHECK_NAMES,
    DEFAULT_TOLERANCES,
    EnvSettings,
    ExperimentConfig,
    config_from_dict,
    load_config,
    parse_angular,
    parse_complex,
    parse_radial,
    validate_files,
)
from lab_errors import ConfigError
from symbol_model import ConstantFactor, SampledContinuous, StepFunction, TrigPolynomial

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _base(**overrides):
    data = {"schema_version": 1, "kind": "theorem1", "N": 256,
            "symbol": {"type": "trig", "coefficients": [0.5, 2.0, 0.5]}}
    data.update(overrides)
    return data


def test_bundled_configs_are_valid():
    paths = sorted(CONFIGS.glob("*.json")) + sorted((CONFIGS / "acceptance").glob("*.json"))
    assert paths
    report = validate_files(paths)
    assert all(problems == [] for problems in report.values()), report


def test_defaults_and_tolerance_merge():
    config = config_from_dict(_base(tolerances={"band_low": 0.8}))
    assert config.name == "theorem1"
    assert config.tolerances["band_low"] == 0.8
    assert config.tolerances["band_high"] == DEFAULT_TOLERANCES["theorem1"]["band_high"]


def test_problems_are_collected():
    with pytest.raises(ConfigError) as info:
        config_from_dict(_base(N=8, seed=-1, threads=0))
    assert len(info.value.problems) >= 3


@pytest.mark.parametrize("data, fragment", [
    ({"kind": "theorem1"}, "schema_version"),
    (_base(schema_version=2), "schema_version"),
    (_base(kind="spectral"), "kind must be one of"),
    (_base(extra=1), "unknown key"),
    (_base(N=10_000), "budget"),
    (_base(window=[8, 64]), "exceeds N/8"),
    (_base(window=[32, 16]), "window must be"),
    (_base(tolerances={"nope": 1.0}), "unknown tolerances"),
    (_base(params={"stability": 16}), "params.stability"),
    (_base(symbol={"type": "trig", "coefficients": [1.0, 2.0]}), "symbol"),
    (_base(symbol={"type": "sampled", "preset": "cos", "grid": 512}), "too coarse"),
    ({"schema_version": 1, "kind": "radial"}, "n_grid"),
    ({"schema_version": 1, "kind": "radial", "n_grid": [10], "radial": {"cutoff": 0.5}}, "cutoff"),
    ({"schema_version": 1, "kind": "banded", "N": 100, "params": {"coefficients": [1.0, 2.0]}}, "odd length"),
    ({"schema_version": 1, "kind": "banded", "N": 100, "params": {"coefficients": [1, 2, 1], "offset": 1}},
     "offset"),
    ({"schema_version": 1, "kind": "ortho", "N": 64, "params": {"L": 2}}, "params.L"),
    ({"schema_version": 1, "kind": "checks", "params": {"only": ["p9"]}}, "params.only"),
    ({"schema_version": 1, "kind": "pushnitski-compare", "gamma": 0.0, "n_grid": [10]}, "gamma > 0"),
])
def test_invalid_configs(data, fragment):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert any(fragment in p for p in info.value.problems), info.value.problems


def test_banded_sturm_budget_depends_on_bandwidth():
    tri = config_from_dict({"schema_version": 1, "kind": "banded", "N": 20_000,
                            "params": {"coefficients": [1, 2, 1]}})
    assert tri.N == 20_000
    with pytest.raises(ConfigError):
        config_from_dict({"schema_version": 1, "kind": "banded", "N": 20_000,
                          "params": {"coefficients": [1, 1, 2, 1, 1]}})


def test_parse_complex():
    assert parse_complex(2) == 2.0
    assert parse_complex([1.0, -0.5]) == complex(1.0, -0.5)
    for bad in (True, "1", [1, 2, 3]):
        with pytest.raises(ValueError):
            parse_complex(bad)


def test_parse_angular_families():
    assert isinstance(parse_angular({"type": "constant", "value": [0, 1]}), ConstantFactor)
    assert isinstance(parse_angular({"type": "trig", "coefficients": [1, 0, 1]}), TrigPolynomial)
    step = parse_angular({"type": "step_uniform", "values": [1, 0, 2]})
    assert isinstance(step, StepFunction) and step.pieces == 3
    sampled = parse_angular({"type": "sampled", "preset": "cos", "grid": 64})
    assert isinstance(sampled, SampledContinuous) and sampled.grid == 64
    with pytest.raises(ValueError):
        parse_angular({"type": "sampled", "preset": "cos", "values": [1, 2, 3, 4]})
    with pytest.raises(ValueError):
        parse_angular({"type": "constant", "value": 1, "colour": "red"})


def test_parse_radial():
    radial = parse_radial(2.0, {"profile": "constant", "profile_value": 3.0, "cutoff": 0.5})
    assert radial.gamma == 2.0
    assert radial.profile.limit == 3.0
    assert radial.g_limit == 0.0
    with pytest.raises(ValueError):
        parse_radial(1.0, {"radius": 1})


def test_pushnitski_defaults_to_power_weight():
    config = config_from_dict({"schema_version": 1, "kind": "pushnitski-compare", "n_grid": [10]})
    assert config.build_radial().kind == "power"


def test_checks_options_must_be_objects():
    with pytest.raises(ConfigError):
        config_from_dict({"schema_version": 1, "kind": "checks", "params": {"lemma44": 5}})
    config = config_from_dict({"schema_version": 1, "kind": "checks", "params": {"only": list(CHECK_NAMES[:2])}})
    assert config.params["only"] == list(CHECK_NAMES[:2])


def test_overrides_and_environment(monkeypatch):
    monkeypatch.setenv("LOGSPEC_SEED", "7")
    monkeypatch.setenv("LOGSPEC_THREADS", "3")
    monkeypatch.delenv("LOGSPEC_OUTPUT_DIR", raising=False)
    env = EnvSettings.from_env()
    config = config_from_dict(_base(seed=11))
    resolved = config.with_overrides(output_dir="out").resolved(env)
    assert resolved.seed == 11
    assert resolved.threads == 3
    assert resolved.output_dir == "out"
    assert config.with_overrides(seed=99).seed == 99


def test_environment_errors(monkeypatch):
    monkeypatch.setenv("LOGSPEC_THREADS", "zero")
    with pytest.raises(ConfigError) as info:
        EnvSettings.from_env()
    assert info.value.source == "environment"
    monkeypatch.setenv("LOGSPEC_THREADS", "0")
    with pytest.raises(ConfigError):
        EnvSettings.from_env()


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    report = validate_files([broken])
    assert "invalid JSON" in report[str(broken)][0]


def test_to_dict_round_trip(tmp_path):
    config = config_from_dict(_base(window=[8, 32]))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config.to_dict()), encoding="utf-8")
    again = load_config(path)
    assert again == config
    assert "source" not in config.to_dict()
    assert again.fit_window() == (8, 32)


def test_direct_construction_validates():
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="signed")
