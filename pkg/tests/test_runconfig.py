"""JSON run configuration: round trips, strictness and shipped presets."""

import json
from pathlib import Path

import pytest

from gelnet.exceptions import ConfigurationError
from gelnet.runconfig import RunConfig

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.json"))


def test_default_roundtrip():
    cfg = RunConfig()
    assert RunConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("path", CONFIGS, ids=[p.stem for p in CONFIGS])
def test_presets_roundtrip(path):
    cfg = RunConfig.load(path)
    again = RunConfig.from_json(cfg.to_json())
    assert again == cfg
    assert again.to_dict() == cfg.to_dict()


def test_roundtrip_through_file(tmp_path):
    cfg = RunConfig.from_dict({"seed": 7, "penalty": {"r": "inf", "q": 0.3},
                               "solver": {"solver": "admm", "admm": {"sigma": 0.5}},
                               "bench": {"trials": 3, "sweep": {"K": [5, 6]}}})
    cfg.save(tmp_path / "c.json")
    assert RunConfig.load(tmp_path / "c.json") == cfg


@pytest.mark.parametrize("bad", [
    {"sed": 1},
    {"data": {"kind": "synthetic", "synthetic": {"kapa": 0.2}}},
    {"penalty": {"lambda3": 1.0}},
    {"solver": {"pmm_ssn": {"nu0": 1.0}}},
    {"solver": {"admm": {"rho": 1.0}}},
    {"bench": {"cells": [{"lamda1": 0.2}]}},
    {"bench": {"sweep": {"label": ["a"]}}},
    {"output": {"xml": "x"}},
])
def test_unknown_keys_rejected(bad):
    with pytest.raises(ConfigurationError, match="unknown key"):
        RunConfig.from_dict(bad)


@pytest.mark.parametrize("bad", [
    {"schema_version": 2},
    {"seed": -1},
    {"data": {"kind": "hdf5"}},
    {"data": {"kind": "libsvm"}},
    {"bench": {"trials": 0}},
    {"bench": {"solvers": ["lbfgs"]}},
    {"bench": {"sweep": {"K": []}}},
    {"penalty": {"q": 2.0}},
    {"solver": {"solver": "cd"}},
])
def test_invalid_values_rejected(bad):
    with pytest.raises(ConfigurationError):
        RunConfig.from_dict(bad)


def test_invalid_json():
    with pytest.raises(ConfigurationError, match="JSON"):
        RunConfig.from_json("{not json")


def test_fixed_design_preset_expands():
    cfg = RunConfig.from_dict({"data": {"synthetic": {"beta": "fixed", "kappa": 0.2}}})
    syn = cfg.data.synthetic_config(3)
    assert syn.seed == 3 and sum(b != 0 for b in syn.beta) == 10
    with pytest.raises(ConfigurationError):
        RunConfig.from_dict({"data": {"synthetic": {"beta": "random"}}}).data.synthetic_config(0)


def test_kappa_in_parameter_presets():
    for name in ("table1", "figure2", "table2"):
        d = json.loads((Path(__file__).parent.parent / "configs" / f"{name}.json").read_text())
        assert d["data"]["synthetic"]["kappa"] == 0.3
