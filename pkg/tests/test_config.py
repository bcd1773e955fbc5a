import copy
import json
from pathlib import Path

import pytest

from crosskerr.config import ConfigError, build_config, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def raw():
    return json.loads((CONFIGS / "zero_flux.json").read_text())


@pytest.mark.parametrize("name", ["zero_flux.json", "flux5.json", "flux_sweep.json"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.circuit is not None and cfg.system is not None


def _err(raw) -> ConfigError:
    with pytest.raises(ConfigError) as exc:
        build_config(raw)
    return exc.value


def test_unknown_section_and_field(raw):
    r = copy.deepcopy(raw)
    r["plots"] = {}
    assert _err(r).path == "plots"
    r = copy.deepcopy(raw)
    r["circuit"]["E_K"] = 1.0
    assert _err(r).path == "circuit.E_K"


def test_type_errors_name_the_field(raw):
    r = copy.deepcopy(raw)
    r["system"]["kappa_c"] = "fast"
    assert _err(r).path == "system.kappa_c"
    r = copy.deepcopy(raw)
    r["readout"]["n_records"] = 10.5
    assert _err(r).path == "readout.n_records"
    r = copy.deepcopy(raw)
    r["readout"]["herald"] = 1
    assert _err(r).path == "readout.herald"
    r = copy.deepcopy(raw)
    r["sweep"]["dims"] = [6, 8]
    assert _err(r).path == "sweep.dims"


def test_required_fields(raw):
    r = copy.deepcopy(raw)
    del r["system"]["kappa_a"]
    assert _err(r).path == "system.kappa_a"
    r = copy.deepcopy(raw)
    del r["circuit"]["E_J"]
    assert _err(r).path == "circuit.E_J"
    r = copy.deepcopy(raw)
    del r["circuit"]
    del r["system"]["g_zz"]
    assert _err(r).path == "system.g_zz"


def test_ranges(raw):
    r = copy.deepcopy(raw)
    r["readout"]["thermal_pop"] = 1.2
    assert _err(r).path == "readout.thermal_pop"
    r = copy.deepcopy(raw)
    r["readout"]["seed"] = -1
    assert _err(r).path == "readout.seed"
    r = copy.deepcopy(raw)
    r["imperfections"]["d_J"] = 1.5
    assert _err(r).path == "imperfections"


def test_missing_la_entry_names_index(raw):
    r = copy.deepcopy(raw)
    r["circuit"]["L_a_of_n"] = {"0": 5.32, "1": 5.35}
    r["circuit"]["flux"] = 3
    e = _err(r)
    assert e.path == "circuit.flux" and "flux index 3" in str(e)
    r["circuit"]["flux"] = 0
    r["sweep"]["flux_list"] = [0, 1, 2]
    e = _err(r)
    assert e.path == "sweep.flux_list[2]" and "flux index 2" in str(e)


def test_explicit_la_table(raw):
    r = copy.deepcopy(raw)
    r["circuit"]["L_a_of_n"] = {"0": 5.32, "5": 6.1875}
    cfg = build_config(r)
    assert cfg.circuit.L_a_of_n == {0: 5.32, 5: 6.1875}
    r["circuit"]["L_a_of_n"] = {"zero": 5.32}
    assert _err(r).path == "circuit.L_a_of_n.zero"


def test_system_derived_from_circuit():
    cfg = load_config(CONFIGS / "flux_sweep.json")
    assert cfg.system.g_zz == pytest.approx(0.0346, abs=5e-4)
    assert cfg.system.omega_c == 7.169 and cfg.system.kappa_a == 6.2
    assert cfg.kappa_a_at(5) == 11.2 and cfg.kappa_a_at(3) == 6.2
    assert cfg.sweep["measured_T1"] == {0.0: 3.3, 9.0: 0.9}


def test_defaults_and_grid(raw):
    r = copy.deepcopy(raw)
    del r["readout"]
    del r["sweep"]
    cfg = build_config(r)
    assert cfg.run["seed"] is None and cfg.run["n_records"] == 1000
    g = cfg.frequency_grid()
    assert g[0] == 6.85 and g[-1] == 8.05 and g.size == 2401


def test_config_hash(raw):
    a = build_config(raw).config_hash
    assert a == build_config(copy.deepcopy(raw)).config_hash
    r = copy.deepcopy(raw)
    r["readout"]["seed"] = 2
    assert build_config(r).config_hash != a


def test_bad_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.path == "<file>"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
