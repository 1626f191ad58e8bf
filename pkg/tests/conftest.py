"""
Pytest configuration and shared fixtures
"""
import pytest
import sys
import os
import json
from typing import Dict, List

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from faker import Faker

from data_io import DATA_DIR, DEFAULT_CONFIG, Inputs, load_config, load_inputs
from efficiency_curves import EfficiencyCurve
from pdn_core import Architecture, DomainLoad, GroupMember, PdnTopology, VrGroup, VrKind, VrStage
from topologies import all_presets


@pytest.fixture(scope="session")
def default_config():
    """The bundled run configuration"""
    return load_config(DEFAULT_CONFIG)


@pytest.fixture(scope="session")
def inputs(default_config) -> Inputs:
    """Every bundled data file, loaded once per session"""
    return load_inputs(default_config)


@pytest.fixture(scope="session")
def curves(inputs):
    return inputs.curves


@pytest.fixture(scope="session")
def loads_model(inputs):
    return inputs.loads


@pytest.fixture(scope="session")
def state_model(inputs):
    return inputs.power_states


@pytest.fixture(scope="session")
def presets() -> Dict[Architecture, PdnTopology]:
    """The five architectures keyed by name"""
    return {t.name: t for t in all_presets()}


@pytest.fixture
def mbvr(presets):
    return presets[Architecture.MBVR]


@pytest.fixture
def ivr(presets):
    return presets[Architecture.IVR]


@pytest.fixture
def ldo(presets):
    return presets[Architecture.LDO]


@pytest.fixture
def i_mbvr(presets):
    return presets[Architecture.I_MBVR]


@pytest.fixture
def flexwatts(presets):
    return presets[Architecture.FLEXWATTS]


@pytest.fixture
def flat_curves():
    """Curve pack where every regulator converts at the same efficiency"""
    def build(eta: float = 1.0, v_in: float = 7.2, ivr_v_in: float = 1.8) -> Dict[str, EfficiencyCurve]:
        return {
            "offchip": EfficiencyCurve.uniform("offchip", eta, v_in),
            "ivr": EfficiencyCurve.uniform("ivr", eta, ivr_v_in),
        }
    return build


@pytest.fixture
def single_domain_topology():
    """One 'Core0' domain on a single off-chip rail"""
    def build(name: Architecture = Architecture.MBVR, v_tob: float = 0.0, r_ll: float = 0.0,
              r_pg: float = 0.0) -> PdnTopology:
        member = GroupMember("Core0")
        if r_pg:
            member = GroupMember("Core0", VrStage("pg_core0", VrKind.POWER_GATE, r_pg=r_pg))
        rail = VrStage("vcc", VrKind.OFF_CHIP, curve="offchip", v_tob=v_tob, r_ll=r_ll)
        return PdnTopology(name, (VrGroup("CPU", rail, (member,)),), declared_domains=("Core0",))
    return build


@pytest.fixture
def uniform_loads():
    """Six domain loads at one voltage"""
    def build(p: float = 1.0, v: float = 1.0, ar: float = 1.0,
              domains=("Core0", "Core1", "LLC", "GFX", "SA", "IO")) -> List[DomainLoad]:
        return [DomainLoad(d, p, v, ar=ar) for d in domains]
    return build


@pytest.fixture
def fake():
    """Seeded faker so randomized instances are the same on every run"""
    Faker.seed(20240601)
    return Faker()


@pytest.fixture
def config_file(tmp_path, default_config):
    """Write a run configuration into tmp_path, starting from the bundled data"""
    def write(**overrides) -> str:
        document = {
            "topologies": list(default_config.topologies),
            "curve_pack": dict(default_config.curve_pack),
            "loads_table": default_config.loads_table,
            "power_states": default_config.power_states,
            "pf_curves": default_config.pf_curves,
            "workloads": default_config.workloads,
            "cost_table": default_config.cost_table,
            "trace": default_config.trace,
            "max_workers": 1,
        }
        document.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(document))
        return str(path)
    return write


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def write_csv(tmp_path):
    """Write rows (first row is the header) to a CSV in tmp_path"""
    def write(name: str, lines: List[str]) -> str:
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return str(path)
    return write
