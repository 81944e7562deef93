import pytest

import smartbuilding as sb
from smartbuilding.gateway.orchestrator import run_scenario
from smartbuilding.topology import load_topology


@pytest.fixture(scope="session")
def default_topology():
    return load_topology(sb.bundled_config("default_building"))


@pytest.fixture(scope="session")
def reference_run(tmp_path_factory):
    """One full reference-scenario MPC run, shared by everything that only
    inspects its outputs."""
    out_dir = tmp_path_factory.mktemp("reference_run")
    report = run_scenario(
        sb.bundled_config("default_building"),
        sb.bundled_config("reference_scenario"),
        sb.bundled_config("default_controller"),
        out_dir=out_dir, mode="fast")
    return report, out_dir
