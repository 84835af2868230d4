import pytest

from roccet_lab.harness import builtin_scenario
from roccet_lab.simulator import run


@pytest.fixture(scope="session")
def bw_halving_roccet():
    return run(builtin_scenario("bw-halving", algo="roccet", seed=1))


@pytest.fixture(scope="session")
def bw_halving_cubic():
    return run(builtin_scenario("bw-halving", algo="cubic", seed=1))


@pytest.fixture(scope="session")
def bw_halving_artifacts(tmp_path_factory, bw_halving_roccet, bw_halving_cubic):
    """bw-halving run artifacts on disk, one directory per algorithm."""
    root = tmp_path_factory.mktemp("bw_halving")
    out = {}
    for name, traces in (("roccet", bw_halving_roccet), ("cubic", bw_halving_cubic)):
        d = root / name
        d.mkdir()
        with open(d / "trace.csv", "w", encoding="utf-8") as f:
            traces.write_csv(f)
        with open(d / "events.json", "w", encoding="utf-8") as f:
            traces.write_events_json(f)
        out[name] = d
    return out
