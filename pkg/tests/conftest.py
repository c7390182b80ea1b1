from importlib import resources

import pytest

from endoteleop.config import SimConfig


@pytest.fixture
def sim_config():
    return SimConfig()


@pytest.fixture
def scene_cfg():
    import endoteleop

    return endoteleop.default_scene_cfg()


def golden_trace_path(name: str):
    return resources.files("endoteleop").joinpath(f"traces/{name}.trace")


@pytest.fixture
def golden_three_limb(tmp_path):
    src = golden_trace_path("golden_three_limb")
    p = tmp_path / "golden_three_limb.trace"
    p.write_text(src.read_text())
    return p


@pytest.fixture
def golden_clutch(tmp_path):
    src = golden_trace_path("golden_clutch")
    p = tmp_path / "golden_clutch.trace"
    p.write_text(src.read_text())
    return p
