import pytest

from wsqkd.qkdrate import DetectorParams, SourceParams, SystemParams
from wsqkd.scenario import Scenario, wuhu_scenario


@pytest.fixture(scope="session")
def wuhu() -> Scenario:
    return wuhu_scenario()


@pytest.fixture()
def source() -> SourceParams:
    return SourceParams()


@pytest.fixture()
def detector() -> DetectorParams:
    return DetectorParams()


@pytest.fixture()
def system() -> SystemParams:
    return SystemParams(e_detector=0.014)
