import pytest

from worldprobe.agent import AgentConfig
from worldprobe.env import MapKind, RoomConfig
from worldprobe.utils.logging import init


@pytest.fixture(autouse=True)
def logging_setup():
    init(verbose=True)
    yield


def tiny_agent(**overrides) -> AgentConfig:
    params = dict(embed_dim=8, conv_channels=[4, 4, 4, 4, 2], hidden_dim=16,
                  lstm=True, lstm_size=12, crop_size=5, n_actions=4)
    params.update(overrides)
    return AgentConfig(**params)


@pytest.fixture
def agent_config():
    return tiny_agent()


@pytest.fixture
def room_config():
    return RoomConfig(kind=MapKind.RANDOM, crop_size=5)
