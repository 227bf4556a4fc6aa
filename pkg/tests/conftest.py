from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import FakeTransport  # noqa: E402

from webstamp.config import Settings
from webstamp.engine import Engine
from webstamp.monitor import FakeClock

START = datetime(2016, 6, 1, 12, 0, 0, tzinfo=timezone.utc)


@pytest.fixture
def make_settings(tmp_path):
    def build(**env_overrides) -> Settings:
        env = {
            "STW_DATA_DIR": str(tmp_path / "data"),
            "SECRET_KEY": "unit-test-secret",
            "SERVER_URL": "http://stamp.test",
        }
        env.update({k: str(v) for k, v in env_overrides.items()})
        return Settings.from_env(env)

    return build


@pytest.fixture
def fake_transport():
    return FakeTransport()


@pytest.fixture
def fake_clock():
    return FakeClock(START)


@pytest.fixture
def make_engine(make_settings, fake_transport, fake_clock):
    engines = []

    def build(transport=None, clock=None, geo_provider=None, registry=None, **env):
        engine = Engine(
            make_settings(**env),
            transport=transport or fake_transport,
            clock=clock or fake_clock,
            geo_provider=geo_provider,
            registry=registry,
        )
        engines.append(engine)
        return engine

    yield build
    for engine in engines:
        engine.close()


@pytest.fixture
def engine(make_engine):
    return make_engine()
