import pytest

from fourhammer_driver import ServerProcess, WireEnv

BASE_PORT = 7800


@pytest.fixture(scope="session")
def env():
    """One shared server + env for the whole session; tests reset it."""
    server = ServerProcess(BASE_PORT, "full_game", 0)
    wire = WireEnv("127.0.0.1", BASE_PORT)
    yield wire
    wire.close()
    server.close()
