"""Shared fixtures: small scenario configs used across test modules."""
import pytest

from prafd.config import ScenarioConfig


@pytest.fixture(scope="session")
def desk_cfg():
    """Two users per side, two antennas per side, everything else default."""
    return ScenarioConfig(K_D=2, K_U=2, N_t=2, N_r=2)


@pytest.fixture(scope="session")
def tiny_cfg():
    """Light config for derivative and placement checks."""
    return ScenarioConfig(K_D=2, K_U=2, N_t=3, N_r=3, L=3, L_SI=3)
