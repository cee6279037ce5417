import pytest

from qansim import scenario


@pytest.fixture(scope="session")
def experiment_config():
    return scenario.load_config(scenario.bundled_config_path())


@pytest.fixture(scope="session")
def calibrated(experiment_config):
    """(DetectorParams, RamanProfile) fitted to the bundled targets."""
    return scenario.ensure_calibrated(experiment_config)
