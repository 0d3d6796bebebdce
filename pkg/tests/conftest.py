import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from illumopt.dataset import make_led_layout
from illumopt.optics import OpticalSystem, build_ideal_pupil

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_system():
    return OpticalSystem(grid_h=16, grid_w=16)


@pytest.fixture
def small_pupil(small_system):
    return build_ideal_pupil(small_system)


@pytest.fixture
def system():
    return OpticalSystem()


@pytest.fixture
def leds37():
    return make_led_layout(37, 0.25)



@pytest.fixture(scope="session")
def tiny_dataset():
    """20x20 grid, 13 LEDs, 8 train / 2 test pairs."""
    from illumopt.dataset import DatasetConfig, build_dataset

    return build_dataset(DatasetConfig(grid_h=20, grid_w=20, n_leds=13, n_train=8, n_test=2, seed=3))


@pytest.fixture(scope="session")
def tiny_bank(tiny_dataset):
    from illumopt.optics import wotf_bank

    return wotf_bank(tiny_dataset.leds, build_ideal_pupil(tiny_dataset.system), tiny_dataset.system)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
