import numpy as np
import pytest

from ssdmotion.diffusion import GaussianPrior, make_schedule
from ssdmotion.layout import SequenceLayout
from ssdmotion.motion import toy_skeleton

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def schedule():
    return make_schedule()


@pytest.fixture(scope="session")
def skeleton():
    return toy_skeleton()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_layout():
    return SequenceLayout.from_motions([0, 1, 2], motion_length=60, transition_length=60)


@pytest.fixture(scope="session")
def gaussian12(schedule):
    return GaussianPrior(np.linspace(-1.0, 1.0, 12), np.full(12, 1.0), schedule)


@pytest.fixture(scope="session")
def toy_training(schedule):
    """The standard synthetic prior: 4 labels x 256 windows of 120 frames, 60 epochs."""
    from ssdmotion.toyprior import generate_dataset, standard_generators, train_denoiser

    rng = np.random.default_rng(0)
    data = generate_dataset(standard_generators(), 256, 120, rng)
    return data, train_denoiser(data, schedule, epochs=60, lr=1e-3, rng=rng)


@pytest.fixture(scope="session")
def toy_prior(toy_training):
    return toy_training[1].denoiser
