import numpy as np
import pytest

from uavpattern.geometry import Observations
from uavpattern.learning import TrainingSet
from uavpattern.simulator import GroundTruthScene, TrajectoryConfig, generate_trajectory, make_ground_truth, synthesize


def random_training_set(n, seed=0, wavelength=0.125, y=None):
    """Training set over random bearings; ``y`` fixes the residual targets."""
    rng = np.random.default_rng(seed)
    obs = Observations(
        rng.uniform(-np.pi, np.pi, n), rng.uniform(-1.4, 1.4, n),
        rng.uniform(-np.pi, np.pi, n), rng.uniform(-1.4, 1.4, n),
        rng.uniform(5, 15, n),
    )
    p_tx = np.full(n, 20.0)
    y = rng.normal(size=n) if y is None else np.broadcast_to(np.asarray(y, float), (n,))
    p_rx = p_tx + y + 20 * np.log10(wavelength / (4 * np.pi * obs.d))
    return TrainingSet(np.arange(n, dtype=float), obs, p_tx, p_rx, wavelength)


def small_scene(noise_sigma=0.0, loops=8, samples_per_loop=90, seed=0, order=4):
    poses = generate_trajectory(TrajectoryConfig(loops=loops, samples_per_loop=samples_per_loop))
    scene = GroundTruthScene(
        make_ground_truth("sh_random", order=order, seed=seed + 1),
        make_ground_truth("sh_random", order=order, seed=seed + 2),
        noise_sigma=noise_sigma, seed=seed,
    )
    return synthesize(poses, scene), scene


@pytest.fixture(scope="session")
def noiseless_small():
    return small_scene()


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion and assert on it."""
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
