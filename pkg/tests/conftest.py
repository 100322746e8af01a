import time

import numpy as np
import pytest

from flowlaw import STEEL_42CRMO4, TrainConfig, generate_test_set, generate_training_grid
from flowlaw.training import default_ranges, init_model, train_adam

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def grid():
    return generate_training_grid(STEEL_42CRMO4)


@pytest.fixture(scope="session")
def test_set():
    return generate_test_set(STEEL_42CRMO4, count=5000, seed=0)


@pytest.fixture(scope="session")
def trained(grid):
    """3-15-7-1 sigmoid net trained with the default 10 000-iteration config."""
    model = init_model((15, 7), "sigmoid", default_ranges(STEEL_42CRMO4, grid), seed=0)
    start = time.perf_counter()
    model, history = train_adam(model, grid, TrainConfig())
    return model, history, time.perf_counter() - start


@pytest.fixture(scope="session")
def trained_model(trained):
    return trained[0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record():
    def _record(criterion, passed, detail):
        ACCEPTANCE[criterion] = (bool(passed), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=str):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def plastic_cases():
    """Random (state, d_eps, dt) triples starting on the yield surface of ``law`` (default JC)."""
    from flowlaw.johnson_cook import STEEL_42CRMO4 as P, jc_flow_stress
    from flowlaw.plasticity import MaterialPointState, deviator

    def make(count, seed=0, law=None):
        rng = np.random.default_rng(seed)
        cases = []
        for _ in range(count):
            eps_p, T = rng.uniform(0.0, 0.8), rng.uniform(20.0, 480.0)
            rate = np.exp(rng.uniform(0.0, np.log(5e4)))
            direction = deviator(rng.normal(size=(3, 3)) + np.diag(rng.normal(size=3)))
            direction = 0.5 * (direction + direction.T)
            direction /= np.sqrt(1.5 * np.sum(direction * direction))  # unit von Mises
            sy = jc_flow_stress(P, eps_p, rate, T) if law is None else law(eps_p, rate, T)[0]
            stress = float(sy) * direction
            state = MaterialPointState(stress, eps_p, rate, T)
            noise = deviator(rng.normal(size=(3, 3)))
            noise = 0.5 * (noise + noise.T)
            noise -= np.sum(noise * direction) / np.sum(direction * direction) * direction
            # orthogonal noise keeps every increment loading
            d_eps = rng.uniform(1e-3, 1e-2) * (direction + 0.3 * noise)
            rate_step = np.exp(rng.uniform(0.0, np.log(5e4)))
            cases.append((state, d_eps, float(np.linalg.norm(d_eps)) / rate_step))
        return cases
    return make
