import numpy as np
import pytest

from latticetact.estimator import calibrate_from_model
from latticetact.model import LatticeParams


@pytest.fixture(scope="session")
def params():
    return LatticeParams()


@pytest.fixture(scope="session")
def cal(params):
    return calibrate_from_model(params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def trained(params):
    """Full-size network trained once per session: 5 trials train, 1 held out."""
    from latticetact import contactnet as net
    from latticetact.model import run_characterization

    data = run_characterization(params, trials=6, rng=np.random.default_rng(0))
    train_set, test_set = net.split_by_trial(data)
    result = net.train(train_set, net.TrainConfig(seed=0), test_set)
    return result, train_set, test_set


_ACCEPTANCE = pytest.StashKey()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, ok, detail):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
