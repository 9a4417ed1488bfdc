import pytest

from depthtune.config import load_config

TINY = """
[env]
train_iters = 3
nodes_per_layer = 8
[run]
episodes = 3
steps = 4
fmodel_steps = 2
validation_episodes = 3
init_sweep = 1,15
[surrogate]
episodes = 2
seeds = 2
[fmodel]
epochs = 2
targets = 3,10
"""


@pytest.fixture
def tiny_ini(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY)
    return path


@pytest.fixture
def tiny_cfg():
    return load_config(text=TINY)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
