import pytest

from pmx.core import alt, env11, initial_state

# Lines collected by the acceptance suite and echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# The hand-executed complete session of process 0 against neighbour 1,
# followed by the withdraw/ack drain.
FULL_RUN = [
    env11(0, {1}),
    alt("Fwd12", 0),
    alt("RcvNotify", 0, 1),
    alt("Fwd13", 0),
    alt("RcvReq", 0, 1),
    alt("Prom", 0, 1),
    alt("RcvGra", 1, 0),
    alt("Fwd14", 0),
    alt("Fwd15", 0),
    alt("Fwd16", 0),
    alt("RcvWithdraw", 0, 1),
    alt("After", 0, 1),
    alt("RcvAck", 1, 0),
    alt("RcvGra", 0, 1),
]

PAIR_CHOICES = {0: [(), (1,)], 1: [(), (0,)]}


@pytest.fixture
def s01():
    return initial_state([0, 1])


@pytest.fixture
def s012():
    return initial_state([0, 1, 2])
