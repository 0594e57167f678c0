import math

import pytest

from likq import make_problem


@pytest.fixture
def negsin():
    return make_problem(1, ["-sin(x1)"], f="y1", name="negsin")


@pytest.fixture
def sinx_minus_x():
    return make_problem(1, ["sin(x1) - x1"], f="y1", name="sinx_minus_x")


@pytest.fixture
def three_switch():
    return make_problem(2, ["x1", "x2", "y1 - y2"], f="y3", name="abs_difference")


PI_MULTIPLES = [k * math.pi for k in (-2, -1, 0, 1, 2)]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
