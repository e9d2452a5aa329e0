import numpy as np
import pytest

from pnalgebroid import toda
from pnalgebroid.algebroid import LieAlgebroid, lie_algebra, tangent_algebroid


def sl2_action():
    """sl(2) acting on the plane: e1 -> d/dx, e2 -> x d/dx + y d/dy, e3 -> x^2 d/dx + 2xy d/dy."""
    structure = {(0, 1): [1, 0, 0], (0, 2): [0, 2, 0], (1, 2): [0, 0, 1]}
    anchor = [["1", "0"], ["x", "y"], ["x^2", "2*x*y"]]
    return LieAlgebroid("sl2-action", ["x", "y"], ["e1", "e2", "e3"], structure, anchor,
                       {"x": (-1, 1), "y": (0.5, 1.5)})


def varying_structure():
    """Rank-2 algebroid over the line with [e1, e2] = x e2 and rho(e1) = d/dx, rho(e2) = 0."""
    return LieAlgebroid("varying", ["x"], ["e1", "e2"], {(0, 1): [0, "x"]}, [["1"], ["0"]], {"x": (-1, 1)})


@pytest.fixture(scope="session")
def sl2():
    return sl2_action()


@pytest.fixture(scope="session")
def varying():
    return varying_structure()


@pytest.fixture(scope="session")
def aff2():
    """The 2-dimensional non-abelian Lie algebra [e1, e2] = e2."""
    return lie_algebra({(0, 1): [0, 1]}, frame=["e1", "e2"], name="aff")


@pytest.fixture(scope="session")
def plane():
    return tangent_algebroid(["q1", "q2"], {"q1": (0.5, 2.0), "q2": (-1, 1)})


@pytest.fixture(scope="session")
def toda_phys2():
    return toda.toda_physical(2)


@pytest.fixture(scope="session")
def toda_phys3_box():
    return toda.toda_physical(3, domain=toda.DET_POSITIVE_BOX_3)


@pytest.fixture(scope="session")
def toda_alg3():
    return toda.toda_algebroid(3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record and print one line per acceptance criterion."""
    log = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, passed, summary):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {summary}"
        log.append((number, line))
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(ACCEPTANCE, [])
    if log:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(log):
            terminalreporter.write_line(line)
