import numpy as np
import pytest

from matamg import two_domain_problem
from matamg.strength import AuxiliaryData

# acceptance lines collected here and echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def two_domain_1e4():
    return two_domain_problem(32, 1e4)


@pytest.fixture(scope="session")
def two_domain_small():
    return two_domain_problem(8, 100.0)


def aux_of(problem):
    return AuxiliaryData(np.asarray(problem.coords, float), np.asarray(problem.node_materials, float))


def random_sparse(rng, n_rows, n_cols, density=0.3):
    from matamg import SparseMatrix

    dense = rng.standard_normal((n_rows, n_cols)) * (rng.random((n_rows, n_cols)) < density)
    return SparseMatrix.from_dense(dense), dense
