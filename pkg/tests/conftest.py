import numpy as np
import pytest
from hypothesis import strategies as st

from varqlab.pauli import Observable, PauliString, PauliTerm


def pauli_strings(n_qubits):
    return st.lists(st.sampled_from("IXYZ"), min_size=n_qubits, max_size=n_qubits).map(
        lambda axes: PauliString(tuple(axes))
    )


@st.composite
def string_pairs(draw, max_qubits=4):
    n = draw(st.integers(1, max_qubits))
    return draw(pauli_strings(n)), draw(pauli_strings(n))


@st.composite
def observables(draw, max_qubits=3, max_terms=6, axes="IXYZ"):
    n = draw(st.integers(1, max_qubits))
    k = draw(st.integers(0, max_terms))
    coeff = st.floats(-5, 5, allow_nan=False)
    terms = []
    for _ in range(k):
        s = draw(st.lists(st.sampled_from(axes), min_size=n, max_size=n))
        terms.append(PauliTerm(draw(coeff), PauliString(tuple(s))))
    return Observable(n, tuple(terms), draw(coeff))


def random_state(rng, n):
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    if call.excinfo is None:
        _CRITERIA[number] = (title, "PASS", "")
    else:
        msg = str(call.excinfo.value).strip().splitlines()
        _CRITERIA[number] = (title, "FAIL", msg[0] if msg else call.excinfo.typename)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"[{status}] AC{number:>2} {title}"
        terminalreporter.write_line(line + (f" -- {detail}" if detail else ""))
