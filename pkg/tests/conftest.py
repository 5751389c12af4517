import numpy as np
import pytest
from hypothesis import settings, strategies as st

from hgperfect.hypergraph import Hypergraph

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def hypergraphs(draw, min_n=2, max_n=7, max_m=5, max_k=4):
    n = draw(st.integers(min_n, max_n))
    sizes = st.integers(2, min(max_k, n))
    raw = draw(st.lists(sizes.flatmap(lambda s: st.lists(st.integers(0, n - 1), min_size=s, max_size=s,
                                                          unique=True)), max_size=max_m))
    edges = list(dict.fromkeys(tuple(sorted(e)) for e in raw))
    return Hypergraph(n, tuple(edges))


@st.composite
def instance_and_bits(draw, max_n=6, max_len=40):
    H = draw(hypergraphs(max_n=max_n))
    bits = draw(st.lists(st.integers(0, 1), max_size=max_len))
    return H, np.array(bits, dtype=np.uint8)


@pytest.fixture
def single_edge():
    return Hypergraph.from_one_based(3, [(1, 2, 3)])


@pytest.fixture
def path3():
    return Hypergraph.from_one_based(3, [(1, 2), (2, 3)])


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Records one verdict line per criterion for the terminal summary."""
    def record(label: str, outcomes) -> bool:
        outcomes = list(outcomes)
        ok = all(o.passed for o in outcomes)
        line = f"{'PASS' if ok else 'FAIL'} {label}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        for o in outcomes:
            ACCEPTANCE_LINES.append("    " + o.line())
            print("    " + o.line())
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
