import os
import sys

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from fsgroup.groups import FreeGroup, GeneratorSet, Heisenberg, IntegerLattice
from fsgroup.sets import FiniteSubset

settings.register_profile(
    "repro", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))

Z1 = IntegerLattice(1)
Z2 = IntegerLattice(2)
F2 = FreeGroup(2)
H3 = Heisenberg()
GROUPS = {"Z": Z1, "Z2": Z2, "F2": F2, "H3": H3}


def elements(g, size=4):
    """Hypothesis strategy for payloads of ``g`` with small coordinates or short words."""
    if g.kind == "Z^N":
        return st.tuples(*[st.integers(-size, size)] * g.rank)
    if g.kind == "F":
        letters = [s * i for i in range(1, g.rank + 1) for s in (1, -1)]
        return st.lists(st.sampled_from(letters), max_size=size).map(lambda w: g.check(tuple(w)))
    return st.tuples(st.integers(-size, size), st.integers(-size, size), st.integers(-size, size))


def subsets(g, max_size=30, size=4):
    return st.lists(elements(g, size), max_size=max_size).map(lambda xs: FiniteSubset(g, xs))


def brute_interior(A: FiniteSubset, gens: GeneratorSet) -> FiniteSubset:
    """{a in A : w a in A for every w in Omega}, straight from the definition."""
    g = A.group
    return FiniteSubset(g, [a for a in A.items if all(g.mul(w, a) in A.members for w in gens.elements)])


def interval(a, b):
    return FiniteSubset(Z1, [(i,) for i in range(a, b + 1)])


@pytest.fixture(params=list(GROUPS), ids=list(GROUPS))
def group(request):
    return GROUPS[request.param]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod._line(k))
