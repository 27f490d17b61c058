"""Independent brute-force references: direct enumeration straight from the definitions."""

import itertools

import numpy as np
import pytest


def all_points(n):
    return [np.array(p[::-1], dtype=np.uint8) for p in itertools.product((0, 1), repeat=n)]


def brute_influence(f, J):
    """Pr over all (x, y) of f(x) != f(x outside J, y on J), by full enumeration."""
    n = f.n
    J = list(J)
    pts = all_points(n)
    vals = {tuple(p): f(p) for p in pts}
    bad = 0
    for x in pts:
        for yJ in itertools.product((0, 1), repeat=len(J)):
            z = x.copy()
            z[J] = yJ
            bad += vals[tuple(x)] != vals[tuple(z)]
    return bad / (len(pts) * 2 ** len(J))


def brute_symmetric_influence(f, J):
    """Pr over all x and all permutations of J of f(x) != f(pi x)."""
    J = list(J)
    pts = all_points(f.n)
    perms = list(itertools.permutations(range(len(J))))
    bad = 0
    for x in pts:
        fx = f(x)
        for p in perms:
            z = x.copy()
            z[J] = x[[J[i] for i in p]]
            bad += fx != f(z)
    return bad / (len(pts) * len(perms))


def brute_distance(f, g):
    pts = all_points(f.n)
    return sum(f(p) != g(p) for p in pts) / len(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# -- acceptance reporting ---------------------------------------------------

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one or more (passed, detail) parts for the test's criterion number."""
    number = request.node.get_closest_marker("criterion").args[0]
    log = request.config.stash.setdefault(ACCEPTANCE, {})
    parts = log.setdefault(number, [])
    start = len(parts)

    def record(passed, detail):
        parts.append((bool(passed), detail))
        return passed

    yield record
    if len(parts) == start:
        parts.append((False, f"{request.node.name} raised before reporting"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        parts = log[number]
        verdict = "PASS" if all(p for p, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  " + "; ".join(d for _, d in parts))
