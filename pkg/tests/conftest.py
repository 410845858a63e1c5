from collections import deque

import pytest

from cutwalk.graphs import FreeGroup, Heisenberg, Lattice, LatticeCrossFinite, path_graph

FAMILIES = {
    "lattice1": Lattice(1),
    "lattice2": Lattice(2),
    "lattice3": Lattice(3),
    "heisenberg": Heisenberg(),
    "lcf1_path3": LatticeCrossFinite(1, path_graph(3)),
    "lcf3_path3": LatticeCrossFinite(3, path_graph(3)),
    "free2": FreeGroup(2),
}


@pytest.fixture(params=sorted(FAMILIES))
def family(request):
    return FAMILIES[request.param]


def bfs_ball_sizes(spec, center, n_max):
    """Plain BFS over spec.neighbors; the oracle for layered quotient BFS."""
    dist = {center: 0}
    queue = deque([center])
    while queue:
        v = queue.popleft()
        if dist[v] == n_max:
            continue
        for u in spec.neighbors(v):
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    counts = [0] * (n_max + 1)
    for d in dist.values():
        counts[d] += 1
    out, running = [], 0
    for c in counts:
        running += c
        out.append(running)
    return out


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


def bfs_layers(spec, center, n_max):
    """balls[n] = set of vertices within distance n of center."""
    ball = {center}
    frontier = {center}
    out = [set(ball)]
    for _ in range(n_max):
        frontier = {u for v in frontier for u in spec.neighbors(v)} - ball
        ball |= frontier
        out.append(set(ball))
    return out
