"""Interference graphs, independent-set enumeration and exact coloring."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: refuse to enumerate more independent sets than this
MAX_INDEPENDENT_SETS = 2 ** 24
#: exact chromatic number search is limited to this many vertices
MAX_COLORING_VERTICES = 32


class CapExceededError(RuntimeError):
    """An exact computation would exceed its configured size cap."""


@dataclass(frozen=True)
class InterferenceGraph:
    """Conflict graph over ``n`` links.

    Edges are stored as sorted pairs ``(i, j)`` with ``i < j``; vertex
    indices run from 0 to ``n - 1``.
    """

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one link")
        clean = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on link {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            clean.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def from_edges(cls, n, edges):
        return cls(n, frozenset(map(tuple, edges)))

    def neighbors(self, i):
        return sorted({b if a == i else a for a, b in self.edges if i in (a, b)})

    def adjacency(self):
        """Dense boolean adjacency matrix."""
        adj = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj

    def csr(self):
        """Neighbor lists in CSR form ``(indptr, indices)`` (int64)."""
        adj = self.adjacency()
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indices = []
        for i in range(self.n):
            nb = np.flatnonzero(adj[i])
            indices.extend(nb.tolist())
            indptr[i + 1] = indptr[i] + len(nb)
        return indptr, np.asarray(indices, dtype=np.int64)

    def sorted_edges(self):
        return sorted(self.edges)

    def is_independent(self, rho) -> bool:
        rho = np.asarray(rho)
        return all(not (rho[i] and rho[j]) for i, j in self.edges)


# -- constructors -----------------------------------------------------------

def complete_graph(n):
    return InterferenceGraph.from_edges(n, itertools.combinations(range(n), 2))


def empty_graph(n):
    return InterferenceGraph(n)


def path_graph(n):
    return InterferenceGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    if n < 3:
        raise ValueError("cycle needs at least 3 vertices")
    return InterferenceGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(n):
    """Star with center 0 and leaves ``1..n-1``."""
    return InterferenceGraph.from_edges(n, [(0, i) for i in range(1, n)])


def petersen_graph():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return InterferenceGraph.from_edges(10, outer + spokes + inner)


# -- independent sets -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IndependentSetFamily:
    """All independent sets of a graph, in lexicographic order.

    ``sets`` is an ``(N, n)`` uint8 matrix; row ``k`` is the ``k``-th
    schedule vector.  Ordering treats link 0 as the most significant
    digit, so the all-zero schedule is always row 0.
    """

    sets: np.ndarray
    codes: np.ndarray

    @property
    def n(self):
        return self.sets.shape[1]

    def __len__(self):
        return self.sets.shape[0]

    def code_of(self, rho):
        rho = np.asarray(rho, dtype=np.int64)
        return int(rho @ _place_values(self.n))

    def index(self, rho) -> int:
        """Position of schedule ``rho`` in the family (``KeyError`` if absent)."""
        code = self.code_of(rho)
        k = int(np.searchsorted(self.codes, code))
        if k >= len(self.codes) or self.codes[k] != code:
            raise KeyError(f"{tuple(np.asarray(rho).tolist())} is not an independent set")
        return k

    def singleton(self, i) -> int:
        e = np.zeros(self.n, dtype=np.int64)
        e[i] = 1
        return self.index(e)


def _place_values(n):
    return (1 << np.arange(n - 1, -1, -1, dtype=np.int64)).astype(np.int64)


def enumerate_independent_sets(g: InterferenceGraph, cap: int = MAX_INDEPENDENT_SETS) -> IndependentSetFamily:
    """Enumerate every independent set of ``g``.

    Sets are built by prepending one vertex at a time (from ``n-1`` down to
    0), which yields lexicographic order without a final sort.

    Raises
    ------
    CapExceededError
        If the family would contain more than ``cap`` sets.
    """
    if g.n > 62:
        raise CapExceededError("independent-set codes need n <= 62")
    adj = g.adjacency()
    sets = np.zeros((1, 0), dtype=np.uint8)
    for v in range(g.n - 1, -1, -1):
        later = adj[v, v + 1:]
        ok = ~np.any(sets[:, later], axis=1) if later.any() else np.ones(len(sets), bool)
        size = len(sets) + int(ok.sum())
        if size > cap:
            raise CapExceededError(f"more than {cap} independent sets")
        zeros = np.hstack([np.zeros((len(sets), 1), np.uint8), sets])
        ones = np.hstack([np.ones((int(ok.sum()), 1), np.uint8), sets[ok]])
        sets = np.vstack([zeros, ones])
    codes = sets.astype(np.int64) @ _place_values(g.n)
    sets.setflags(write=False)
    codes.setflags(write=False)
    return IndependentSetFamily(sets, codes)


# -- coloring ---------------------------------------------------------------

def chromatic_number(g: InterferenceGraph, cap: int = MAX_COLORING_VERTICES) -> int:
    """Exact chromatic number by DSATUR branch and bound.

    The greedy DSATUR coloring gives the initial upper bound and a maximal
    clique (grown greedily) gives the lower bound; the search stops as soon
    as the two meet.
    """
    n = g.n
    if n > cap:
        raise CapExceededError(f"exact coloring limited to n <= {cap}")
    if not g.edges:
        return 1
    adj = g.adjacency()
    nbrs = [np.flatnonzero(adj[v]).tolist() for v in range(n)]

    lower = len(_greedy_clique(adj))
    best = _dsatur_greedy(nbrs)
    if best == lower:
        return best

    colors = [-1] * n

    def saturation(v):
        return len({colors[u] for u in nbrs[v] if colors[u] >= 0})

    def search(n_colored, n_used):
        nonlocal best
        if n_colored == n:
            best = min(best, n_used)
            return best == lower
        v = max((u for u in range(n) if colors[u] < 0),
                key=lambda u: (saturation(u), len(nbrs[u]), -u))
        used_by_nbrs = {colors[u] for u in nbrs[v]}
        for c in range(min(n_used + 1, best - 1)):
            if c in used_by_nbrs:
                continue
            colors[v] = c
            if search(n_colored + 1, max(n_used, c + 1)):
                return True
            colors[v] = -1
        return False

    search(0, 0)
    return best


def _greedy_clique(adj):
    order = np.argsort(-adj.sum(axis=1), kind="stable")
    best = []
    for start in order:
        clique = [int(start)]
        for v in order:
            if all(adj[v, u] for u in clique):
                clique.append(int(v))
        if len(clique) > len(best):
            best = clique
    return best


def _dsatur_greedy(nbrs):
    n = len(nbrs)
    colors = [-1] * n
    for _ in range(n):
        v = max((u for u in range(n) if colors[u] < 0),
                key=lambda u: (len({colors[w] for w in nbrs[u] if colors[w] >= 0}), len(nbrs[u]), -u))
        taken = {colors[u] for u in nbrs[v]}
        colors[v] = next(c for c in itertools.count() if c not in taken)
    return max(colors) + 1


# -- geometric topologies ---------------------------------------------------

def random_layout(n_nodes=20, side=800.0, seed=0):
    """Uniform node positions in a ``side x side`` square."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, side, size=(n_nodes, 2))


def connectivity_links(nodes, tx_range):
    """Node pairs within ``tx_range`` of each other, sorted."""
    nodes = np.asarray(nodes, dtype=float)
    links = []
    for a, b in itertools.combinations(range(len(nodes)), 2):
        if np.hypot(*(nodes[a] - nodes[b])) <= tx_range:
            links.append((a, b))
    return links


def two_hop_conflict_graph(nodes, tx_range, n_links=None):
    """Conflict graph of wireless links under two-hop interference.

    Links are the edges of the unit-disk connectivity graph (distance
    ``<= tx_range``).  Two links conflict when they share an endpoint or
    when some endpoint of one is a radio neighbor of some endpoint of the
    other.  ``n_links`` keeps only the first links in sorted order.

    Returns
    -------
    graph : InterferenceGraph or None
        ``None`` when the layout has no links at all.
    links : list of (int, int)
        Node pairs backing each conflict-graph vertex.
    """
    links = connectivity_links(nodes, tx_range)
    if n_links is not None:
        links = links[:n_links]
    if not links:
        return None, links
    radio = {frozenset(p) for p in connectivity_links(nodes, tx_range)}
    edges = []
    for (i, a), (j, b) in itertools.combinations(enumerate(links), 2):
        if set(a) & set(b) or any(frozenset((u, v)) in radio for u in a for v in b):
            edges.append((i, j))
    return InterferenceGraph.from_edges(len(links), edges), links


# -- text format ------------------------------------------------------------

def format_edge_list(g: InterferenceGraph) -> str:
    lines = [f"n {g.n}"] + [f"{i} {j}" for i, j in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> InterferenceGraph:
    """Parse the ``n <count>`` / ``i j`` edge-list format (``#`` comments allowed)."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n":
            if n is not None or len(parts) != 2:
                raise ValueError(f"line {lineno}: bad header {raw!r}")
            n = int(parts[1])
        else:
            if n is None:
                raise ValueError(f"line {lineno}: edge before 'n <count>' header")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'i j', got {raw!r}")
            edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        raise ValueError("missing 'n <count>' header")
    return InterferenceGraph.from_edges(n, edges)


def read_edge_list(path) -> InterferenceGraph:
    return parse_edge_list(Path(path).read_text())


def write_edge_list(g: InterferenceGraph, path):
    Path(path).write_text(format_edge_list(g))
