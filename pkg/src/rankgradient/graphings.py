"""Coset trees, cylindric graphings on a fixed level, and the labeled-graph
rank bound.

A graphing at level n is a finite map from freely reduced word labels to
sets of level-n cosets; evaluating the boundary-action definitions on the
level quotient keeps every measure an exact rational.  Labels are compared
as free words, never modulo the relators: two labels equal in the group but
distinct as words stay distinct, which can only overcount the edge measure
and never affects connectivity, loop images, or the rank bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cosets import CosetTable, enumerate_cosets, schreier_transversal
from .errors import IndexBoundExceeded, LabelLengthExceeded
from .words import SubgroupSpec, Word, free_reduce, invert

DEFAULT_LABEL_CAP = 64


# ---------------------------------------------------------------------------
# Coset trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CosetTree:
    """Levelwise tree of cosets of a chain; vertex (n, c) has measure 1/index(n)."""

    chain: object
    parents: tuple  # parents[n][c] = the level-n coset containing level-(n+1) coset c

    @property
    def num_levels(self):
        return len(self.chain.levels)

    def level_size(self, n):
        return self.chain.table(n).index

    def shadow_measure(self, n):
        return Fraction(1, self.level_size(n))

    def children(self, n, c):
        return [d for d, p in enumerate(self.parents[n]) if p == c]


def build_coset_tree(chain) -> CosetTree:
    """Parent maps via transversal words: the level-(n+1) coset of word w sits
    inside the level-n coset that w carries the base to."""
    parents = []
    for n in range(len(chain.levels) - 1):
        upper = chain.table(n)
        lower = chain.table(n + 1)
        words, _ = schreier_transversal(lower)
        parents.append(tuple(upper.apply(w, 0) for w in words))
    tree = CosetTree(chain=chain, parents=tuple(parents))
    for n, pmap in enumerate(parents):
        sizes = {}
        for p in pmap:
            sizes[p] = sizes.get(p, 0) + 1
        total = sum(
            Fraction(k, 1) * tree.shadow_measure(n + 1) for k in sizes.values()
        )
        assert total == 1, "child measures do not sum to 1"
    return tree


# ---------------------------------------------------------------------------
# Graphings
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Graphing:
    """Finitely supported label -> coset-set map over one level's table."""

    table: CosetTable
    level: int
    fibers: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for label, cosets in self.fibers.items():
            label = free_reduce(label)
            cosets = frozenset(cosets)
            if not cosets:
                continue
            if any(not 0 <= c < self.table.index for c in cosets):
                raise ValueError(f"fiber of {label} contains an out-of-range coset")
            cleaned[label] = cleaned.get(label, frozenset()) | cosets
        object.__setattr__(self, "fibers", cleaned)

    def __eq__(self, other):
        return (
            isinstance(other, Graphing)
            and self.level == other.level
            and self.fibers == other.fibers
        )

    @property
    def index(self):
        return self.table.index

    def incidences(self):
        """Sorted (coset, label) pairs."""
        return sorted(
            (c, label) for label, cosets in self.fibers.items() for c in cosets
        )


def edge_measure(m: Graphing) -> Fraction:
    return sum(
        (Fraction(len(cosets), m.index) for cosets in m.fibers.values()),
        Fraction(0),
    )


def bar(m: Graphing) -> Graphing:
    """m, its transpose, and the identity fiber on every coset."""
    fibers = {label: set(cosets) for label, cosets in m.fibers.items()}
    for label, cosets in m.fibers.items():
        inv = invert(label)
        targets = {m.table.apply(label, c) for c in cosets}
        fibers.setdefault(inv, set()).update(targets)
    fibers.setdefault((), set()).update(range(m.index))
    return Graphing(table=m.table, level=m.level, fibers=fibers)


def compose(m: Graphing, n: Graphing, label_cap: int = DEFAULT_LABEL_CAP) -> Graphing:
    """(c, g1 g2) for every (c, g1) in m with (c.g1, g2) in n."""
    if m.level != n.level:
        raise ValueError("graphings live on different levels")
    fibers = {}
    for g1, cosets1 in m.fibers.items():
        for c in cosets1:
            mid = m.table.apply(g1, c)
            for g2, cosets2 in n.fibers.items():
                if mid in cosets2:
                    label = free_reduce(g1 + g2)
                    if len(label) > label_cap:
                        raise LabelLengthExceeded(label_cap, label)
                    fibers.setdefault(label, set()).add(c)
    return Graphing(table=m.table, level=m.level, fibers=fibers)


def union(m: Graphing, n: Graphing) -> Graphing:
    if m.level != n.level:
        raise ValueError("graphings live on different levels")
    fibers = {label: set(cosets) for label, cosets in m.fibers.items()}
    for label, cosets in n.fibers.items():
        fibers.setdefault(label, set()).update(cosets)
    return Graphing(table=m.table, level=m.level, fibers=fibers)


def power(m: Graphing, k: int, label_cap: int = DEFAULT_LABEL_CAP) -> Graphing:
    """m^1 = bar(m); m^k = m^(k-1) union m^(k-1).bar(m)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    base = bar(m)
    acc = base
    for _ in range(k - 1):
        acc = union(acc, compose(acc, base, label_cap))
    return acc


def projected_edges(m: Graphing):
    """Undirected (coset, coset) pairs realized by some incidence."""
    edges = set()
    for label, cosets in m.fibers.items():
        for c in cosets:
            d = m.table.apply(label, c)
            edges.add((min(c, d), max(c, d)))
    return edges


def graphing_from_generators(chain, level: int, gens) -> Graphing:
    """The seed graphing of a level: each subgroup generator on the base
    coset plus each non-identity transversal word on the base coset.

    Its edge measure is (d + index - 1)/index for d distinct generator labels.
    """
    table = chain.table(level)
    fibers = {}
    for g in gens:
        g = free_reduce(g)
        if not table.fixes_base(g):
            raise ValueError(
                f"word {chain.ambient.word_str(g)} is not in the level-{level} subgroup"
            )
        fibers.setdefault(g, set()).add(0)
    words, _ = schreier_transversal(table)
    for w in words[1:]:
        fibers.setdefault(w, set()).add(0)
    return Graphing(table=table, level=level, fibers=fibers)


# ---------------------------------------------------------------------------
# Labeled graphs and the rank bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledGraph:
    """One undirected edge per (coset, label) incidence, plus a base vertex."""

    num_vertices: int
    edges: tuple  # of (v, w, label), w = v . label
    base: int = 0
    disconnected: bool = False

    @property
    def num_edges(self):
        return len(self.edges)


def to_labeled_graph(m: Graphing, chain):
    """(graph, loop basis): one fundamental-cycle word per non-tree edge.

    Every loop word fixes the base coset.  If the graph is disconnected the
    flag is set and the loop basis only covers the base component.
    """
    table = m.table
    edges = tuple(
        (c, table.apply(label, c), label)
        for c, label in m.incidences()
    )
    # BFS spanning tree from the base over the undirected graph
    word_to = {0: ()}
    frontier = [0]
    adjacency = {}
    for v, w, label in edges:
        adjacency.setdefault(v, []).append((w, label, False))
        adjacency.setdefault(w, []).append((v, label, True))
    tree_edges = set()
    while frontier:
        nxt = []
        for v in frontier:
            for w, label, reverse in sorted(adjacency.get(v, ()), key=lambda e: (e[0], e[1], e[2])):
                if w in word_to:
                    continue
                word_to[w] = free_reduce(word_to[v] + (invert(label) if reverse else label))
                tree_edges.add((min(v, w), max(v, w), label))
                nxt.append(w)
        frontier = nxt
    disconnected = len(word_to) < m.index
    loops = []
    used_tree = set()
    for v, w, label in edges:
        if v not in word_to:
            continue
        key = (min(v, w), max(v, w), label)
        if key in tree_edges and key not in used_tree:
            used_tree.add(key)
            continue
        loops.append(free_reduce(word_to[v] + label + invert(word_to[w])))
    graph = LabeledGraph(
        num_vertices=m.index, edges=edges, base=0, disconnected=disconnected
    )
    for loop in loops:
        assert table.fixes_base(loop), "loop word left the subgroup"
    return graph, loops


@dataclass(frozen=True)
class LGraphingCertificate:
    """verdict True/False, or None when an enumeration budget made the
    loop-image check indeterminate."""

    verdict: object
    reason: str
    table: object = None


def is_l_graphing(m: Graphing, chain, coset_cap: int = None) -> LGraphingCertificate:
    """True iff the labeled graph is connected and the loop basis generates
    the level subgroup (checked by enumerating its index in the ambient group)."""
    graph, loops = to_labeled_graph(m, chain)
    if graph.disconnected:
        return LGraphingCertificate(False, "labeled graph is disconnected")
    spec = SubgroupSpec(generators=tuple(loops), name="loops")
    kwargs = {} if coset_cap is None else {"cap": coset_cap}
    try:
        loop_table = enumerate_cosets(
            chain.ambient, spec, provenance="loop image", **kwargs
        )
    except IndexBoundExceeded as exc:
        return LGraphingCertificate(None, str(exc))
    if loop_table.index == m.index:
        return LGraphingCertificate(True, "connected with full loop image", loop_table)
    return LGraphingCertificate(
        False,
        f"loop image has index {loop_table.index}, expected {m.index}",
        loop_table,
    )


def rank_bound(m: Graphing, chain) -> int:
    """e(m) * index - index + 1; only meaningful (and only allowed) when m
    is a verified L-graphing of its level."""
    cert = is_l_graphing(m, chain)
    if cert.verdict is not True:
        raise ValueError(f"not a verified L-graphing: {cert.reason}")
    total = edge_measure(m) * m.index
    assert total.denominator == 1
    return int(total) - m.index + 1


def minimize_graphing(
    chain, level: int, gens=None, label_cap: int = DEFAULT_LABEL_CAP, seed: int = 0
):
    """Greedy edge-measure minimization over L-graphings at a level.

    Starts from the generating-set graphing and repeatedly tries deleting
    single incidences (largest fiber first, then lexicographic label order),
    keeping a deletion only when the result is still an L-graphing.  Always
    returns at least the seed graphing.  ``seed`` is accepted for interface
    stability; the deletion order itself is fully deterministic.
    """
    table = chain.table(level)
    if gens is None:
        spec = chain.levels[level][1]
        if spec.normal:
            raise ValueError("need explicit generators for a normal-closure level")
        gens = spec.generators
    current = graphing_from_generators(chain, level, gens)
    changed = True
    while changed:
        changed = False
        order = sorted(
            current.incidences(),
            key=lambda item: (-len(current.fibers[item[1]]), item[1], item[0]),
        )
        for c, label in order:
            fibers = {k: set(v) for k, v in current.fibers.items()}
            fibers[label].discard(c)
            candidate = Graphing(table=table, level=level, fibers=fibers)
            if is_l_graphing(candidate, chain).verdict is True:
                current = candidate
                changed = True
                break
    return current, rank_bound(current, chain)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def graphing_to_json_obj(m: Graphing, pres):
    return [
        {"label": pres.word_str(label), "cosets": sorted(cosets)}
        for label, cosets in sorted(m.fibers.items())
    ]
