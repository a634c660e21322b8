"""Subgroup analysis: Schreier generators, Reidemeister-Schreier rewriting,
Tietze simplification for rank upper bounds, and Stallings folding as the
exact-rank oracle inside free groups.

Exact rank is uncomputable in general, so everything rank-shaped is reported
as a [lower, upper] interval; the interval is degenerate exactly when the
homology lower bound meets the presentation upper bound (always the case for
free ambient groups).
"""

from __future__ import annotations

from dataclasses import dataclass

from .cosets import CosetTable, schreier_transversal
from .errors import RelatorLengthExceeded
from .homology import DEFAULT_PRIMES, report_from_matrix
from .words import (
    Presentation,
    SubgroupSpec,
    Word,
    cyclic_reduce,
    free_reduce,
    invert,
)

DEFAULT_RELATOR_CAP = 10_000


@dataclass(frozen=True)
class SchreierData:
    """Transversal, spanning tree and nontrivial Schreier generators."""

    transversal: tuple  # transversal[i] carries coset 0 to coset i
    generators: tuple  # one word per non-tree (coset, generator) pair
    tree: tuple  # parent pointers: tree[i] = (parent coset, letter), tree[0] = None
    pairs: tuple  # the (coset, generator) pair behind each Schreier generator


def schreier_generators(table: CosetTable) -> SchreierData:
    """Schreier generators of the subgroup of a coset table.

    Uses the shortest-lex BFS transversal, so the nontrivial generator count
    is index * rank - (index - 1).
    """
    words, parent = schreier_transversal(table)
    tree_edges = set()
    for c in range(1, table.index):
        pc, letter = parent[c]
        if letter > 0:
            tree_edges.add((pc, letter, c))
        else:
            tree_edges.add((c, -letter, pc))
    gens = []
    pairs = []
    for c in range(table.index):
        for g in range(1, table.pres.rank + 1):
            d = table.perms[g - 1][c]
            if (c, g, d) in tree_edges:
                continue
            gens.append(free_reduce(words[c] + (g,) + invert(words[d])))
            pairs.append((c, g))
    return SchreierData(
        transversal=tuple(words),
        generators=tuple(gens),
        tree=tuple(parent),
        pairs=tuple(pairs),
    )


def _trace_relator(table, schreier_index, c, relator):
    """Rewrite one relator at one coset as a word over Schreier generators."""
    out = []
    d = c
    for letter in relator:
        if letter > 0:
            pair = (d, letter)
            d = table.perms[letter - 1][d]
            sign = 1
        else:
            d = table.letter_perm(letter)[d]
            pair = (d, -letter)
            sign = -1
        idx = schreier_index.get(pair)
        if idx is not None:
            out.append(sign * (idx + 1))
    assert d == c, "relator trace did not close"
    return free_reduce(out)


def rewrite_presentation(
    pres: Presentation, table: CosetTable, length_cap: int = DEFAULT_RELATOR_CAP
) -> Presentation:
    """Reidemeister-Schreier presentation of the subgroup of the table.

    Generators are the nontrivial Schreier generators; there is one rewritten
    relator per (coset, ambient relator) pair before reduction.
    """
    data = schreier_generators(table)
    schreier_index = {pair: i for i, pair in enumerate(data.pairs)}
    relators = []
    for c in range(table.index):
        for relator in pres.relators:
            w = cyclic_reduce(_trace_relator(table, schreier_index, c, relator))
            if len(w) > length_cap:
                raise RelatorLengthExceeded(length_cap, len(w), context=f"coset {c}")
            relators.append(w)
    names = tuple(f"x{i}" for i in range(len(data.generators)))
    return Presentation(generators=names, relators=tuple(relators))


def subgroup_abelianized_matrix(table: CosetTable):
    """Abelianized Reidemeister-Schreier relation matrix, built by tracing.

    Avoids materializing the rewritten relators, whose lengths can blow up;
    the exponent-sum rows cannot.
    """
    data = schreier_generators(table)
    schreier_index = {pair: i for i, pair in enumerate(data.pairs)}
    cols = len(data.generators)
    rows = []
    for c in range(table.index):
        for relator in table.pres.relators:
            row = [0] * cols
            d = c
            for letter in relator:
                if letter > 0:
                    pair = (d, letter)
                    d = table.perms[letter - 1][d]
                    sign = 1
                else:
                    d = table.letter_perm(letter)[d]
                    pair = (d, -letter)
                    sign = -1
                idx = schreier_index.get(pair)
                if idx is not None:
                    row[idx] += sign
            rows.append(row)
    return rows, cols


def subgroup_homology(table: CosetTable, primes=DEFAULT_PRIMES):
    """HomologyReport of the subgroup of a coset table."""
    matrix, cols = subgroup_abelianized_matrix(table)
    return report_from_matrix(matrix, cols, primes)


# ---------------------------------------------------------------------------
# Tietze simplification
# ---------------------------------------------------------------------------


def _canonical_relator_key(w):
    candidates = []
    for u in (w, invert(w)):
        for i in range(max(len(u), 1)):
            candidates.append(u[i:] + u[:i])
    return min(candidates)


def _substitute(word, target, replacement):
    """Replace letter ``target`` by ``replacement`` (and inverses) in word."""
    out = []
    inv_rep = invert(replacement)
    for letter in word:
        if letter == target:
            out.extend(replacement)
        elif letter == -target:
            out.extend(inv_rep)
        else:
            out.append(letter)
    return free_reduce(out)


def _renumber(words, removed_letter):
    def remap(letter):
        g = abs(letter)
        shifted = g - 1 if g > removed_letter else g
        return shifted if letter > 0 else -shifted

    return [tuple(remap(x) for x in w) for w in words]


def tietze_simplify(
    pres: Presentation,
    effort: int = 2,
    length_cap: int = DEFAULT_RELATOR_CAP,
    max_passes: int = 200,
    shorten_limit: int = 200,
) -> Presentation:
    """Best-effort presentation simplification.

    Effort levels: 0 deletes trivial/duplicate relators; 1 adds elimination
    of generators occurring exactly once in some relator; 2 adds greedy
    length-reducing substitutions between relators.  The generator count
    never increases and the group is unchanged up to isomorphism.

    The substitution pass is cubic in relator length, so it skips relators
    longer than ``shorten_limit``; they keep their effort-1 form.
    """
    names = list(pres.generators)
    relators = [cyclic_reduce(r) for r in pres.relators]

    def clean():
        nonlocal relators
        seen = set()
        out = []
        for r in sorted((cyclic_reduce(r) for r in relators), key=lambda w: (len(w), w)):
            if not r:
                continue
            key = _canonical_relator_key(r)
            if key in seen:
                continue
            seen.add(key)
            out.append(r)
        relators = out

    def eliminate_once():
        # Find a relator containing some generator exactly once (as g or
        # g^-1) and solve for it; deterministic scan order.
        for ri, r in enumerate(relators):
            counts = {}
            for letter in r:
                counts[abs(letter)] = counts.get(abs(letter), 0) + 1
            for g in sorted(counts):
                if counts[g] != 1:
                    continue
                pos = next(i for i, letter in enumerate(r) if abs(letter) == g)
                if r[pos] < 0:
                    r = invert(r)
                    pos = len(r) - 1 - pos
                u, v = r[:pos], r[pos + 1 :]
                replacement = free_reduce(invert(u) + invert(v))
                new_relators = []
                ok = True
                for rj, s in enumerate(relators):
                    if rj == ri:
                        continue
                    s2 = _substitute(s, g, replacement)
                    if len(s2) > length_cap:
                        ok = False
                        break
                    new_relators.append(s2)
                if not ok:
                    continue
                del names[g - 1]
                relators[:] = _renumber(new_relators, g)
                return True
        return False

    def shorten_once():
        # Use a long piece of one relator to shorten another.
        for ri, r in enumerate(relators):
            if len(r) < 2 or len(r) > shorten_limit:
                continue
            variants = []
            for base in (r, invert(r)):
                for i in range(len(base)):
                    variants.append(base[i:] + base[:i])
            for length in range(len(r) - 1, len(r) // 2, -1):
                for variant in variants:
                    piece = variant[:length]
                    complement = invert(variant[length:])
                    for rj, s in enumerate(relators):
                        if rj == ri:
                            continue
                        for k in range(len(s) - length + 1):
                            if s[k : k + length] == piece:
                                s2 = cyclic_reduce(s[:k] + complement + s[k + length :])
                                if len(s2) < len(s):
                                    relators[rj] = s2
                                    return True
        return False

    clean()
    for _ in range(max_passes):
        progress = False
        if effort >= 1 and eliminate_once():
            progress = True
        clean()
        if effort >= 2 and not progress and shorten_once():
            progress = True
            clean()
        if not progress:
            break
    return Presentation(generators=tuple(names), relators=tuple(relators))


# ---------------------------------------------------------------------------
# Rank bounds
# ---------------------------------------------------------------------------


def rank_bounds(
    pres: Presentation,
    table: CosetTable,
    primes=DEFAULT_PRIMES,
    effort: int = 2,
    length_cap: int = DEFAULT_RELATOR_CAP,
    report=None,
):
    """Rank interval [lower, upper] for the subgroup of the table.

    lower: best homology bound (beta1 and b_{1,p}); upper: generator count
    after Tietze simplification of the rewritten presentation (for a free
    ambient group this is just the Nielsen-Schreier count).  Pass a
    precomputed homology report to skip recomputing the lower bound.
    """
    if report is None:
        report = subgroup_homology(table, primes)
    lower = max([report.beta1] + list(report.b1p.values()))
    data = schreier_generators(table)
    if not pres.relators:
        upper = len(data.generators)
    else:
        rewritten = rewrite_presentation(pres, table, length_cap)
        upper = tietze_simplify(rewritten, effort=effort, length_cap=length_cap).rank
    if lower > upper:
        raise AssertionError(f"rank bounds crossed: {lower} > {upper}")
    return lower, upper


# ---------------------------------------------------------------------------
# Stallings folding
# ---------------------------------------------------------------------------


@dataclass
class FoldedGraph:
    """Fully folded labeled graph of a finitely generated free subgroup."""

    rank: int  # ambient free rank
    adjacency: dict  # vertex -> {letter: vertex}, letters are signed
    base: int

    @property
    def num_vertices(self):
        return len(self.adjacency)

    @property
    def num_edges(self):
        return sum(1 for nbrs in self.adjacency.values() for letter in nbrs if letter > 0)

    @property
    def cycle_rank(self):
        return self.num_edges - self.num_vertices + 1

    def is_complete_cover(self):
        return all(len(nbrs) == 2 * self.rank for nbrs in self.adjacency.values())


def fold_subgroup_graph(rank: int, spec: SubgroupSpec) -> FoldedGraph:
    """Fold the wedge of generator paths of a free-group subgroup."""
    if spec.normal:
        raise ValueError("folding applies to plain subgroups, not normal closures")
    parent = {0: 0}
    adj = {0: {}}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    pending = []

    def union(a, b):
        a, b = find(a), find(b)
        if a == b:
            return
        if len(adj[a]) < len(adj[b]):
            a, b = b, a
        parent[b] = a
        edges = adj.pop(b)
        for letter, tgt in edges.items():
            _connect(a, letter, tgt)

    def _connect(u, letter, v):
        u = find(u)
        existing = adj[u].get(letter)
        if existing is None:
            adj[u][letter] = v
        elif find(existing) != find(v):
            pending.append((existing, v))

    def add_edge(u, letter, v):
        _connect(u, letter, v)
        _connect(v, -letter, u)
        while pending:
            union(*pending.pop())

    fresh = 1
    for word in spec.generators:
        here = 0
        for letter in free_reduce(word):
            parent[fresh] = fresh
            adj[fresh] = {}
            add_edge(here, letter, fresh)
            here = find(fresh)
            fresh += 1
        # close the loop at the base
        here = find(here)
        base = find(0)
        if here != base:
            union(here, base)
            while pending:
                union(*pending.pop())

    # Compress all edge targets to representatives.
    graph = {}
    for v in list(adj):
        rv = find(v)
        if rv != v:
            continue
        graph[v] = {letter: find(t) for letter, t in adj[v].items()}
    return FoldedGraph(rank=rank, adjacency=graph, base=find(0))


def stallings_fold(rank: int, spec: SubgroupSpec):
    """(subgroup rank, index) of a f.g. subgroup of a free group.

    index is the vertex count of the folded graph when it is a complete
    cover, or None when the index is infinite.
    """
    graph = fold_subgroup_graph(rank, spec)
    index = graph.num_vertices if graph.is_complete_cover() else None
    return graph.cycle_rank, index
