"""Coset tables and the finite-index subgroup engine.

Todd-Coxeter enumeration (HLT style), exhaustive low-index subgroup search,
subgroup intersection via product actions, and normal cores via the regular
representation of the permutation image.

Conventions: coset 0 is the subgroup itself, words act on the right, and a
table's permutations are listed per generator.  All construction paths
canonicalize the coset numbering by BFS from coset 0 in letter order
(g1, g1^-1, g2, ...), so equal subgroups yield identical tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    ImageTooLarge,
    IndexBoundExceeded,
    InternalInvariantError,
    LowIndexBudget,
)
from .words import Presentation, SubgroupSpec, Word, free_reduce, invert

DEFAULT_COSET_CAP = 100_000
DEFAULT_IMAGE_CAP = 1_000_000
DEFAULT_NODE_CAP = 10_000_000

ALGORITHM_VERSION = "rankgradient-cosets-1"


@dataclass(frozen=True)
class CosetTable:
    """Complete transitive action of the generators on right cosets."""

    pres: Presentation
    perms: tuple  # one permutation (tuple of ints) per generator
    spec: SubgroupSpec | None = field(default=None, compare=False)
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        inv = tuple(_invert_perm(p) for p in self.perms)
        object.__setattr__(self, "_inv_perms", inv)

    @property
    def index(self) -> int:
        return len(self.perms[0]) if self.perms else 1

    def letter_perm(self, letter: int):
        return self.perms[letter - 1] if letter > 0 else self._inv_perms[-letter - 1]

    def apply(self, word: Word, coset: int = 0) -> int:
        for letter in word:
            coset = self.letter_perm(letter)[coset]
        return coset

    def word_perm(self, word: Word):
        return tuple(self.apply(word, c) for c in range(self.index))

    def fixes_base(self, word: Word) -> bool:
        """Subgroup membership: w is in the subgroup iff it fixes coset 0."""
        return self.apply(word, 0) == 0


def _invert_perm(p):
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def _letters(rank):
    out = []
    for g in range(1, rank + 1):
        out.extend((g, -g))
    return out


def canonicalize(table: CosetTable) -> CosetTable:
    """Renumber cosets by BFS from 0 in letter order."""
    n = table.index
    order = [0]
    new_of = {0: 0}
    letters = _letters(table.pres.rank)
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        for letter in letters:
            d = table.letter_perm(letter)[c]
            if d not in new_of:
                new_of[d] = len(order)
                order.append(d)
    if len(order) != n:
        raise InternalInvariantError("coset table is not transitive")
    perms = tuple(
        tuple(new_of[p[order[c]]] for c in range(n)) for p in table.perms
    )
    return CosetTable(pres=table.pres, perms=perms, spec=table.spec, provenance=table.provenance)


# ---------------------------------------------------------------------------
# Todd-Coxeter (HLT with coincidence processing)
# ---------------------------------------------------------------------------


class _TC:
    def __init__(self, rank, cap):
        self.rank = rank
        self.cap = cap
        self.table = [[None] * (2 * rank)]
        self.p = [0]  # union-find, representative is always the minimum
        self.alive = 1

    def col(self, letter):
        g = abs(letter) - 1
        return 2 * g if letter > 0 else 2 * g + 1

    def inv_col(self, col):
        return col ^ 1

    def rep(self, c):
        root = c
        while self.p[root] != root:
            root = self.p[root]
        while self.p[c] != root:
            self.p[c], c = root, self.p[c]
        return root

    def define(self, alpha, col):
        if self.alive >= self.cap:
            raise IndexBoundExceeded(self.cap)
        beta = len(self.table)
        self.table.append([None] * (2 * self.rank))
        self.p.append(beta)
        self.alive += 1
        self.table[alpha][col] = beta
        self.table[beta][self.inv_col(col)] = alpha
        return beta

    def coincidence(self, alpha, beta):
        queue = []

        def merge(a, b):
            a, b = self.rep(a), self.rep(b)
            if a != b:
                lo, hi = min(a, b), max(a, b)
                self.p[hi] = lo
                self.alive -= 1
                queue.append(hi)

        merge(alpha, beta)
        i = 0
        while i < len(queue):
            gamma = queue[i]
            i += 1
            for col in range(2 * self.rank):
                delta = self.table[gamma][col]
                if delta is None:
                    continue
                self.table[delta][self.inv_col(col)] = None
                mu, nu = self.rep(gamma), self.rep(delta)
                if self.table[mu][col] is not None:
                    merge(nu, self.table[mu][col])
                elif self.table[nu][self.inv_col(col)] is not None:
                    merge(mu, self.table[nu][self.inv_col(col)])
                else:
                    self.table[mu][col] = nu
                    self.table[nu][self.inv_col(col)] = mu

    def scan_and_fill(self, alpha, word):
        if not word:
            return
        f, i = alpha, 0
        b, j = alpha, len(word) - 1
        while True:
            while i <= j and self.table[f][self.col(word[i])] is not None:
                f = self.table[f][self.col(word[i])]
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                return
            while j >= i and self.table[b][self.col(-word[j])] is not None:
                b = self.table[b][self.col(-word[j])]
                j -= 1
            if j < i:
                self.coincidence(f, b)
                return
            if j == i:
                self.table[f][self.col(word[i])] = b
                self.table[b][self.col(-word[i])] = f
                return
            self.define(f, self.col(word[i]))

    def is_alive(self, c):
        return self.p[c] == c


def enumerate_cosets(
    pres: Presentation,
    spec: SubgroupSpec | None = None,
    cap: int = DEFAULT_COSET_CAP,
    provenance: str = "enumerate",
) -> CosetTable:
    """Todd-Coxeter coset enumeration over a finitely presented group.

    Raises IndexBoundExceeded if the table does not close within ``cap``
    live cosets; on success the returned table is verified against all
    CosetTable invariants, so it is never silently wrong.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if spec is None:
        spec = SubgroupSpec(generators=(), name="trivial")
    spec.validate_over(pres)
    relators = list(pres.relators)
    point_words = list(spec.generators)
    if spec.normal:
        # Normal closure: the generating words hold at every coset.
        relators += point_words
        point_words = []

    tc = _TC(pres.rank, cap)
    for w in point_words:
        tc.scan_and_fill(0, w)
    alpha = 0
    while alpha < len(tc.table):
        if tc.is_alive(alpha):
            for w in relators:
                tc.scan_and_fill(alpha, w)
                if not tc.is_alive(alpha):
                    break
            if tc.is_alive(alpha):
                for col in range(2 * pres.rank):
                    if tc.is_alive(alpha) and tc.table[alpha][col] is None:
                        tc.define(alpha, col)
        alpha += 1

    live = [c for c in range(len(tc.table)) if tc.is_alive(c)]
    number = {c: i for i, c in enumerate(live)}
    perms = []
    for g in range(pres.rank):
        perm = []
        for c in live:
            d = tc.table[c][2 * g]
            if d is None:
                raise InternalInvariantError("incomplete table after HLT loop")
            perm.append(number[tc.rep(d)])
        perms.append(tuple(perm))
    table = CosetTable(pres=pres, perms=tuple(perms), spec=spec, provenance=provenance)
    table = canonicalize(table)
    problems = validate(table)
    if problems:
        raise InternalInvariantError(f"enumeration produced an invalid table: {problems}")
    return table


# ---------------------------------------------------------------------------
# Schreier transversals (shared by low_index, intersect and normal_core)
# ---------------------------------------------------------------------------


def schreier_transversal(table: CosetTable):
    """BFS coset representatives and spanning tree.

    Returns (words, parent) where words[i] is the shortest-lex representative
    carrying coset 0 to i and parent[i] = (parent coset, letter) for i > 0.
    """
    n = table.index
    words = [None] * n
    parent = [None] * n
    words[0] = ()
    order = [0]
    letters = _letters(table.pres.rank)
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        for letter in letters:
            d = table.letter_perm(letter)[c]
            if words[d] is None:
                words[d] = words[c] + (letter,)
                parent[d] = (c, letter)
                order.append(d)
    return words, parent


def schreier_generator_words(table: CosetTable):
    """Nontrivial Schreier generators of the subgroup of the table.

    One word t_c g t_{c.g}^-1 per non-tree pair (coset c, generator g).
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
    for c in range(table.index):
        for g in range(1, table.pres.rank + 1):
            d = table.perms[g - 1][c]
            if (c, g, d) in tree_edges:
                continue
            w = free_reduce(words[c] + (g,) + invert(words[d]))
            gens.append(w)
    return gens


def _spec_from_table(table: CosetTable, name="H") -> SubgroupSpec:
    return SubgroupSpec(generators=tuple(schreier_generator_words(table)), name=name)


def with_schreier_spec(table: CosetTable, name="H") -> CosetTable:
    return CosetTable(
        pres=table.pres,
        perms=table.perms,
        spec=_spec_from_table(table, name),
        provenance=table.provenance,
    )


# ---------------------------------------------------------------------------
# Low-index subgroup search
# ---------------------------------------------------------------------------


def low_index(pres: Presentation, n_max: int, node_cap: int = DEFAULT_NODE_CAP):
    """All subgroups of index <= n_max, one coset table each.

    Subgroups correspond bijectively to transitive pointed actions with
    canonical (first-touch) coset numbering, so the backtracking emits every
    subgroup exactly once -- not conjugacy representatives.  Output order is
    deterministic: ascending index, then lexicographic table.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    found = []
    budget = [0, node_cap, found]
    for k in range(1, n_max + 1):
        tables = []
        _search_index(pres, k, tables, budget)
        tables.sort()
        for perms in tables:
            t = CosetTable(pres=pres, perms=perms, provenance=f"low_index({k})")
            found.append(with_schreier_spec(t))
    return found


def _search_index(pres, k, out, budget):
    rank = pres.rank
    relators = pres.relators
    # fwd[g][c] / bwd[g][c]: action of generator g and its inverse.
    fwd = [[None] * k for _ in range(rank)]
    bwd = [[None] * k for _ in range(rank)]
    slots = [(c, g) for c in range(k) for g in range(rank)]

    def relators_ok():
        # Prune on any fully-determined relator trace that fails to close.
        for c in range(k):
            for w in relators:
                d = c
                for letter in w:
                    d = fwd[letter - 1][d] if letter > 0 else bwd[-letter - 1][d]
                    if d is None:
                        break
                else:
                    if d != c:
                        return False
        return True

    def extend(pos, used):
        budget[0] += 1
        if budget[0] > budget[1]:
            raise LowIndexBudget(budget[1], list(budget[2]))
        if pos == len(slots):
            if used == k and relators_ok():
                out.append(tuple(tuple(row) for row in fwd))
            return
        c, g = slots[pos]
        if c >= used:
            # Rows 0..used-1 are closed under the action, so the table can
            # never become transitive on k points: dead branch.
            return
        if fwd[g][c] is not None:
            extend(pos + 1, used)
            return
        limit = min(used + 1, k)
        for d in range(limit):
            if bwd[g][d] is not None:
                continue
            fwd[g][c] = d
            bwd[g][d] = c
            new_used = max(used, d + 1)
            if relators_ok():
                extend(pos + 1, new_used)
            fwd[g][c] = None
            bwd[g][d] = None

    extend(0, 1)


# ---------------------------------------------------------------------------
# Intersection and normal core
# ---------------------------------------------------------------------------


def intersect(t1: CosetTable, t2: CosetTable) -> CosetTable:
    """Table of H1 n H2: the component of (0, 0) in the product action."""
    if t1.pres != t2.pres:
        raise ValueError("tables must share an ambient presentation")
    letters = _letters(t1.pres.rank)
    start = (0, 0)
    number = {start: 0}
    order = [start]
    i = 0
    while i < len(order):
        a, b = order[i]
        i += 1
        for letter in letters:
            nxt = (t1.letter_perm(letter)[a], t2.letter_perm(letter)[b])
            if nxt not in number:
                number[nxt] = len(order)
                order.append(nxt)
    perms = tuple(
        tuple(number[(t1.perms[g][a], t2.perms[g][b])] for a, b in order)
        for g in range(t1.pres.rank)
    )
    t = CosetTable(pres=t1.pres, perms=perms, provenance="intersect")
    return with_schreier_spec(canonicalize(t))


def normal_core(table: CosetTable, image_cap: int = DEFAULT_IMAGE_CAP) -> CosetTable:
    """Table of the core of H: the regular representation of the image group.

    The image of the generators in Sym(index) is closed up by BFS; the core
    index equals the image order, which can reach index!, hence the cap.
    """
    identity = tuple(range(table.index))
    number = {identity: 0}
    elements = [identity]
    i = 0
    while i < len(elements):
        e = elements[i]
        i += 1
        for perm in table.perms:
            f = tuple(perm[x] for x in e)
            if f not in number:
                if len(elements) >= image_cap:
                    raise ImageTooLarge(image_cap)
                number[f] = len(elements)
                elements.append(f)
    perms = tuple(
        tuple(number[tuple(perm[x] for x in e)] for e in elements)
        for perm in table.perms
    )
    t = CosetTable(pres=table.pres, perms=perms, provenance="normal_core")
    return with_schreier_spec(canonicalize(t))


def is_normal(table: CosetTable) -> bool:
    """H is normal iff its core has the same index."""
    letters = _letters(table.pres.rank)
    # Equivalent cheap test: the stabilizer of every coset contains the
    # stabilizer of 0 on Schreier generators, i.e. every Schreier generator
    # of H fixes every coset it is conjugated into.  Simpler: compare orbits
    # of the point stabilizer -- here we just check |image| == index.
    identity = tuple(range(table.index))
    seen = {identity}
    queue = [identity]
    while queue:
        e = queue.pop()
        for perm in table.perms:
            f = tuple(perm[x] for x in e)
            if f not in seen:
                if len(seen) > table.index:
                    return False
                seen.add(f)
                queue.append(f)
    return len(seen) == table.index


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(table: CosetTable):
    """Audit all CosetTable invariants; empty list means the table is valid."""
    problems = []
    n = table.index
    for g, perm in enumerate(table.perms):
        if sorted(perm) != list(range(n)):
            problems.append(f"generator {g}: action is not a bijection")
    if not problems:
        seen = {0}
        queue = [0]
        letters = _letters(table.pres.rank)
        while queue:
            c = queue.pop()
            for letter in letters:
                d = table.letter_perm(letter)[c]
                if d not in seen:
                    seen.add(d)
                    queue.append(d)
        if len(seen) != n:
            problems.append("action is not transitive on cosets")
        for r_i, relator in enumerate(table.pres.relators):
            if any(table.apply(relator, c) != c for c in range(n)):
                problems.append(f"relator {r_i} does not act as the identity")
        if table.spec is not None and not table.spec.normal:
            for w in table.spec.generators:
                if not table.fixes_base(w):
                    problems.append(f"subgroup generator {w} does not fix coset 0")
    return problems


def coset_action(table: CosetTable, word: Word):
    """Permutation of cosets induced by a word."""
    return table.word_perm(free_reduce(word))
