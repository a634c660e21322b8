"""Covering towers for free products A * Z with a prescribed fixed-vertex
ratio.

A finite cover of the wedge realizing A * Z is exactly a transitive action:
permutations of the A-generators whose orbits all have size 1 or |A|, plus
one free permutation sigma for the Z factor.  Edges of the covering graph
are the n points, vertices are the A-orbits.  The tower construction keeps
the fixed-vertex fraction mu exactly constant while multiplying the point
count and (by a seeded search over lift twists valued in small dihedral
2-groups) strictly growing the radius on which the universal tree maps
injectively into the cover.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .cosets import CosetTable, enumerate_cosets, with_schreier_spec
from .errors import BudgetError
from .homology import DEFAULT_PRIMES, homology_report
from .subgroups import rank_bounds, subgroup_homology
from .words import Presentation, SubgroupSpec, free_reduce

DEFAULT_GROUP_ORDER_CAP = 1_000
DEFAULT_RADIUS_CAP = 64
DEFAULT_SEARCH_RESTARTS = 6
DEFAULT_SEARCH_MOVES = 300_000


# ---------------------------------------------------------------------------
# Finite group data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteGroupData:
    """Regular representation and invariants of a finite presented group."""

    pres: Presentation
    table: CosetTable  # action on the |A| elements, identity = 0
    order: int
    rank: int  # minimal generating-set size, found by brute force
    b1p: dict
    element_words: tuple  # word carrying element 0 to each element id

    def multiply(self, x, y):
        return self.table.apply(self.element_words[y], x)

    def inverse(self, x):
        target = 0
        for y in range(self.order):
            if self.multiply(x, y) == 0:
                target = y
                break
        return target


def _brute_force_rank(table):
    """Smallest k such that some k of the elements generate; order <= cap
    keeps this a desk-size search."""
    n = table.index
    if n == 1:
        return 0
    words, _ = _element_words(table)

    def closure(seed_ids):
        seen = {0}
        frontier = [0]
        while frontier:
            x = frontier.pop()
            for s in seed_ids:
                y = table.apply(words[s], x)
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        return len(seen)

    from itertools import combinations

    for k in range(1, n + 1):
        for combo in combinations(range(1, n), k):
            if closure(combo) == n:
                return k
    raise AssertionError("unreachable: the full element set generates")


def _element_words(table):
    from .cosets import schreier_transversal

    return schreier_transversal(table)


def finite_group_data(pres: Presentation, order_cap: int = DEFAULT_GROUP_ORDER_CAP):
    """Enumerate a finite presented group and compute |A|, d(A), b1p(A)."""
    trivial = SubgroupSpec(generators=(), name="1")
    table = enumerate_cosets(pres, trivial, cap=order_cap, provenance="regular rep")
    report = homology_report(pres)
    if report.beta1 != 0:
        raise ValueError("the base group is infinite (beta1 > 0)")
    words, _ = _element_words(table)
    return FiniteGroupData(
        pres=pres,
        table=table,
        order=table.index,
        rank=_brute_force_rank(table),
        b1p=dict(report.b1p),
        element_words=tuple(words),
    )


# ---------------------------------------------------------------------------
# Cover graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverGraph:
    """Transitive (A, sigma)-action on n points; base point 0.

    Points are the edges of the covering graph, A-orbits its vertices; every
    A-orbit has size 1 or |A|.
    """

    group: FiniteGroupData
    n: int
    a_perms: tuple  # one permutation per generator of A
    sigma: tuple
    provenance: str = field(default="", compare=False)

    def orbits(self):
        """A-orbits as a list of sorted tuples, ordered by minimum point."""
        seen = [False] * self.n
        out = []
        for x in range(self.n):
            if seen[x]:
                continue
            orbit = {x}
            frontier = [x]
            while frontier:
                y = frontier.pop()
                for p in self.a_perms:
                    z = p[y]
                    if z not in orbit:
                        orbit.add(z)
                        frontier.append(z)
            for y in orbit:
                seen[y] = True
            out.append(tuple(sorted(orbit)))
        return out

    def orbit_ids(self):
        ids = [None] * self.n
        for i, orbit in enumerate(self.orbits()):
            for x in orbit:
                ids[x] = i
        return ids

    @property
    def num_vertices(self):
        return len(self.orbits())

    @property
    def mu(self):
        orbits = self.orbits()
        fixed = sum(1 for o in orbits if len(o) == 1)
        return Fraction(fixed, len(orbits))

    def check_invariants(self):
        a = self.group.order
        for orbit in self.orbits():
            if len(orbit) not in (1, a):
                raise ValueError(f"A-orbit of size {len(orbit)}, expected 1 or {a}")
        # transitivity of <A, sigma>
        seen = {0}
        frontier = [0]
        perms = list(self.a_perms) + [self.sigma]
        inv_sigma = _invert(self.sigma)
        perms.append(inv_sigma)
        while frontier:
            x = frontier.pop()
            for p in perms:
                y = p[x]
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        if len(seen) != self.n:
            raise ValueError("the (A, sigma)-action is not transitive")
        # A-action respects the relators
        for relator in self.group.pres.relators:
            for x in range(self.n):
                y = x
                for letter in relator:
                    p = self.a_perms[abs(letter) - 1]
                    y = p[y] if letter > 0 else _invert(p)[y]
                if y != x:
                    raise ValueError("A-action violates a relator")


def _invert(p):
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def ambient_presentation(a_pres: Presentation, stable: str = "t") -> Presentation:
    """Presentation of A * Z: A's generators and relators plus a free letter."""
    if stable in a_pres.generators:
        raise ValueError(f"generator name {stable!r} already used")
    return Presentation(
        generators=a_pres.generators + (stable,), relators=a_pres.relators
    )


def cover_table(cover: CoverGraph, ambient: Presentation) -> CosetTable:
    """The cover as a coset table for A * Z (points = cosets of the
    base-point stabilizer)."""
    if len(ambient.generators) != len(cover.a_perms) + 1:
        raise ValueError("ambient presentation does not match the cover")
    table = CosetTable(
        pres=ambient,
        perms=cover.a_perms + (cover.sigma,),
        provenance=cover.provenance,
    )
    return with_schreier_spec(table)


def subgroup_from_cover(cover: CoverGraph, ambient: Presentation) -> SubgroupSpec:
    """Schreier generators of the base-point stabilizer; the index of the
    subgroup they generate is re-verified to equal n by enumeration."""
    spec = cover_table(cover, ambient).spec
    check = enumerate_cosets(ambient, spec, provenance="cover stabilizer check")
    if check.index != cover.n:
        raise AssertionError(
            f"stabilizer generators give index {check.index}, expected {cover.n}"
        )
    return spec


# ---------------------------------------------------------------------------
# Injectivity radius
# ---------------------------------------------------------------------------


def injectivity_radius(
    cover: CoverGraph, ambient: Presentation = None, cap: int = DEFAULT_RADIUS_CAP
) -> int:
    """Largest k such that the radius-k vertex ball around the base vertex
    of the universal covering tree maps injectively into the covering graph.

    The covering graph has the A-orbits as vertices and one edge per point x
    (from the orbit of x to the orbit of x.sigma); its universal cover is
    explored as non-backtracking edge walks from the base orbit.  Returns
    cap when the ball is still injective there (radius at least cap).
    """
    radius, _, _ = _radius_with_witness(cover, cap)
    return radius


def _radius_with_witness(cover: CoverGraph, cap: int = DEFAULT_RADIUS_CAP):
    """(radius, walk1, walk2): the walks are the earliest pair of distinct
    non-backtracking edge paths from the base orbit that land on the same
    vertex, or None when the cap was reached first."""
    orbit_ids = cover.orbit_ids()
    sigma = cover.sigma
    # directed edge (x, +1): orbit(x) -> orbit(sigma(x)); (x, -1) reversed
    out_edges = {}
    for x in range(cover.n):
        out_edges.setdefault(orbit_ids[x], []).append((x, 1))
        out_edges.setdefault(orbit_ids[sigma[x]], []).append((x, -1))

    def head(edge):
        x, d = edge
        return orbit_ids[sigma[x]] if d == 1 else orbit_ids[x]

    base = orbit_ids[0]
    paths = {base: ()}
    frontier = [(base, None)]  # (vertex image, edge we arrived by)
    depth = 0
    while frontier and depth < cap:
        nxt = []
        for vertex, arrived in frontier:
            for edge in out_edges.get(vertex, ()):
                if arrived is not None and edge == (arrived[0], -arrived[1]):
                    continue  # backtracking
                img = head(edge)
                new_path = paths[vertex] + (edge,)
                if img in paths:
                    return depth, paths[img], new_path
                paths[img] = new_path
                nxt.append((img, edge))
        frontier = nxt
        depth += 1
    return depth, None, None


# ---------------------------------------------------------------------------
# Tower construction
# ---------------------------------------------------------------------------


def _base_cover(
    group,
    mu: Fraction,
    scale: int,
    point_cap: int = 5_000,
    rng_seed: int = 0,
    route_tries: int = 200,
    chain_len: int = None,
):
    """Level-0 layout: `regular` blocks carrying the regular representation,
    then fixed points.

    sigma is a single long cycle routed to keep the graph sparse: regular
    points are visited round-robin across the blocks (so consecutive regular
    points lie in different orbits whenever there is more than one block)
    and the fixed points are spread between them as evenly as possible,
    forming chains of degree-2 vertices.
    """
    a = group.order
    fixed = mu.numerator * scale
    regular = (mu.denominator - mu.numerator) * scale
    if regular == 0:
        raise ValueError("mu = 1 is not realizable by finite covers of this kind")
    n = fixed + a * regular
    if n > point_cap:
        raise ValueError(
            f"mu = {mu} at scale {scale} needs {n} points, over the cap {point_cap}; "
            f"the minimal point count for this mu is {mu.numerator + a * (mu.denominator - mu.numerator)}"
        )
    # fixed points first (so the base point 0 is fixed whenever mu > 0),
    # then the regular blocks
    a_perms = []
    for g in range(group.pres.rank):
        perm = list(range(n))
        for block in range(regular):
            for e in range(a):
                x = fixed + block * a + e
                perm[x] = fixed + block * a + group.table.perms[g][e]
        a_perms.append(tuple(perm))
    reg_points = list(range(fixed, n))
    fix_points = list(range(fixed))

    def cover_for(route):
        sigma = [0] * n
        for i, x in enumerate(route):
            sigma[x] = route[(i + 1) % n]
        return CoverGraph(
            group=group,
            n=n,
            a_perms=tuple(a_perms),
            sigma=tuple(sigma),
            provenance=f"tower level 0 (mu={mu}, scale={scale})",
        )

    def edge_profile(cover):
        """(max multiplicity, loop count) of the covering graph."""
        ids = cover.orbit_ids()
        counts = {}
        loops = 0
        for x in range(n):
            u, v = ids[x], ids[cover.sigma[x]]
            if u == v:
                loops += 1
            key = (min(u, v), max(u, v))
            counts[key] = counts.get(key, 0) + 1
        return max(counts.values()), loops

    # Seeded route search.  Loops and edges of multiplicity 3+ can never be
    # separated by the 2-fold lifts, so they would freeze the injectivity
    # radius for the whole tower; insist on a clean profile, then keep the
    # route with the largest radius.
    # Half the fixed points form one chain of degree-2 vertices with the base
    # point at its center, so balls around the base grow linearly instead of
    # branching at a hub; the rest are spread along the regular route to thin
    # out hub-to-hub adjacencies.
    if chain_len is None:
        chain_len = fixed if regular == 0 else max(fixed // 2, min(fixed, 1))
    chain_len = min(chain_len, fixed)
    spread = [x for x in fix_points if x != 0][chain_len - 1 if chain_len else 0 :]
    chain_rest = [x for x in fix_points if x != 0][: chain_len - 1] if chain_len else []
    half = len(chain_rest) // 2
    base_chain = chain_rest[:half] + [0] + chain_rest[half:] if chain_len else []
    # Token plan: the base chain, then regular slots with the remaining fixed
    # points spread among them as evenly as possible.
    tokens = ["F0"] * len(base_chain)
    credit = Fraction(0)
    per_slot = Fraction(len(spread), len(reg_points)) if reg_points else Fraction(0)
    planned = 0
    for _ in reg_points:
        tokens.append("R")
        credit += per_slot
        while credit >= 1 and planned < len(spread):
            tokens.append("F")
            planned += 1
            credit -= 1
    tokens.extend(["F"] * (len(spread) - planned))

    def block_of(x):
        return (x - fixed) // a

    rng = random.Random(rng_seed)
    best = None
    for attempt in range(route_tries):
        # greedy assignment: never put two points of the same hub next to
        # each other and never use a direct hub pair more than twice
        remaining = {}
        for x in reg_points:
            remaining.setdefault(block_of(x), []).append(x)
        pair_count = {}
        route = []
        prev_hub = None
        fi = 0
        ci = 0
        ok = True
        for token in tokens:
            if token in ("F0", "F"):
                if token == "F0":
                    route.append(base_chain[ci])
                    ci += 1
                else:
                    route.append(spread[fi])
                    fi += 1
                prev_hub = None
                continue
            candidates = [
                b
                for b, pts in remaining.items()
                if pts
                and b != prev_hub
                and (
                    prev_hub is None
                    or pair_count.get((min(b, prev_hub), max(b, prev_hub)), 0) < 2
                )
            ]
            if not candidates and regular == 1:
                candidates = [b for b, pts in remaining.items() if pts]
            if not candidates:
                ok = False
                break
            b = rng.choice(sorted(candidates))
            x = remaining[b].pop()
            route.append(x)
            if prev_hub is not None:
                key = (min(b, prev_hub), max(b, prev_hub))
                pair_count[key] = pair_count.get(key, 0) + 1
            prev_hub = b
        if not ok:
            continue
        cover = cover_for(route)
        multiplicity, loops = edge_profile(cover)
        clean = loops == 0 and multiplicity <= 2
        radius = injectivity_radius(cover)
        # prefer clean routes with a small starting radius: the lifts can
        # only push the radius up, so headroom below the structural ceiling
        # is what makes a deep tower possible
        key = (clean, -radius)
        if best is None or key > best[0]:
            best = (key, cover)
    if best is None:
        raise ValueError(
            f"no route satisfying the hub constraints found for mu={mu}, "
            f"scale={scale}; try a larger scale"
        )
    (clean, _), cover = best
    if not clean and regular > 1:
        raise ValueError(
            f"no loop-free route with edge multiplicity <= 2 found for mu={mu}, "
            f"scale={scale}; try a larger scale"
        )
    return cover


def _dihedral_mul(g, h, k):
    """Dihedral group of order k (k a power of 2, k >= 2) on labels
    b + 2a for the element r^a f^b; reducing a label mod a smaller power
    of 2 is then exactly the quotient map between the dihedral groups,
    which is what lets one twist vector serve every level at once."""
    half = k >> 1
    b, a = g & 1, g >> 1
    d, c = h & 1, h >> 1
    return (b ^ d) + 2 * ((a + (-c if b else c)) % half)


def _dihedral_inv(g, k):
    half = k >> 1
    if g & 1:
        return g  # reflections are involutions
    return 2 * ((-(g >> 1)) % half)


def _copy_orders(base, r0, depth):
    """Copy-group orders per level: 2, 8, 16, ... by default, bumped per
    level until a vertex's walk count fits into the copy group (pigeonhole:
    more walks than group elements in a window is a guaranteed collision).
    The jump from 2 to 8 skips the abelian groups of order 4; level 2 needs
    a nonabelian copy group, since commuting-cycle walk pairs with equal
    signed point multisets collide in every abelian lift."""
    per_vertex = {}
    for v, _, ln in _nb_walks(base, r0 + depth):
        counts = per_vertex.setdefault(v, [0] * (r0 + depth + 1))
        counts[ln] += 1
    orders = []
    k = 1
    bumped = False
    for j in range(1, depth + 1):
        default = 2 if j == 1 else 2 ** (j + 1)
        need = max(sum(counts[: r0 + j + 1]) for counts in per_vertex.values())
        k = max(2 * k, default, 1 << (need - 1).bit_length())
        bumped = bumped or k > default
        orders.append(k)
    return orders, bumped


def _nb_walks(cover, maxlen):
    """All non-backtracking edge walks from the base vertex of length up to
    maxlen, as (endpoint vertex, path of (point, direction), length)."""
    ids = cover.orbit_ids()
    sigma = cover.sigma
    out = {}
    for x in range(cover.n):
        out.setdefault(ids[x], []).append((x, 1))
        out.setdefault(ids[sigma[x]], []).append((x, -1))

    def head(edge):
        x, d = edge
        return ids[sigma[x]] if d == 1 else ids[x]

    base = ids[0]
    walks = [(base, (), 0)]
    frontier = [(base, None, ())]
    for length in range(1, maxlen + 1):
        nxt = []
        for vertex, arrived, path in frontier:
            for edge in out.get(vertex, ()):
                if arrived is not None and edge == (arrived[0], -arrived[1]):
                    continue
                new_path = path + (edge,)
                nxt.append((head(edge), edge, new_path))
                walks.append((head(edge), new_path, length))
        frontier = nxt
    return walks


class _TwistSearch:
    """Seeded annealing search for one twist vector giving every level of the
    tower its exact radius.

    A walk in the level-j lift ends at (base vertex, g mod k_j) where g is
    the ordered product of the twist labels along the walk (inverted against
    the direction).  The radius of level j is therefore read off the base
    walks alone: it is at least r0 + j iff no two walks of length <= r0 + j
    agree in (vertex, product mod k_j), and at most r0 + j iff some pair of
    length <= r0 + j + 1 does.  One constraint table per such window pins the
    radii to exactly r0, r0 + 1, ..., r0 + depth - 1, >= r0 + depth."""

    def __init__(self, base, r0, depth, orders):
        self.base = base
        self.r0 = r0
        self.depth = depth
        self.orders = orders
        self.n0 = base.n
        kmax = orders[-1]
        self.kmax = kmax
        self.mul = [[_dihedral_mul(g, h, kmax) for h in range(kmax)] for g in range(kmax)]
        self.inv = [_dihedral_inv(g, kmax) for g in range(kmax)]
        self.walks = _nb_walks(base, r0 + depth)
        self.by_point = {}
        for i, (_, path, _) in enumerate(self.walks):
            for x, _ in path:
                self.by_point.setdefault(x, set()).add(i)
        self.points = sorted(self.by_point)
        self.specs = [(r0 + j, orders[j - 1], True) for j in range(1, depth + 1)]
        self.specs += [(r0 + j + 1, orders[j - 1], False) for j in range(1, depth)]

    def feasible(self):
        """Cheap necessary conditions on the layout, checked before burning
        the annealing budget.  Capacity: a vertex carrying more than k_j
        walks in the level-j window collides by pigeonhole whatever the
        twists.  Parity: mod 2 the walk products are linear in the twist
        reflection bits, so the level-1 constraints form a GF(2) system;
        it must be solvable, and when a level-1 ceiling is demanded some
        fresh length-(r0+2) pair must be free to collide under it."""
        for lim, k, forbid in self.specs:
            if not forbid:
                continue
            per_vertex = {}
            for v, _, ln in self.walks:
                if ln <= lim:
                    per_vertex[v] = per_vertex.get(v, 0) + 1
            worst = max(per_vertex.values())
            if worst > k:
                return False, f"a vertex carries {worst} walks in window {lim}, over {k}"

        def pair_row(i, j):
            row = [0] * self.n0
            for x, _ in self.walks[i][1] + self.walks[j][1]:
                row[x] ^= 1
            return row

        by_vertex = {}
        for i, (v, _, ln) in enumerate(self.walks):
            by_vertex.setdefault(v, []).append(i)
        rows, rhs = [], []
        for members in by_vertex.values():
            inner = [i for i in members if self.walks[i][2] <= self.r0 + 1]
            for a in range(len(inner)):
                for b in range(a + 1, len(inner)):
                    rows.append(pair_row(inner[a], inner[b]))
                    rhs.append(1)
        # echelonize the forced-distinct system once
        aug = [row + [r] for row, r in zip(rows, rhs)]
        pivots = []
        rank = 0
        for col in range(self.n0):
            pivot = next((i for i in range(rank, len(aug)) if aug[i][col]), None)
            if pivot is None:
                continue
            aug[rank], aug[pivot] = aug[pivot], aug[rank]
            for i in range(len(aug)):
                if i != rank and aug[i][col]:
                    aug[i] = [p ^ q for p, q in zip(aug[i], aug[rank])]
            pivots.append(col)
            rank += 1
        if any(row[self.n0] for row in aug[rank:]):
            return False, "two walks share every point mod 2, forcing a collision"
        if self.depth < 2:
            return True, ""
        # level-1 ceiling: some pair entering at length r0 + 2 must not be
        # forced odd by the system above
        for members in by_vertex.values():
            window = [i for i in members if self.walks[i][2] <= self.r0 + 2]
            for a in range(len(window)):
                for b in range(a + 1, len(window)):
                    i, j = window[a], window[b]
                    if max(self.walks[i][2], self.walks[j][2]) != self.r0 + 2:
                        continue
                    row = pair_row(i, j)
                    parity = 0
                    for t, col in enumerate(pivots):
                        if row[col]:
                            row = [p ^ q for p, q in zip(row, aug[t][: self.n0])]
                            parity ^= aug[t][self.n0]
                    if any(row) or parity == 0:
                        return True, ""
        return False, "every fresh pair in the ceiling window is forced apart mod 2"

    def _products(self, twists):
        prods = []
        for _, path, _ in self.walks:
            g = 0
            for x, d in path:
                g = self.mul[g][twists[x]] if d == 1 else self.mul[g][self.inv[twists[x]]]
            prods.append(g)
        return prods

    def _tables(self, prods):
        tables, totals = [], []
        for lim, k, _ in self.specs:
            counter = {}
            for i, (v, _, ln) in enumerate(self.walks):
                if ln <= lim:
                    key = (v, prods[i] % k)
                    counter[key] = counter.get(key, 0) + 1
            tables.append(counter)
            totals.append(sum(m * (m - 1) // 2 for m in counter.values()))
        return tables, totals

    def _objective(self, totals):
        obj = 0
        for (_, _, forbid), total in zip(self.specs, totals):
            obj += total if forbid else (1 if total == 0 else 0)
        return obj

    def _change(self, twists, x, value, prods, tables, totals):
        twists[x] = value
        for i in self.by_point[x]:
            v, path, ln = self.walks[i]
            g = 0
            for y, d in path:
                g = self.mul[g][twists[y]] if d == 1 else self.mul[g][self.inv[twists[y]]]
            old = prods[i]
            if g == old:
                continue
            for si, (lim, k, _) in enumerate(self.specs):
                if ln > lim:
                    continue
                key_old, key_new = (v, old % k), (v, g % k)
                if key_old == key_new:
                    continue
                counter = tables[si]
                m = counter[key_old]
                totals[si] -= m - 1
                if m == 1:
                    del counter[key_old]
                else:
                    counter[key_old] = m - 1
                m = counter.get(key_new, 0)
                totals[si] += m
                counter[key_new] = m + 1
            prods[i] = g

    def _conflict_point(self, prods, tables, totals, rng):
        unmet = [
            si
            for si, (_, _, forbid) in enumerate(self.specs)
            if (totals[si] > 0) == forbid
        ]
        if not unmet:
            return None
        si = rng.choice(unmet)
        lim, k, forbid = self.specs[si]
        if forbid:
            bad = [key for key, m in tables[si].items() if m > 1]
            key = rng.choice(bad)
            members = [
                i
                for i, (v, _, ln) in enumerate(self.walks)
                if ln <= lim and (v, prods[i] % k) == key
            ]
        else:
            members = [i for i, (_, _, ln) in enumerate(self.walks) if 0 < ln <= lim]
        path = self.walks[rng.choice(members)][1]
        if not path:
            return None
        return rng.choice(path)[0]

    def solve(self, rng, restarts=DEFAULT_SEARCH_RESTARTS, moves=DEFAULT_SEARCH_MOVES):
        """Min-conflicts annealing over twist vectors; the budget is counted
        in moves, not wall time, so runs are reproducible."""
        for _ in range(restarts):
            twists = [rng.randrange(self.kmax) for _ in range(self.n0)]
            prods = self._products(twists)
            tables, totals = self._tables(prods)
            obj = self._objective(totals)
            temperature = 3.0
            for _ in range(moves):
                if obj == 0:
                    return twists
                x = self._conflict_point(prods, tables, totals, rng)
                if x is None:
                    break
                old = twists[x]
                value = rng.randrange(self.kmax)
                if value == old:
                    continue
                self._change(twists, x, value, prods, tables, totals)
                new_obj = self._objective(totals)
                delta = new_obj - obj
                if delta <= 0 or rng.random() < math.exp(-delta / temperature):
                    obj = new_obj
                else:
                    self._change(twists, x, old, prods, tables, totals)
                temperature = max(0.15, temperature * 0.99995)
            if obj == 0:
                return twists
        return None


def _lift(base, twists, level, k):
    """Degree-k cover of the level-0 cover: points x + c*n0 for copy labels
    c in the order-k dihedral group; the A-action acts blockwise and sigma
    right-multiplies the copy label by the twist of the base point."""
    n0 = base.n
    n = n0 * k
    a_perms = tuple(
        tuple(p[x % n0] + (x // n0) * n0 for x in range(n)) for p in base.a_perms
    )
    sigma = [0] * n
    for x in range(n):
        c = x // n0
        t = twists[x % n0] % k
        sigma[x] = base.sigma[x % n0] + _dihedral_mul(c, t, k) * n0
    return CoverGraph(
        group=base.group,
        n=n,
        a_perms=a_perms,
        sigma=tuple(sigma),
        provenance=f"tower level {level}",
    )


def check_projection(upper: CoverGraph, lower: CoverGraph):
    """Block-map certificate: reducing points mod lower.n commutes with both
    actions, so the upper cover factors through the lower one."""
    n = lower.n
    if upper.n % n != 0:
        raise ValueError("point counts do not nest")
    for pu, pl in zip(upper.a_perms, lower.a_perms):
        for x in range(upper.n):
            if pu[x] % n != pl[x % n]:
                raise ValueError("A-action does not project")
    for x in range(upper.n):
        if upper.sigma[x] % n != lower.sigma[x % n]:
            raise ValueError("sigma does not project")


def build_tower(
    a_pres: Presentation,
    mu_target,
    depth: int,
    scale: int = 1,
    seed: int = 0,
    search_restarts: int = DEFAULT_SEARCH_RESTARTS,
    search_moves: int = DEFAULT_SEARCH_MOVES,
    radius_cap: int = DEFAULT_RADIUS_CAP,
):
    """Nested covers with exactly constant fixed-vertex ratio mu and strictly
    increasing injectivity radius.

    All levels are lifts of one level-0 cover: level j has n0 * k_j points
    for the copy-group orders k_j of _copy_orders, and one twist vector
    drives every level, so the levels project onto each other by reducing
    labels mod k_j (check_projection certifies this).  The layout scan tries
    a few degree-2 chain lengths and route seeds, keeps layouts passing the
    feasibility screen, and anneals for twists pinning the radii to
    r0, r0 + 1, ..., exactly.  Raises BudgetError when no scanned layout
    admits strictly growing radii (small scales genuinely do not: a loop or
    a triple edge in the covering graph freezes the radius in every lift).
    """
    mu = Fraction(mu_target)
    if not 0 <= mu < 1:
        raise ValueError("mu must satisfy 0 <= mu < 1")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    group = finite_group_data(a_pres)
    attempts = []
    seen = set()
    candidates = []
    for chain_len in (12, 14, None, 8):
        for route_seed in range(4):
            try:
                base = _base_cover(
                    group, mu, scale, rng_seed=seed + route_seed, chain_len=chain_len
                )
            except ValueError as exc:
                attempts.append(str(exc))
                continue
            key = (base.sigma, base.a_perms)
            if key in seen:
                continue
            seen.add(key)
            base.check_invariants()
            if depth == 0:
                return [base]
            r0 = injectivity_radius(base, cap=radius_cap)
            orders, bumped = _copy_orders(base, r0, depth)
            candidates.append((bumped, chain_len, route_seed, base, r0, orders))
    # layouts whose walk counts fit the default copy groups come first: they
    # give the smallest point counts per level
    candidates.sort(key=lambda c: c[0])
    for bumped, chain_len, route_seed, base, r0, orders in candidates:
        search = _TwistSearch(base, r0, depth, orders)
        ok, why = search.feasible()
        if not ok:
            attempts.append(f"layout ({chain_len}, {route_seed}): {why}")
            continue
        rng = random.Random(f"{seed}:{chain_len}:{route_seed}")
        twists = search.solve(rng, restarts=search_restarts, moves=search_moves)
        if twists is None:
            attempts.append(
                f"layout ({chain_len}, {route_seed}): search budget exhausted"
            )
            continue
        levels = [base]
        radii = [r0]
        good = True
        for j, k in enumerate(orders, start=1):
            lifted = _lift(base, twists, j, k)
            r = injectivity_radius(lifted, cap=radius_cap)
            if r <= radii[-1]:
                attempts.append(
                    f"layout ({chain_len}, {route_seed}): radius stalled at level {j}"
                )
                good = False
                break
            try:
                lifted.check_invariants()
                check_projection(lifted, levels[-1])
            except ValueError as exc:
                attempts.append(f"layout ({chain_len}, {route_seed}): {exc}")
                good = False
                break
            levels.append(lifted)
            radii.append(r)
        if good:
            return levels
    raise BudgetError(
        f"no tower of depth {depth} with strictly increasing radius found for "
        f"mu={mu} at scale {scale}: " + "; ".join(attempts[-4:])
    )


# ---------------------------------------------------------------------------
# Predictions and verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Predictions:
    d: Fraction
    beta1: Fraction
    b1p: dict
    limit_d: Fraction
    limit_b1p: dict
    limit_beta1: Fraction


def predict_stats(order, d_a, b1p_a, n, p, mu, primes=DEFAULT_PRIMES) -> Predictions:
    """Closed-form level stats for a cover with n points, p vertices and
    fixed-vertex fraction mu, plus the three limiting gradients."""
    mu = Fraction(mu)
    weight = mu + (1 - mu) * order
    if n != p * weight:
        raise ValueError(f"inconsistent triple: n={n}, p={p}, mu={mu} (p*weight={p * weight})")
    d = n - p + mu * p * d_a + 1
    beta1 = n - p + 1
    b1p = {q: n - p + mu * p * b1p_a.get(q, 0) + 1 for q in primes}
    return Predictions(
        d=d,
        beta1=Fraction(beta1),
        b1p=b1p,
        limit_d=1 + Fraction(mu * d_a - 1, 1) / weight,
        limit_b1p={q: 1 + (mu * b1p_a.get(q, 0) - 1) / weight for q in primes},
        limit_beta1=1 - 1 / weight,
    )


@dataclass(frozen=True)
class LevelComparison:
    n: int
    p: int
    mu: Fraction
    radius: int
    predicted: Predictions
    computed_index: int
    computed_rank: tuple  # (lower, upper)
    computed_beta1: int
    computed_b1p: dict
    b1p_match: bool
    beta1_formula: str  # which closed form the computed beta1 matches
    error: str = None


def verify_level(
    cover: CoverGraph, ambient: Presentation, primes=DEFAULT_PRIMES, effort: int = 1
) -> LevelComparison:
    group = cover.group
    n = cover.n
    p = cover.num_vertices
    mu = cover.mu
    pred = predict_stats(group.order, group.rank, group.b1p, n, p, mu, primes)
    table = cover_table(cover, ambient)
    if table.index != n:
        raise AssertionError("cover table index disagrees with point count")
    report = subgroup_homology(table, primes)
    bounds = rank_bounds(ambient, table, primes=primes, effort=effort, report=report)
    beta1 = report.beta1
    if beta1 == n - p + 1:
        formula = "n-p+1"
    elif beta1 == n - n * p + 1:
        formula = "n-np+1"
    else:
        formula = "neither"
    return LevelComparison(
        n=n,
        p=p,
        mu=mu,
        radius=injectivity_radius(cover),
        predicted=pred,
        computed_index=table.index,
        computed_rank=bounds,
        computed_beta1=beta1,
        computed_b1p=dict(report.b1p),
        b1p_match=all(report.b1p[q] == pred.b1p[q] for q in primes),
        beta1_formula=formula,
    )


@dataclass(frozen=True)
class TowerReport:
    mu_target: Fraction
    levels: tuple  # of LevelComparison
    limit_d: Fraction
    limit_b1p: dict
    limit_beta1: Fraction


def tower_report(
    covers, ambient: Presentation, primes=DEFAULT_PRIMES, effort: int = 0
) -> TowerReport:
    """Per-level comparisons plus the limit predictions of the deepest level.

    Tietze effort defaults to 0 here: at tower sizes the simplification pass
    dominates the runtime and the rank interval is reported against the
    closed-form prediction anyway.
    """
    comparisons = tuple(verify_level(c, ambient, primes, effort=effort) for c in covers)
    last = comparisons[-1].predicted
    return TowerReport(
        mu_target=covers[0].mu,
        levels=comparisons,
        limit_d=last.limit_d,
        limit_b1p=dict(last.limit_b1p),
        limit_beta1=last.limit_beta1,
    )


def _frac(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def cover_to_json_obj(cover: CoverGraph):
    return {
        "n": cover.n,
        "generators": {
            name: list(perm)
            for name, perm in zip(cover.group.pres.generators, cover.a_perms)
        },
        "sigma": list(cover.sigma),
    }


def tower_report_to_csv(report: TowerReport) -> str:
    """One row per level; exact rationals as p/q plus 6-place decimal
    columns marked _approx."""
    primes = sorted(report.limit_b1p)
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = (
        ["level", "n", "p", "mu", "radius", "predicted_d", "predicted_beta1"]
        + [f"predicted_b1p_{q}" for q in primes]
        + ["computed_beta1"]
        + [f"computed_b1p_{q}" for q in primes]
        + ["rank_lower", "rank_upper", "b1p_match", "beta1_formula"]
        + ["gradient_d", "gradient_b1p_2", "gradient_beta1"]
        + ["gradient_d_approx", "gradient_b1p_2_approx", "gradient_beta1_approx"]
    )
    writer.writerow(header)
    for i, lc in enumerate(report.levels):
        grads = (
            Fraction(lc.predicted.d - 1, lc.n),
            Fraction(lc.computed_b1p.get(2, lc.computed_beta1) - 1, lc.n),
            Fraction(lc.computed_beta1 - 1, lc.n),
        )
        writer.writerow(
            [i, lc.n, lc.p, _frac(lc.mu), lc.radius, _frac(lc.predicted.d), _frac(lc.predicted.beta1)]
            + [_frac(lc.predicted.b1p[q]) for q in primes]
            + [lc.computed_beta1]
            + [lc.computed_b1p[q] for q in primes]
            + [lc.computed_rank[0], lc.computed_rank[1], lc.b1p_match, lc.beta1_formula]
            + [_frac(g) for g in grads]
            + [f"{float(g):.6f}" for g in grads]
        )
    writer.writerow([])
    writer.writerow(
        ["limit", "", "", "", "", _frac(report.limit_d), _frac(report.limit_beta1)]
        + [_frac(report.limit_b1p[q]) for q in primes]
    )
    return buf.getvalue()


def tower_report_to_json(report: TowerReport) -> str:
    levels = []
    for lc in report.levels:
        levels.append(
            {
                "n": lc.n,
                "p": lc.p,
                "mu": _frac(lc.mu),
                "radius": lc.radius,
                "predicted": {
                    "d": _frac(lc.predicted.d),
                    "beta1": _frac(lc.predicted.beta1),
                    "b1p": {str(q): _frac(v) for q, v in sorted(lc.predicted.b1p.items())},
                },
                "computed": {
                    "index": lc.computed_index,
                    "rank_interval": list(lc.computed_rank),
                    "beta1": lc.computed_beta1,
                    "b1p": {str(q): v for q, v in sorted(lc.computed_b1p.items())},
                },
                "b1p_match": lc.b1p_match,
                "beta1_formula": lc.beta1_formula,
            }
        )
    return json.dumps(
        {
            "mu_target": _frac(report.mu_target),
            "levels": levels,
            "limits": {
                "d": _frac(report.limit_d),
                "b1p": {str(q): _frac(v) for q, v in sorted(report.limit_b1p.items())},
                "beta1": _frac(report.limit_beta1),
            },
        },
        indent=2,
    )
