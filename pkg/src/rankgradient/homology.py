"""Abelianization invariants via exact integer Smith normal form.

Everything here runs on arbitrary-precision Python ints; there is no
floating point or fixed-width path anywhere.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .words import Presentation


DEFAULT_PRIMES = (2, 3, 5)


@dataclass(frozen=True)
class HomologyReport:
    """First-homology data of a presented group.

    ``torsion`` is the divisibility chain d1 | d2 | ... of entries > 1;
    ``b1p[p]`` is the mod-p first Betti number beta1 + #{i : p | d_i}.
    """

    beta1: int
    torsion: tuple
    b1p: dict


def abelianized_matrix(pres: Presentation):
    """Relation matrix: entry (i, j) = exponent sum of generator j in relator i."""
    rows = []
    for relator in pres.relators:
        row = [0] * pres.rank
        for letter in relator:
            row[abs(letter) - 1] += 1 if letter > 0 else -1
        rows.append(row)
    return rows


def smith_normal_form(matrix):
    """Diagonalize an integer matrix by unimodular row/column operations.

    Returns (diagonal, rank) where the diagonal has min(m, n) nonnegative
    entries satisfying d1 | d2 | ... and rank is the number of nonzero
    entries.  Pivoting picks the minimal absolute value with a lowest-row,
    then lowest-column tie-break, which keeps intermediate entries tame.
    """
    a = [list(row) for row in matrix]
    m = len(a)
    n = len(a[0]) if m else 0
    size = min(m, n)
    diag = []
    k = 0
    while k < size:
        pivot = None
        for i in range(k, m):
            for j in range(k, n):
                v = abs(a[i][j])
                if v and (pivot is None or v < pivot[0]):
                    pivot = (v, i, j)
        if pivot is None:
            break
        _, pi, pj = pivot
        a[k], a[pi] = a[pi], a[k]
        for row in a:
            row[k], row[pj] = row[pj], row[k]

        # Clear row and column k; a failed division re-enters the loop with
        # a smaller pivot, so this terminates.
        dirty = True
        while dirty:
            dirty = False
            for i in range(k + 1, m):
                if a[i][k]:
                    q = a[i][k] // a[k][k]
                    for j in range(k, n):
                        a[i][j] -= q * a[k][j]
                    if a[i][k]:
                        a[k], a[i] = a[i], a[k]
                        dirty = True
            for j in range(k + 1, n):
                if a[k][j]:
                    q = a[k][j] // a[k][k]
                    for row in a:
                        row[j] -= q * row[k]
                    if a[k][j]:
                        for row in a:
                            row[k], row[j] = row[j], row[k]
                        dirty = True
        # Divisibility fix-up: fold any non-multiple into row k and redo.
        d = a[k][k]
        offender = None
        for i in range(k + 1, m):
            for j in range(k + 1, n):
                if a[i][j] % d:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            for j in range(k, n):
                a[k][j] += a[offender][j]
            continue
        diag.append(abs(d))
        k += 1
    diag.extend([0] * (size - len(diag)))
    rank = sum(1 for d in diag if d)
    for i in range(rank - 1):
        assert diag[i + 1] % diag[i] == 0, "divisibility chain violated"
    return diag, rank


def mod_p_rank(matrix, p):
    """Rank of the matrix over F_p by plain Gaussian elimination."""
    a = [[x % p for x in row] for row in matrix]
    m = len(a)
    n = len(a[0]) if m else 0
    rank = 0
    col = 0
    for col in range(n):
        pivot_row = next((i for i in range(rank, m) if a[i][col]), None)
        if pivot_row is None:
            continue
        a[rank], a[pivot_row] = a[pivot_row], a[rank]
        inv = pow(a[rank][col], -1, p)
        a[rank] = [(x * inv) % p for x in a[rank]]
        for i in range(m):
            if i != rank and a[i][col]:
                c = a[i][col]
                a[i] = [(x - c * y) % p for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


def _unit_reduce(matrix):
    """Peel unit pivots off a sparse integer matrix.

    Pivoting on a +-1 entry is a unimodular change of basis contributing a
    diagonal 1, so SNF(input) = identity block of size ``units`` plus
    SNF(remainder).  Reidemeister-Schreier relation matrices are huge but
    have a handful of +-1 entries per row, so this collapses them to a core
    the dense routine can afford; pivots are picked by Markowitz cost via a
    lazily revalidated heap.

    Returns (units, remainder) with the remainder as dense rows.
    """
    rows = {}
    cols = {}
    for i, row in enumerate(matrix):
        entries = {j: v for j, v in enumerate(row) if v}
        if entries:
            rows[i] = entries
            for j in entries:
                cols.setdefault(j, set()).add(i)

    def cost(i, j):
        return (len(rows[i]) - 1) * (len(cols[j]) - 1)

    heap = [
        (cost(i, j), i, j)
        for i, entries in rows.items()
        for j, v in entries.items()
        if v in (1, -1)
    ]
    heapq.heapify(heap)
    units = 0
    while heap:
        c, i, j = heapq.heappop(heap)
        value = rows.get(i, {}).get(j)
        if value not in (1, -1):
            continue
        real = cost(i, j)
        if real > c:
            heapq.heappush(heap, (real, i, j))
            continue
        pivot_row = rows.pop(i)
        for j2 in pivot_row:
            cols[j2].discard(i)
        for r in list(cols.pop(j, ())):
            factor = rows[r].pop(j) * value  # = entry / value since value is a unit
            for j2, v in pivot_row.items():
                if j2 == j:
                    continue
                new = rows[r].get(j2, 0) - factor * v
                if new:
                    rows[r][j2] = new
                    cols[j2].add(r)
                else:
                    rows[r].pop(j2, None)
                    cols[j2].discard(r)
            if rows[r]:
                for j2, v in rows[r].items():
                    if v in (1, -1):
                        heapq.heappush(heap, (cost(r, j2), r, j2))
            else:
                del rows[r]
        units += 1
    live_cols = sorted({j for entries in rows.values() for j in entries})
    col_pos = {j: t for t, j in enumerate(live_cols)}
    remainder = []
    for i in sorted(rows):
        row = [0] * len(live_cols)
        for j, v in rows[i].items():
            row[col_pos[j]] = v
        remainder.append(row)
    return units, remainder


def _snf_by_components(matrix):
    """(nonzero SNF diagonal as a divisibility chain, rank), splitting the
    matrix into its connected row/column blocks first.  Block-diagonal up to
    permutation means the SNF is the union of the blocks' invariant factors;
    the merged multiset is renormalized into a chain by gcd/lcm swaps, which
    never needs to factor anything."""
    if not matrix:
        return [], 0
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, row in enumerate(matrix):
        parent.setdefault(("r", i), ("r", i))
        for j, v in enumerate(row):
            if v:
                parent.setdefault(("c", j), ("c", j))
                a, b = find(("r", i)), find(("c", j))
                if a != b:
                    parent[a] = b
    blocks = {}
    for i, row in enumerate(matrix):
        blocks.setdefault(find(("r", i)), []).append(row)
    entries = []
    rank = 0
    for rows in blocks.values():
        live = sorted({j for row in rows for j, v in enumerate(row) if v})
        sub = [[row[j] for j in live] for row in rows]
        diag, r = smith_normal_form(sub) if live else ([], 0)
        entries.extend(d for d in diag if d)
        rank += r
    entries.sort()
    changed = True
    while changed:
        changed = False
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                if entries[j] % entries[i]:
                    g = math.gcd(entries[i], entries[j])
                    entries[i], entries[j] = g, entries[i] * entries[j] // g
                    changed = True
        entries.sort()
    return entries, rank


def report_from_matrix(matrix, num_generators, primes=DEFAULT_PRIMES):
    """HomologyReport for an abelian group presented by the given relation matrix."""
    if not primes:
        raise ValueError("primes must be nonempty")
    units, core = _unit_reduce(matrix) if matrix else (0, [])
    diag, rank = _snf_by_components(core)
    rank += units
    beta1 = num_generators - rank
    torsion = tuple(d for d in diag if d > 1)
    b1p = {p: beta1 + sum(1 for d in torsion if d % p == 0) for p in primes}
    return HomologyReport(beta1=beta1, torsion=torsion, b1p=b1p)


def homology_report(pres: Presentation, primes=DEFAULT_PRIMES) -> HomologyReport:
    """beta1, torsion and b_{1,p} of the abelianization of a presented group."""
    return report_from_matrix(abelianized_matrix(pres), pres.rank, primes)
