import random
from itertools import combinations
from math import gcd

from hypothesis import given, settings, strategies as st

from rankgradient.homology import (
    _snf_by_components,
    _unit_reduce,
    abelianized_matrix,
    homology_report,
    mod_p_rank,
    report_from_matrix,
    smith_normal_form,
)
from rankgradient.words import parse_presentation


def det(matrix):
    """Integer determinant by cofactor expansion (tiny matrices only)."""
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    total = 0
    for j, top in enumerate(matrix[0]):
        if top == 0:
            continue
        minor = [row[:j] + row[j + 1 :] for row in matrix[1:]]
        total += (-1) ** j * top * det(minor)
    return total


def minor_gcd_diagonal(matrix):
    """SNF diagonal via determinantal divisors: s_k = d_k / d_{k-1}."""
    m = len(matrix)
    n = len(matrix[0]) if m else 0
    size = min(m, n)
    divisors = [1]
    for k in range(1, size + 1):
        g = 0
        for rows in combinations(range(m), k):
            for cols in combinations(range(n), k):
                sub = [[matrix[i][j] for j in cols] for i in rows]
                g = gcd(g, det(sub))
        divisors.append(g)
        if g == 0:
            break
    diag = []
    for k in range(1, size + 1):
        if k >= len(divisors) or divisors[k] == 0:
            diag.append(0)
        else:
            diag.append(divisors[k] // divisors[k - 1])
    return diag


def mod_p_rank_oracle(matrix, p):
    """Row reduction over F_p, written independently of the library version."""
    rows = [[x % p for x in row] for row in matrix]
    rank = 0
    for col in range(len(rows[0]) if rows else 0):
        pivot = next((r for r in rows if r[col] % p), None)
        if pivot is None:
            continue
        rows.remove(pivot)
        inv = pow(pivot[col], p - 2, p)
        pivot = [(x * inv) % p for x in pivot]
        rows = [
            [(x - r[col] * y) % p for x, y in zip(r, pivot)] for r in rows
        ]
        rank += 1
    return rank


def random_matrix(rng, max_size=6, max_entry=9):
    m = rng.randint(1, max_size)
    n = rng.randint(1, max_size)
    return [[rng.randint(-max_entry, max_entry) for _ in range(n)] for _ in range(m)]


def test_snf_known_values():
    assert smith_normal_form([[2, 0], [0, 3]]) == ([1, 6], 2)
    assert smith_normal_form([[2, 4], [4, 8]]) == ([2, 0], 1)
    assert smith_normal_form([[0, 0], [0, 0]]) == ([0, 0], 0)
    assert smith_normal_form([[6]]) == ([6], 1)


def test_snf_matches_minor_gcd_oracle_seeded():
    rng = random.Random(12)
    for _ in range(500):
        matrix = random_matrix(rng)
        diag, rank = smith_normal_form(matrix)
        oracle = minor_gcd_diagonal(matrix)
        assert diag == oracle
        assert rank == sum(1 for d in oracle if d)


def test_mod_p_rank_matches_oracle_seeded():
    rng = random.Random(34)
    for _ in range(200):
        matrix = random_matrix(rng)
        for p in (2, 3, 5):
            assert mod_p_rank(matrix, p) == mod_p_rank_oracle(matrix, p)


def test_b1p_consistent_with_mod_p_rank():
    rng = random.Random(56)
    for _ in range(200):
        matrix = random_matrix(rng)
        n = len(matrix[0])
        report = report_from_matrix(matrix, n)
        for p in (2, 3, 5):
            assert report.b1p[p] == n - mod_p_rank(matrix, p)


def test_unit_reduce_preserves_smith_form():
    rng = random.Random(78)
    for _ in range(200):
        matrix = random_matrix(rng)
        units, core = _unit_reduce(matrix)
        diag_core, rank_core = _snf_by_components(core)
        full = [1] * units + list(diag_core)
        nonzero = sorted(d for d in full if d)
        expected, rank = smith_normal_form(matrix)
        assert sorted(d for d in expected if d) == nonzero
        assert units + rank_core == rank


def test_snf_by_components_blocks():
    # two independent blocks, chain must interleave them correctly
    matrix = [[2, 0, 0], [0, 3, 0]]
    diag, rank = _snf_by_components(matrix)
    assert diag == [1, 6]
    assert rank == 2


entry = st.integers(min_value=-9, max_value=9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_snf_divisibility_and_rank_properties(m, n, data):
    matrix = [
        [data.draw(entry) for _ in range(n)] for _ in range(m)
    ]
    diag, rank = smith_normal_form(matrix)
    assert len(diag) == min(m, n)
    assert all(d >= 0 for d in diag)
    for a, b in zip(diag, diag[1:]):
        if a and b:
            assert b % a == 0
        if a == 0:
            assert b == 0
    # rank over Q sandwiched by every mod-p rank
    for p in (2, 3, 5):
        assert mod_p_rank(matrix, p) <= rank


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_snf_invariant_under_transpose(m, n, data):
    matrix = [[data.draw(entry) for _ in range(n)] for _ in range(m)]
    t = [list(col) for col in zip(*matrix)]
    assert smith_normal_form(matrix) == smith_normal_form(t)


def test_abelianized_matrix():
    pres, _ = parse_presentation("gens a b\nrel a^2 b^-3\nrel a b a^-1 b^-1\n")
    assert abelianized_matrix(pres) == [[2, -3], [0, 0]]


def test_homology_report_klein_bottle():
    # <a,b | a b a b^-1>: H1 = Z + Z/2
    pres, _ = parse_presentation("gens a b\nrel a b a b^-1\n")
    report = homology_report(pres)
    assert report.beta1 == 1
    assert report.torsion == (2,)
    assert report.b1p == {2: 2, 3: 1, 5: 1}


def test_homology_report_free_group():
    pres, _ = parse_presentation("gens a b c\n")
    report = homology_report(pres)
    assert report.beta1 == 3
    assert report.torsion == ()
