import random
from fractions import Fraction

import pytest

from rankgradient.chains import farber_chain, hnn_chain, lamplighter_chain
from rankgradient.graphings import (
    Graphing,
    bar,
    build_coset_tree,
    compose,
    edge_measure,
    graphing_from_generators,
    is_l_graphing,
    minimize_graphing,
    power,
    projected_edges,
    rank_bound,
    to_labeled_graph,
    union,
)
from rankgradient.words import free_reduce, parse_presentation


def parsed(text):
    pres, specs = parse_presentation(text)
    return pres, (specs[0] if specs else None)


def f2_delta2_chain():
    # level 2 is the intersection of all index-<=2 subgroups of F2, index 4
    pres, spec = parsed("gens a b\nsub H a, b^2, b a b^-1\n")
    return farber_chain(pres, spec, 2)


def test_coset_tree_shadow_measures():
    chain = f2_delta2_chain()
    tree = build_coset_tree(chain)
    assert [tree.level_size(n) for n in range(tree.num_levels)] == [1, 2, 4]
    assert tree.shadow_measure(2) == Fraction(1, 4)
    # every level-1 coset has exactly 2 children at level 2
    for c in range(2):
        assert len(tree.children(1, c)) == 2


def test_generating_set_graphing_round_trip():
    chain = f2_delta2_chain()
    level = 2
    spec = chain.levels[level][1]
    assert len(spec.generators) == 5  # free rank of an index-4 subgroup of F2
    m = graphing_from_generators(chain, level, spec.generators)
    assert edge_measure(m) == 2  # (5 + 3) / 4
    cert = is_l_graphing(m, chain)
    assert cert.verdict is True
    assert rank_bound(m, chain) == 5


def test_round_trip_at_index_one():
    pres, _ = parsed("gens a b\n")
    chain = hnn_chain(parsed("gens a b t\nrel t^-1 a t = b^-1\nrel t^-1 b t = b^2 a b\n")[0], "t", 1)
    level = 1  # index 1: the whole group
    spec = chain.levels[level][1]
    m = graphing_from_generators(chain, level, spec.generators)
    assert m.index == 1
    assert is_l_graphing(m, chain).verdict is True
    assert rank_bound(m, chain) == len(set(spec.generators))


def test_minimize_graphing_is_deterministic_and_minimal_here():
    chain = f2_delta2_chain()
    m1, bound1 = minimize_graphing(chain, 2)
    m2, bound2 = minimize_graphing(chain, 2, seed=99)
    assert m1 == m2 and bound1 == bound2
    assert bound1 <= 5
    assert is_l_graphing(m1, chain).verdict is True


def test_rank_bound_requires_l_graphing():
    chain = f2_delta2_chain()
    table = chain.table(2)
    m = Graphing(table=table, level=2, fibers={(1, 1): {0}})
    with pytest.raises(ValueError):
        rank_bound(m, chain)


def test_bar_contains_inverses_and_identity():
    chain = f2_delta2_chain()
    spec = chain.levels[2][1]
    m = graphing_from_generators(chain, 2, spec.generators)
    b = bar(m)
    assert b.fibers[()] == frozenset(range(4))
    for label, cosets in m.fibers.items():
        targets = {m.table.apply(label, c) for c in cosets}
        assert targets <= b.fibers[free_reduce(tuple(-x for x in reversed(label)))]


def test_union_and_compose_measures():
    chain = f2_delta2_chain()
    table = chain.table(2)
    m = Graphing(table=table, level=2, fibers={(1,): {0, 1}})
    n = Graphing(table=table, level=2, fibers={(2,): {table.apply((1,), 0)}})
    u = union(m, n)
    assert edge_measure(u) == Fraction(3, 4)
    c = compose(m, n)
    assert c.fibers == {free_reduce((1, 2)): frozenset({0})}


def random_graphing(rng, chain, level):
    table = chain.table(level)
    fibers = {}
    for _ in range(rng.randint(1, 3)):
        label = free_reduce(
            tuple(rng.choice((1, -1, 2, -2)) for _ in range(rng.randint(1, 3)))
        )
        if not label:
            continue
        cosets = {rng.randrange(table.index) for _ in range(rng.randint(1, 3))}
        fibers.setdefault(label, set()).update(cosets)
    return Graphing(table=table, level=level, fibers=fibers)


def reachability(edges, num_vertices, k):
    """k-step closure of an undirected edge set, as a set of (v, w) pairs."""
    neighbors = {v: {v} for v in range(num_vertices)}
    for v, w in edges:
        neighbors[v].add(w)
        neighbors[w].add(v)
    reach = {v: {v} for v in range(num_vertices)}
    for _ in range(k):
        reach = {
            v: {y for x in r for y in neighbors[x]} for v, r in reach.items()
        }
    return {(v, w) for v, r in reach.items() for w in r if v <= w}


def test_power_matches_reachability_closure():
    pres, spec = parsed("gens a b\nsub K normal a^2, b^2, a b a^-1 b^-1\n")
    chain = farber_chain(pres, spec, 2)
    levels = [n for n in range(len(chain.levels)) if chain.table(n).index <= 8]
    rng = random.Random(2024)
    for trial in range(100):
        level = levels[trial % len(levels)]
        m = random_graphing(rng, chain, level)
        k = rng.randint(1, 5)
        p = power(m, k)
        got = {(min(v, w), max(v, w)) for v, w in projected_edges(p)}
        want = reachability(projected_edges(bar(m)), m.index, k)
        assert got == want, (trial, level, k, m.fibers)


def test_to_labeled_graph_loops_fix_base():
    chain = f2_delta2_chain()
    spec = chain.levels[2][1]
    m = graphing_from_generators(chain, 2, spec.generators)
    graph, loops = to_labeled_graph(m, chain)
    assert not graph.disconnected
    assert graph.num_edges == 8
    table = chain.table(2)
    for loop in loops:
        assert table.fixes_base(loop)


def test_disconnected_graphing_rejected():
    chain = f2_delta2_chain()
    table = chain.table(2)
    m = Graphing(table=table, level=2, fibers={(1, 1): set(range(4))})
    cert = is_l_graphing(m, chain)
    assert cert.verdict is False
