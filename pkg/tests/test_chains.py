import csv
import io
import json
from fractions import Fraction

import pytest

from rankgradient.chains import (
    farber_chain,
    farber_defect,
    fgnormal_bound,
    gradient_sequence,
    hnn_chain,
    lamplighter_chain,
    lamplighter_presentation,
    report_to_csv,
    report_to_json,
)
from rankgradient.cosets import enumerate_cosets, is_normal
from rankgradient.errors import BudgetError
from rankgradient.words import free_reduce, parse_presentation

FIG8 = "gens a b t\nrel t^-1 a t = b^-1\nrel t^-1 b t = b^2 a b\n"


def parsed(text):
    pres, specs = parse_presentation(text)
    return pres, (specs[0] if specs else None)


def test_hnn_fig8_indices_and_rank():
    pres, _ = parsed(FIG8)
    chain = hnn_chain(pres, "t", 4)
    assert chain.indices() == (1, 1, 2, 3, 4)
    report = gradient_sequence(chain)
    for st in report.levels:
        assert st.error is None
        assert st.rank_upper <= 3


def test_hnn_requires_stable_letter():
    pres, _ = parsed("gens a b\n")
    with pytest.raises(ValueError):
        hnn_chain(pres, "t", 2)


def test_hnn_rejects_non_surjective_stable_letter():
    # t dies in the quotient Z/2, so <A, t^2> has index 1, not 2
    pres, _ = parsed("gens a t\nrel t^2\n")
    with pytest.raises(BudgetError):
        hnn_chain(pres, "t", 2)


def test_hnn_z2_example():
    pres, _ = parsed("gens a t\nrel t^-1 a t = a\n")
    chain = hnn_chain(pres, "t", 2)
    assert chain.indices() == (1, 1, 2)
    table = chain.table(2)
    assert table.fixes_base((1,))
    assert table.fixes_base((2, 2))
    assert not table.fixes_base((2,))


def test_lamplighter_presentation_order():
    for m in (1, 2):
        pres = lamplighter_presentation(m)
        table = enumerate_cosets(pres)
        assert table.index == 2 ** (2 ** m + m)


def test_lamplighter_chain_w3():
    chain = lamplighter_chain(3, 2)
    assert chain.indices() == (1, 2, 4)
    report = gradient_sequence(chain, effort=1)
    for n in (1, 2):
        st = report.levels[n]
        assert st.index == 2 ** n
        assert st.b1p[2] == 2 ** n + 1
        assert Fraction(st.b1p[2] - 1, st.index) == 1
        # the generator a fixes cosets at every level: not a Farber chain
        assert farber_defect(chain, (1,), n) == 1


def test_lamplighter_depth_cap():
    with pytest.raises(ValueError):
        lamplighter_chain(2, 3)


def test_farber_chain_f2():
    pres, spec = parsed("gens a b\nsub H a, b^2, b a b^-1\n")
    chain = farber_chain(pres, spec, 2)
    assert chain.indices()[1] == 2
    assert chain.indices()[2] % 2 == 0
    assert chain.truncated is None
    assert all(chain.nested)
    for level in range(2, len(chain.levels)):
        assert is_normal(chain.table(level))


def test_farber_chain_defects_vanish():
    # seed whose core avoids all short words: quotient is Z/4 x Z/4, where
    # every reduced word of length <= 2 survives
    pres, spec = parsed("gens a b\nsub K normal a^4, b^4, a b a^-1 b^-1\n")
    chain = farber_chain(pres, spec, 3)
    words = []
    for x in (1, -1, 2, -2):
        words.append((x,))
        for y in (1, -1, 2, -2):
            w = free_reduce((x, y))
            if len(w) == 2 and w not in words:
                words.append(w)
    assert len(words) == 16
    for level in range(2, len(chain.levels)):
        for w in words:
            assert farber_defect(chain, w, level) == 0


def test_farber_chain_truncates_on_cap():
    pres, spec = parsed("gens a b\nsub H a, b^2, b a b^-1\n")
    chain = farber_chain(pres, spec, 3, index_cap=10)
    assert chain.truncated is not None
    assert len(chain.levels) >= 2


def test_farber_defect_rejects_identity():
    chain = lamplighter_chain(2, 1)
    with pytest.raises(ValueError):
        farber_defect(chain, (), 1)


def test_schreier_ratio_monotone_on_corpus():
    pres, spec = parsed("gens a b\nsub H a, b^2, b a b^-1\n")
    chains = [
        hnn_chain(parsed(FIG8)[0], "t", 5),
        lamplighter_chain(3, 2),
        farber_chain(pres, spec, 3),
    ]
    for chain in chains:
        report = gradient_sequence(chain, effort=1)
        ratios = [
            Fraction(st.schreier_upper - 1, st.index)
            for st in report.levels
            if st.error is None
        ]
        assert all(a >= b for a, b in zip(ratios, ratios[1:]))


def test_gradient_report_serialization_round_trip():
    chain = hnn_chain(parsed(FIG8)[0], "t", 3)
    report = gradient_sequence(chain)
    obj = json.loads(report_to_json(report))
    assert obj["chain"] == chain.provenance
    assert [lv["index"] for lv in obj["levels"]] == list(chain.indices())
    rows = list(csv.DictReader(io.StringIO(report_to_csv(report))))
    assert len(rows) == len(report.levels)
    st = report.levels[-1]
    last = rows[-1]
    assert int(last["index"]) == st.index
    assert last["ratio_rank_upper"] == f"{st.ratios()['rank_upper']}"
    approx = float(last["ratio_rank_upper_approx"])
    assert abs(approx - float(st.ratios()["rank_upper"])) < 1e-6


def test_gradient_jobs_deterministic():
    chain = hnn_chain(parsed(FIG8)[0], "t", 4)
    a = report_to_json(gradient_sequence(chain, jobs=1))
    b = report_to_json(gradient_sequence(chain, jobs=2))
    assert a == b


def test_fgnormal_bound():
    assert fgnormal_bound(2, 3, 4, 6) == Fraction(1)
    with pytest.raises(ValueError):
        fgnormal_bound(0, 1, 1, 1)
