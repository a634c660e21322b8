import pytest
from hypothesis import given, strategies as st

from rankgradient.words import (
    ParseError,
    Presentation,
    SubgroupSpec,
    canonical_form,
    concat,
    conjugate,
    cyclic_reduce,
    free_reduce,
    invert,
    max_generator,
    parse_presentation,
    serialize_presentation,
)

letters = st.integers(min_value=-3, max_value=3).filter(lambda x: x != 0)
raw_words = st.lists(letters, max_size=20)


@given(raw_words)
def test_free_reduce_idempotent(raw):
    w = free_reduce(raw)
    assert free_reduce(w) == w


@given(raw_words)
def test_free_reduce_no_adjacent_cancellation(raw):
    w = free_reduce(raw)
    assert all(w[i] != -w[i + 1] for i in range(len(w) - 1))


@given(raw_words)
def test_invert_is_involution(raw):
    w = free_reduce(raw)
    assert invert(invert(w)) == w
    assert concat(w, invert(w)) == ()


@given(raw_words, raw_words, raw_words)
def test_concat_associative(a, b, c):
    a, b, c = free_reduce(a), free_reduce(b), free_reduce(c)
    assert concat(concat(a, b), c) == concat(a, concat(b, c))


@given(raw_words)
def test_cyclic_reduce_fixed_point(raw):
    w = cyclic_reduce(free_reduce(raw))
    assert cyclic_reduce(w) == w
    if len(w) >= 2:
        assert w[0] != -w[-1]


def test_conjugate():
    # b^-1 a b
    assert conjugate((1,), (2,)) == (-2, 1, 2)
    assert conjugate((1,), ()) == (1,)


def test_max_generator():
    assert max_generator(()) == -1
    assert max_generator((3, -1)) == 2


def test_parse_basic():
    pres, specs = parse_presentation(
        """
        # free group on two letters with one relator
        gens a b
        rel a^2 b^-1
        sub H a, b^2
        """
    )
    assert pres.generators == ("a", "b")
    assert pres.relators == ((1, 1, -2),)
    assert len(specs) == 1
    assert specs[0].generators == ((1,), (2, 2))
    assert specs[0].name == "H"
    assert not specs[0].normal


def test_parse_rel_equation():
    pres, _ = parse_presentation("gens a t\nrel t^-1 a t = a^2\n")
    assert pres.relators == (cyclic_reduce((-2, 1, 2, -1, -1)),)


def test_parse_sub_without_commas_splits_tokens():
    _, specs = parse_presentation("gens a b\nsub H a^2 b^2\n")
    assert specs[0].generators == ((1, 1), (2, 2))


def test_parse_sub_commas_keep_multiletter_words():
    _, specs = parse_presentation("gens a b\nsub K normal a^4, b^4, a b a^-1 b^-1\n")
    assert specs[0].normal
    assert specs[0].generators == ((1,) * 4, (2,) * 4, (1, 2, -1, -2))


def test_parse_identity_word():
    _, specs = parse_presentation("gens a\nsub H 1\n")
    assert specs[0].generators == ((),)


@pytest.mark.parametrize(
    "text",
    [
        "rel a\n",  # rel before gens
        "gens a\ngens b\n",  # duplicate gens
        "gens a a\n",
        "gens a\nrel b\n",  # unknown generator
        "gens a\nrel a^0\n",
        "gens a\nrel a^x\n",
        "gens a\nsub\n",
        "gens a\nfrobnicate a\n",
        "",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_presentation(text)


def test_parse_error_carries_line_number():
    with pytest.raises(ParseError) as exc:
        parse_presentation("gens a\nrel c\n")
    assert exc.value.line == 2


def test_serialize_round_trip():
    text = "gens a b\nrel a^3\nrel a b a b\nsub K normal a^4, b^4, a b a^-1 b^-1\n"
    pres, specs = parse_presentation(text)
    out = serialize_presentation(pres, specs)
    pres2, specs2 = parse_presentation(out)
    assert pres2 == pres
    assert [s.generators for s in specs2] == [s.generators for s in specs]
    assert serialize_presentation(pres2, specs2) == out


def test_canonical_form_ignores_whitespace_and_comments():
    a = canonical_form(*_single("gens a b\nrel a b a^-1 b^-1\nsub H a\n"))
    b = canonical_form(
        *_single("# hi\ngens   a   b\n\nrel a b a^-1 b^-1   # comment\nsub H a\n")
    )
    assert a == b


def _single(text):
    pres, specs = parse_presentation(text)
    return pres, specs[0] if specs else None


def test_presentation_rejects_bad_relator():
    with pytest.raises(ValueError):
        Presentation(generators=("a",), relators=((2,),))


def test_word_str_exponent_collapsing():
    pres = Presentation(generators=("a", "b"))
    assert pres.word_str((1, 1, -2, -2, -2)) == "a^2 b^-3"
    assert pres.word_str(()) == "1"


def test_spec_validate_over():
    pres = Presentation(generators=("a",))
    spec = SubgroupSpec(generators=((2,),))
    with pytest.raises(ValueError):
        spec.validate_over(pres)
