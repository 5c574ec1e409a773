import json
import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from floerkit.ainfty import StructureError, opposite_algebra
from floerkit.pairing import realize_floer_boundary
from floerkit.specfmt import (DIAGNOSTIC_CODES, ParseError, from_machine, load, parse, serialize,
                              to_machine)
from floerkit.synthetic import cyclic_document, cyclic_instance, gluing_document, gluing_instance

from oracles import HALF, ONE, build_f1

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
DOCUMENTS = sorted(FIXTURES.glob("*.afd"))
REJECTIONS = sorted((FIXTURES / "rejections").glob("*.afd"))
F1_TEXT = (FIXTURES / "f1.afd").read_text()


def code_of(text):
    with pytest.raises(ParseError) as exc:
        parse(text)
    return exc.value.code


def test_f1_document():
    doc = parse(F1_TEXT)
    assert doc.monoid == (Fraction(1),) and doc.cutoff == 4
    assert doc.basis("C").generators == ("p", "q")
    assert doc.basis("D").generators == ("w", "v")
    assert doc.table_entry_count() == 7
    M, one = build_f1()
    assert doc.module("M") == M
    assert doc.algebra("A") == M.algebra
    assert doc.element("one") == one


def test_header_only_document():
    doc = parse("format 1\n")
    assert doc.table_entry_count() == 0
    assert serialize(doc) == "format 1\n"


def test_empty_text_is_a_syntax_error():
    assert code_of("") == "SYNTAX_ERROR"
    assert code_of("# only a comment\n") == "SYNTAX_ERROR"


def test_level_outside_monoid():
    text = "format 1\nmonoid 1\ncutoff 4\nbasis C: e\nalgebra A on C\n  m 2 @1/3: e e -> e\n"
    with pytest.raises(ParseError) as exc:
        parse(text)
    assert exc.value.code == "LEVEL_NOT_IN_MONOID"
    assert exc.value.line == 6


def test_level_at_cutoff_is_out_of_range():
    text = "format 1\nmonoid 1\ncutoff 4\nbasis C: e\nalgebra A on C\n  m 2 @4: e e -> e\n"
    assert code_of(text) == "LEVEL_OUT_OF_RANGE"


def test_comments_and_blank_lines_are_ignored():
    noisy = F1_TEXT.replace("basis C: p q", "# generators of C\nbasis C: p q   # two of them\n\n")
    assert parse(noisy) == parse(F1_TEXT)


def test_permuted_entries_canonicalize():
    lines = F1_TEXT.splitlines()
    start = lines.index("module M on D over A") + 1
    block = lines[start:start + 4]
    shuffled = lines[:start] + block[::-1] + lines[start + 4:]
    doc = parse("\n".join(shuffled) + "\n")
    assert serialize(doc) == serialize(parse(F1_TEXT))


def test_independent_sections_in_any_order():
    header, c, d, alg, mod, elt = F1_TEXT.split("\n\n")
    reordered = "\n\n".join([header, d, elt, c, alg, mod])
    assert parse(reordered) == parse(F1_TEXT)


def test_names_must_be_declared_before_use():
    header, c, d, alg, mod, elt = F1_TEXT.split("\n\n")
    assert code_of("\n\n".join([header, c, d, mod, alg, elt])) == "UNRESOLVED_NAME"


def test_degrees_are_optional_and_parsed():
    text = F1_TEXT.replace("basis D: w v\n", "basis D: w v\n\ndegrees D mod 2: w=0 v=1\n")
    doc = parse(text)
    assert doc.basis("D").degree("v") == 1
    assert parse(serialize(doc)) == doc
    assert parse(F1_TEXT).basis("D").degree("v") is None


def test_floer_counts():
    text = ("format 1\nmonoid 1\ncutoff 3\nbasis E: a b c\nfloer F on E\n"
            "  d @1: a -> b count=2\n  d @2: a -> c count=3\n")
    d = realize_floer_boundary(parse(text).floer("F"))
    assert d.image("a").terms == frozenset({(Fraction(2), "c")})


def test_truncation_only_lowers():
    doc = parse(F1_TEXT)
    low = doc.truncated(1)
    assert low.cutoff == 1 and low.table_entry_count() == 6
    with pytest.raises(StructureError):
        doc.truncated(5)


@pytest.mark.parametrize("path", DOCUMENTS, ids=lambda p: p.name)
def test_fixture_round_trips(path):
    doc = load(path)
    text = serialize(doc)
    again = parse(text)
    assert again == doc
    assert serialize(again) == text
    assert from_machine(to_machine(doc)) == doc
    assert json.loads(to_machine(doc))["format"] == 1


@pytest.mark.parametrize("path", REJECTIONS, ids=lambda p: p.stem)
def test_rejection_corpus(path):
    assert code_of(path.read_text()) == path.stem.upper()


def test_every_code_has_a_rejection_fixture():
    assert {p.stem.upper() for p in REJECTIONS} == set(DIAGNOSTIC_CODES)


@pytest.mark.parametrize("text, code", [
    ("format one\n", "SYNTAX_ERROR"),
    ("format 1\nmonoid 0\n", "INVALID_VALUE"),
    ("format 1\nmonoid 1\ncutoff -1\n", "INVALID_VALUE"),
    ("format 1\nwidget W\n", "UNKNOWN_SECTION"),
    ("format 1\nmonoid 1\ncutoff 2\nbasis C: e e\n", "DUPLICATE_ENTRY"),
    ("format 1\nmonoid 1\ncutoff 2\nbasis C: e\nbasis C: f\n", "DUPLICATE_NAME"),
    ("format 1\nmonoid 1\nmonoid 1\n", "DUPLICATE_NAME"),
    ("format 1\nbasis C: e\n", "SYNTAX_ERROR"),
    ("format 1\nmonoid 1\ncutoff 2\nbasis C: e\nalgebra A on C\n  m 2 @0: e -> e\n",
     "ARITY_MISMATCH"),
    ("format 1\nmonoid 1\ncutoff 2\nbasis C: e\nalgebra A on C\n  m 2 @0: e x -> e\n",
     "UNRESOLVED_NAME"),
    ("format 1\nmonoid 1\ncutoff 2\nbasis C: e\nalgebra A on B\n", "UNRESOLVED_NAME"),
    ("format 1\nmonoid 1\ncutoff 2\nbasis C: e\nelement x in C: T^1 * e + T^1 * e\n",
     "DUPLICATE_ENTRY"),
])
def test_specific_diagnostics(text, code):
    assert code_of(text) == code


def test_error_carries_position():
    with pytest.raises(ParseError) as exc:
        parse(F1_TEXT.replace("n 1 @0: w | p -> v", "n 1 @0: w | p => v"))
    assert exc.value.code == "SYNTAX_ERROR"
    assert exc.value.line == 15
    assert str(exc.value).startswith("SYNTAX_ERROR at 15:")


def test_opposite_declaration():
    doc = load(FIXTURES / "f1_extras.afd")
    assert doc.algebra("Aop") == opposite_algebra(doc.algebra("A"))


@pytest.mark.parametrize("seed", range(5))
def test_generated_documents_round_trip(seed):
    rng = random.Random(seed)
    inst = cyclic_instance(rng, HALF, 2)
    doc = cyclic_document(inst)
    assert doc.module("M") == inst.module
    assert doc.element("one") == inst.one
    assert parse(serialize(doc)) == doc
    g = gluing_instance(rng, ONE, 2)
    gdoc = gluing_document(g)
    assert gdoc.gluing("Phi") == g.tensor
    assert parse(serialize(gdoc)) == gdoc


def _mutate(text: str, ops) -> str:
    chars = list(text)
    for kind, pos, ch in ops:
        if not chars:
            break
        i = pos % len(chars)
        if kind == 0:
            del chars[i]
        elif kind == 1:
            chars.insert(i, ch)
        else:
            chars[i] = ch
    return "".join(chars)


mutations = st.lists(st.tuples(st.integers(0, 2), st.integers(0, 10**6),
                               st.sampled_from(list(" \n\t:|@>-+*^/#,=0123456789pqwvmnxT"))),
                     min_size=1, max_size=4)


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(mutations)
def test_parser_fails_only_with_diagnostics(ops):
    try:
        doc = parse(_mutate(F1_TEXT, ops))
    except ParseError as exc:
        assert exc.code in DIAGNOSTIC_CODES
        return
    assert parse(serialize(doc)) == doc


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=200))
def test_parser_survives_arbitrary_text(text):
    try:
        parse("format 1\n" + text)
    except ParseError as exc:
        assert exc.code in DIAGNOSTIC_CODES
