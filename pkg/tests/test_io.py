"""Flow-map JSON round trips, schema errors, canonical ordering."""

import json
from fractions import Fraction

import pytest

from flowmap.errors import FlowMapParseError
from flowmap.io import content_hash, parse_flowmap, serialize_flowmap
from flowmap.poly import FlowMap, Polynomial


def test_tmr_round_trip_exact(tmr):
    doc = serialize_flowmap(tmr)
    back = parse_flowmap(doc)
    assert back == tmr
    # bit-exact rationals
    for name in tmr.variables:
        assert back.components[name].named_terms() == tmr.components[name].named_terms()
        assert all(isinstance(c, Fraction) for c in back.components[name].terms.values())


def test_float_round_trip_full_precision():
    f = FlowMap(
        ("a", "b"),
        {
            "a": Polynomial(("a", "b"), {(2, 0): 0.1234567890123456789, (1, 1): 3.5e-7}),
            "b": Polynomial(("a", "b"), {(0, 2): 1.0 / 3.0}),
        },
    )
    back = parse_flowmap(serialize_flowmap(f))
    assert back == f


def test_rational_strings_parse():
    doc = '{"variables": ["x"], "maps": {"x": [{"c": "3/4", "e": {"x": 2}}]}}'
    f = parse_flowmap(doc)
    assert f.components["x"].terms[(2,)] == Fraction(3, 4)


def test_duplicate_exponent_vectors_merge():
    doc = json.dumps(
        {
            "variables": ["x"],
            "maps": {"x": [{"c": "2", "e": {"x": 2}}, {"c": "5", "e": {"x": 2}}]},
        }
    )
    f = parse_flowmap(doc)
    assert f.components["x"].terms[(2,)] == 7


def test_unknown_variable_in_term_errors():
    doc = json.dumps(
        {"variables": ["x"], "maps": {"x": [{"c": "1", "e": {"y": 1}}]}}
    )
    with pytest.raises(FlowMapParseError) as err:
        parse_flowmap(doc)
    assert "y" in str(err.value) and "maps.x[0]" in str(err.value)


@pytest.mark.parametrize(
    "doc",
    [
        "not json at all {",
        '{"variables": [], "maps": {}}',
        '{"variables": ["x"]}',
        '{"variables": ["x"], "maps": {"x": [{"e": {"x": 1}}]}}',
        '{"variables": ["x"], "maps": {"x": [{"c": "1", "e": {"x": -1}}]}}',
        '{"variables": ["x"], "maps": {"x": [{"c": "bogus", "e": {}}]}}',
        '{"variables": ["x", "x"], "maps": {"x": []}}',
        '{"variables": ["x"], "maps": {"x": [], "y": []}}',
    ],
)
def test_schema_violations_raise(doc):
    with pytest.raises(FlowMapParseError):
        parse_flowmap(doc)


def test_serialization_canonical_across_variable_order():
    p1 = Polynomial(("b", "a"), {(1, 2): 4, (0, 1): 2})
    p2 = Polynomial(("a", "b"), {(2, 1): 4, (1, 0): 2})
    f1 = FlowMap(("b", "a"), {"b": p1, "a": Polynomial.zero(("a",))})
    f2 = FlowMap(("a", "b"), {"b": p2, "a": Polynomial.zero(("a",))})
    assert serialize_flowmap(f1) == serialize_flowmap(f2)
    assert content_hash(f1) == content_hash(f2)


def test_graded_lex_term_order(tmr):
    doc = json.loads(serialize_flowmap(tmr))
    assert doc["variables"] == ["v", "w"]
    degrees = [sum(term["e"].values()) for term in doc["maps"]["w"]]
    assert degrees == sorted(degrees)


def test_zero_coefficient_terms_dropped_on_parse():
    doc = '{"variables": ["x"], "maps": {"x": [{"c": "0", "e": {"x": 1}}]}}'
    f = parse_flowmap(doc)
    assert f.components["x"].is_zero()
