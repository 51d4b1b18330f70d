"""Exact [3,1,3] replacement derivation: circuits, enumeration, substitution."""

import time
from fractions import Fraction

import pytest

from flowmap.errors import EnumerationTooLargeError
from flowmap.poly import Monomial, Polynomial
from flowmap.tmr import (
    ClassicalCircuit,
    ClassicalLocation,
    build_replacement,
    ec_failure_polynomial,
    enumerate_flow_polynomial,
    enumeration_is_normalized,
    tmr_flow_map,
    voter_map_by_substitution,
)

from conftest import VOTER_MAP_TERMS, WIRE_MAP_TERMS


def _named(poly):
    return {key: int(c) for key, c in poly.named_terms().items()}


def test_wire_enumeration_matches_reference_terms():
    poly = enumerate_flow_polynomial(build_replacement("w"))
    assert _named(poly) == {k: v for k, v in WIRE_MAP_TERMS.items()}
    assert all(isinstance(c, Fraction) for c in poly.terms.values())


def test_voter_substitution_matches_reference_terms():
    wire = enumerate_flow_polynomial(build_replacement("w"))
    voter = voter_map_by_substitution(wire)
    assert _named(voter) == {k: v for k, v in VOTER_MAP_TERMS.items()}


def test_voter_direct_enumeration_agrees_with_substitution():
    wire = enumerate_flow_polynomial(build_replacement("w"))
    by_substitution = voter_map_by_substitution(wire)
    direct = enumerate_flow_polynomial(build_replacement("v"))
    assert by_substitution.named_terms() == direct.named_terms()


def test_voter_leading_terms():
    voter = tmr_flow_map().components["v"]
    leading = voter.truncate(3)
    assert _named(leading) == {(("v", 2),): 3, (("v", 3),): 16}


def test_substitution_of_zero_is_zero():
    assert voter_map_by_substitution(Polynomial.zero(("w", "v"))).is_zero()


def test_ec_failure_polynomial_form():
    q = Polynomial.variable("v", ("v",))
    assert ec_failure_polynomial() == 3 * q**2 - 2 * q**3


def test_wire_census():
    census = build_replacement("w").census()
    assert census == {"f": 3, "v": 3, "w": 3}


def test_fanout_replacement_never_fails():
    circuit = build_replacement("f")
    assert circuit.census() == {"f": 3}
    assert enumerate_flow_polynomial(circuit).is_zero()


def test_wire_replacement_preserves_codewords():
    circuit = build_replacement("w")
    for bit in (0, 1):
        out = circuit.simulate([bit] * 3, frozenset())
        assert out == [[bit, bit, bit]]


def test_voter_replacement_computes_majority():
    circuit = build_replacement("v")
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                bits = [a] * 3 + [b] * 3 + [c] * 3
                out = circuit.simulate(bits, frozenset())
                maj = 1 if a + b + c >= 2 else 0
                assert [1 if sum(o) >= 2 else 0 for o in out] == [maj]


def test_all_noiseless_circuit_enumerates_to_zero():
    circuit = build_replacement("f")
    assert enumerate_flow_polynomial(circuit).is_zero()


def test_single_noisy_wire_enumerates_to_its_rate():
    wire = ClassicalLocation(0, "w", (("in", 0),))
    circuit = ClassicalCircuit(
        name="single-wire",
        locations=[wire],
        input_bundles=[[0]],
        output_bundles=[[("loc", 0, 0)]],
        logical_assignment=[0],
        bundle_function=lambda xs: (xs[0],),
    )
    poly = enumerate_flow_polynomial(circuit)
    assert poly == Polynomial.variable("w", ("w",))


def test_probability_normalization():
    for kind in ("w", "v"):
        assert enumeration_is_normalized(build_replacement(kind))


def test_voter_component_independent_of_wire_rate():
    flow = tmr_flow_map()
    assert "w" not in flow.components["v"].used_variables()


def test_enumeration_cap():
    locs = [ClassicalLocation(i, "w", (("in", 0),) if i == 0 else (("loc", i - 1, 0),)) for i in range(25)]
    circuit = ClassicalCircuit(
        name="chain",
        locations=locs,
        input_bundles=[[0]],
        output_bundles=[[("loc", 24, 0)]],
        logical_assignment=[0],
        bundle_function=lambda xs: (xs[0],),
    )
    with pytest.raises(EnumerationTooLargeError):
        enumerate_flow_polynomial(circuit)


def test_netlist_dump_format():
    text = build_replacement("w").netlist()
    lines = text.splitlines()
    assert lines[0].startswith("0 f in0")
    assert any(line.startswith("out0 <-") for line in lines)
    assert sum(1 for line in lines if " v " in line) == 3


def test_derivation_runtime_under_one_second():
    tmr_flow_map.cache_clear()
    start = time.perf_counter()
    tmr_flow_map()
    assert time.perf_counter() - start < 1.0
