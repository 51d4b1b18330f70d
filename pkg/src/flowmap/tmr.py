"""Classical [3,1,3] repetition-code circuits and their exact failure maps.

Three location types: a wire copies a bit and flips it when it fails, a
voter outputs the majority of three bits and flips that output when it
fails, and a fanout makes three noiseless copies.  Replacement circuits
put an error-correction stage (fanouts feeding voters) in front of a
transversal implementation of the original location.

Failure probabilities are derived by exhaustive fault enumeration with
exact rational coefficients, so the two-variable wire map and the
one-variable voter map come out coefficient-exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable

from .errors import DerivationInconsistencyError, EnumerationTooLargeError
from .poly import FlowMap, Polynomial

WIRE = "w"
VOTER = "v"
FANOUT = "f"

#: canonical variable order for classical maps
KIND_ORDER = (WIRE, VOTER)

_ARITY = {WIRE: (1, 1), VOTER: (3, 1), FANOUT: (1, 3)}

#: maximum fallible locations for exhaustive enumeration (2^24 patterns)
ENUMERATION_CAP = 24

# a wiring source: ("in", input_port) or ("loc", location_index, out_port)
Source = tuple


@dataclass(frozen=True)
class ClassicalLocation:
    index: int
    kind: str
    inputs: tuple[Source, ...]

    def __post_init__(self):
        n_in, _ = _ARITY[self.kind]
        if len(self.inputs) != n_in:
            raise ValueError(f"{self.kind} location takes {n_in} inputs, got {len(self.inputs)}")

    @property
    def fallible(self) -> bool:
        return self.kind != FANOUT

    @property
    def n_outputs(self) -> int:
        return _ARITY[self.kind][1]


@dataclass
class ClassicalCircuit:
    """Topologically ordered location list plus bundle structure.

    ``input_bundles`` groups circuit input ports into 3-bit code bundles and
    ``logical_assignment`` says which logical bit each bundle replicates
    (voters inside the recursive construction always see three bundles
    carrying the same bit, so their enumeration input space is the
    replicated one).  ``bundle_function`` is the truth table the circuit
    must realize bundle-wise, checked exhaustively at build time.
    """

    name: str
    locations: list[ClassicalLocation]
    input_bundles: list[list[int]]
    output_bundles: list[list[Source]]
    logical_assignment: list[int]
    bundle_function: Callable[[tuple], tuple]
    _n_inputs: int = field(default=0)

    def __post_init__(self):
        self._n_inputs = sum(len(b) for b in self.input_bundles)
        seen_inputs = sorted(p for b in self.input_bundles for p in b)
        if seen_inputs != list(range(self._n_inputs)):
            raise ValueError("input bundles must partition the input ports")
        for loc in self.locations:
            for src in loc.inputs:
                self._check_source(src, loc.index)
        for bundle in self.output_bundles:
            for src in bundle:
                self._check_source(src, len(self.locations))

    def _check_source(self, src: Source, before: int) -> None:
        tag = src[0]
        if tag == "in":
            if not 0 <= src[1] < self._n_inputs:
                raise ValueError(f"bad input port {src}")
        elif tag == "loc":
            _, li, port = src
            if not 0 <= li < before:
                raise ValueError(f"source {src} is not earlier in topological order")
            if not 0 <= port < self.locations[li].n_outputs:
                raise ValueError(f"bad output port {src}")
        else:
            raise ValueError(f"bad source {src}")

    @property
    def n_logical(self) -> int:
        return max(self.logical_assignment) + 1

    def fallible_locations(self) -> list[ClassicalLocation]:
        return [loc for loc in self.locations if loc.fallible]

    def census(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for loc in self.locations:
            out[loc.kind] = out.get(loc.kind, 0) + 1
        return out

    def simulate(self, input_bits: list[int], failed: frozenset[int] | set[int]) -> list[list[int]]:
        """Run the circuit and return the raw bits of each output bundle.

        Failed locations compute correctly, then flip their output bit;
        fanouts never fail.
        """
        values: list[tuple[int, ...]] = []

        def read(src: Source) -> int:
            if src[0] == "in":
                return input_bits[src[1]]
            return values[src[1]][src[2]]

        for loc in self.locations:
            ins = [read(s) for s in loc.inputs]
            if loc.kind == WIRE:
                out = (ins[0] ^ (loc.index in failed),)
            elif loc.kind == VOTER:
                maj = 1 if ins[0] + ins[1] + ins[2] >= 2 else 0
                out = (maj ^ (loc.index in failed),)
            else:
                out = (ins[0], ins[0], ins[0])
            values.append(out)
        return [[read(s) for s in bundle] for bundle in self.output_bundles]

    def netlist(self) -> str:
        """Debug dump: one location per line, ``id kind in-ports -> out-ports``."""
        lines = []
        for loc in self.locations:
            ins = ",".join(
                f"in{p[1]}" if p[0] == "in" else f"L{p[1]}.{p[2]}" for p in loc.inputs
            )
            outs = ",".join(f"L{loc.index}.{k}" for k in range(loc.n_outputs))
            lines.append(f"{loc.index} {loc.kind} {ins} -> {outs}")
        for bi, bundle in enumerate(self.output_bundles):
            srcs = ",".join(
                f"in{p[1]}" if p[0] == "in" else f"L{p[1]}.{p[2]}" for p in bundle
            )
            lines.append(f"out{bi} <- {srcs}")
        return "\n".join(lines)


def _majority(bits) -> int:
    bits = tuple(bits)
    return 1 if 2 * sum(bits) > len(bits) else 0


class _Builder:
    def __init__(self):
        self.locations: list[ClassicalLocation] = []

    def add(self, kind: str, *inputs: Source) -> int:
        loc = ClassicalLocation(len(self.locations), kind, tuple(inputs))
        self.locations.append(loc)
        return loc.index

    def ec_stage(self, bundle: list[Source]) -> list[Source]:
        """Fanout each bundle bit, then three voters rebuild the corrected bundle."""
        fans = [self.add(FANOUT, src) for src in bundle]
        corrected = []
        for i in range(3):
            v = self.add(VOTER, *(("loc", f, i) for f in fans))
            corrected.append(("loc", v, 0))
        return corrected


def build_replacement(kind: str) -> ClassicalCircuit:
    """Replacement-rule circuit for one location at the next level.

    The wire replacement is an error-correction stage followed by three
    transversal wires; the voter replacement corrects each input bundle
    and then votes transversally; the fanout replacement is three
    noiseless fanouts.  Functionality against the original location is
    checked exhaustively over bundle codewords.
    """
    b = _Builder()
    if kind == WIRE:
        bundle = [("in", i) for i in range(3)]
        corrected = b.ec_stage(bundle)
        wires = [b.add(WIRE, src) for src in corrected]
        circuit = ClassicalCircuit(
            name="R(w)",
            locations=b.locations,
            input_bundles=[[0, 1, 2]],
            output_bundles=[[("loc", w, 0) for w in wires]],
            logical_assignment=[0],
            bundle_function=lambda xs: (xs[0],),
        )
    elif kind == VOTER:
        bundles = [[("in", 3 * k + i) for i in range(3)] for k in range(3)]
        corrected = [b.ec_stage(bundle) for bundle in bundles]
        voters = [b.add(VOTER, *(corrected[k][i] for k in range(3))) for i in range(3)]
        circuit = ClassicalCircuit(
            name="R(v)",
            locations=b.locations,
            input_bundles=[[0, 1, 2], [3, 4, 5], [6, 7, 8]],
            output_bundles=[[("loc", v, 0) for v in voters]],
            logical_assignment=[0, 0, 0],
            bundle_function=lambda xs: (_majority(xs),),
        )
    elif kind == FANOUT:
        fans = [b.add(FANOUT, ("in", i)) for i in range(3)]
        circuit = ClassicalCircuit(
            name="R(f)",
            locations=b.locations,
            input_bundles=[[0, 1, 2]],
            output_bundles=[[("loc", f, j) for f in fans] for j in range(3)],
            logical_assignment=[0],
            bundle_function=lambda xs: (xs[0], xs[0], xs[0]),
        )
    else:
        raise ValueError(f"unknown location kind {kind!r}")
    check_functionality(circuit)
    return circuit


def check_functionality(circuit: ClassicalCircuit) -> None:
    """Fault-free circuit must decode to the location's truth table on every
    combination of bundle codewords."""
    n_bundles = len(circuit.input_bundles)
    for values in itertools.product((0, 1), repeat=n_bundles):
        bits = [0] * sum(len(bu) for bu in circuit.input_bundles)
        for bu, val in zip(circuit.input_bundles, values):
            for port in bu:
                bits[port] = val
        outputs = circuit.simulate(bits, frozenset())
        expected = circuit.bundle_function(values)
        decoded = tuple(_majority(out) for out in outputs)
        if decoded != expected:
            raise DerivationInconsistencyError(
                f"{circuit.name} maps bundles {values} to {decoded}, expected {expected}"
            )


def _pattern_fails(circuit: ClassicalCircuit, failed: frozenset[int]) -> bool:
    """A pattern fails when some codeword input decodes wrongly."""
    for logical in itertools.product((0, 1), repeat=circuit.n_logical):
        bits = [0] * sum(len(bu) for bu in circuit.input_bundles)
        for bu, lbit in zip(circuit.input_bundles, circuit.logical_assignment):
            for port in bu:
                bits[port] = logical[lbit]
        outputs = circuit.simulate(bits, failed)
        expected = circuit.bundle_function(tuple(logical[l] for l in circuit.logical_assignment))
        if tuple(_majority(out) for out in outputs) != expected:
            return True
    return False


def _count_failing_patterns(circuit: ClassicalCircuit) -> tuple[dict, dict[str, int]]:
    """Failing-pattern counts keyed by per-kind fault multiplicity."""
    fallible = circuit.fallible_locations()
    if len(fallible) > ENUMERATION_CAP:
        raise EnumerationTooLargeError(
            f"{circuit.name} has {len(fallible)} fallible locations (cap {ENUMERATION_CAP})"
        )
    kinds = tuple(k for k in KIND_ORDER if any(loc.kind == k for loc in fallible))
    totals = {k: sum(1 for loc in fallible if loc.kind == k) for k in kinds}
    counts: dict[tuple, int] = {}
    indices = [loc.index for loc in fallible]
    kind_of = {loc.index: loc.kind for loc in fallible}
    for mask in range(1 << len(indices)):
        failed = frozenset(indices[i] for i in range(len(indices)) if mask >> i & 1)
        if _pattern_fails(circuit, failed):
            key = tuple(sum(1 for f in failed if kind_of[f] == k) for k in kinds)
            counts[key] = counts.get(key, 0) + 1
    return counts, totals


def enumerate_flow_polynomial(circuit: ClassicalCircuit) -> Polynomial:
    """Exact failure probability of a replacement circuit.

    Sums, over every failing fault pattern, the product of gamma factors for
    failed locations and (1 - gamma) factors for working ones, expanded into
    distributed form with rational coefficients.
    """
    counts, totals = _count_failing_patterns(circuit)
    kinds = tuple(totals)
    poly = Polynomial.zero(kinds)
    for key, n in counts.items():
        term = Polynomial.constant(Fraction(n), kinds)
        for k, a in zip(kinds, key):
            g = Polynomial.variable(k, kinds)
            term = term * g**a * (1 - g) ** (totals[k] - a)
        poly = poly + term
    return poly


def enumeration_is_normalized(circuit: ClassicalCircuit) -> bool:
    """Failing plus succeeding pattern probability must be 1 symbolically."""
    counts, totals = _count_failing_patterns(circuit)
    kinds = tuple(totals)
    succeed: dict[tuple, int] = {}
    for key in itertools.product(*(range(totals[k] + 1) for k in kinds)):
        ways = 1
        for k, a in zip(kinds, key):
            ways *= comb(totals[k], a)
        rest = ways - counts.get(key, 0)
        if rest:
            succeed[key] = rest
    total = Polynomial.zero(kinds)
    for source in (counts, succeed):
        for key, n in source.items():
            term = Polynomial.constant(Fraction(n), kinds)
            for k, a in zip(kinds, key):
                g = Polynomial.variable(k, kinds)
                term = term * g**a * (1 - g) ** (totals[k] - a)
            total = total + term
    return total == Polynomial.constant(1, kinds)


def ec_failure_polynomial() -> Polynomial:
    """Majority-of-three error-correction failure: 3 q^2 (1-q) + q^3 in the
    voter rate."""
    q = Polynomial.variable(VOTER, (VOTER,))
    return 3 * q**2 * (1 - q) + q**3


def voter_map_by_substitution(wire_poly: Polynomial) -> Polynomial:
    """Voter map from the wire map: the transversal unit becomes a voter and
    the per-lane error-correction unit fails like a majority-of-three."""
    v = Polynomial.variable(VOTER, (VOTER,))
    return wire_poly.substitute({WIRE: v, VOTER: ec_failure_polynomial()})


@lru_cache(maxsize=1)
def tmr_flow_map() -> FlowMap:
    """Exact two-variable flow map of the repetition code.

    The wire component comes from enumerating R(w); the voter component from
    the substitution rule, cross-checked against direct enumeration of R(v).
    """
    wire_poly = enumerate_flow_polynomial(build_replacement(WIRE))._aligned(KIND_ORDER)
    voter_sub = voter_map_by_substitution(wire_poly)
    voter_direct = enumerate_flow_polynomial(build_replacement(VOTER))
    if voter_sub.named_terms() != voter_direct.named_terms():
        raise DerivationInconsistencyError(
            "substitution-derived voter map disagrees with direct enumeration of R(v)"
        )
    if WIRE in voter_sub.used_variables():
        raise DerivationInconsistencyError("voter map must not depend on the wire rate")
    return FlowMap(KIND_ORDER, {WIRE: wire_poly, VOTER: voter_sub._aligned(KIND_ORDER)})
