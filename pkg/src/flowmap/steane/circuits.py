"""Level-1 [[7,1,3]] replacement circuits as timed Clifford schedules.

Each replacement (extended rectangle) is syndrome-based error correction
followed by a transversal implementation of the location.  Error correction
is Steane-style: a verified logical |+> ancilla is coupled from the data and
measured in Z to read the X-error syndrome, then a verified logical |0>
ancilla is coupled into the data and measured in X for the Z-error syndrome.

Each logical ancilla gets one verification round against the error type it
could copy onto the data: the ancilla is coupled to an identically prepared
checker block in the direction that carries the dangerous errors onto the
checker, the checker is measured transversally, and a nonzero Hamming
syndrome rejects the ancilla for re-preparation.

Wait locations fill every idle step of a live qubit; the factories run one
after the other, so the data idles through both and the X ancilla idles
while the Z factory runs.  Location counts per kind are documented in
``ExRec.census``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

#: the five location kinds
KINDS = ("1", "2", "w", "1m", "p")

#: Hamming [7,4,3] checks; column j reads as the binary integer j+1
H_MATRIX = np.array(
    [
        [1, 0, 1, 0, 1, 0, 1],
        [0, 1, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ],
    dtype=np.uint8,
)

#: support of the logical operators (a weight-3 Hamming codeword)
LOGICAL_SUPPORT = (0, 1, 2)

# verified encoder wirings (statevector-checked against the stabilizers)
_ZERO_H = (0, 1, 3)
_ZERO_CNOTS = (((1, 2), (3, 5), (0, 4)), ((1, 6), (0, 2), (3, 4)), ((1, 5), (4, 6)))
_PLUS_H = (2, 4, 5, 6)
_PLUS_CNOTS = (((2, 1), (5, 3), (4, 0)), ((6, 1), (2, 0), (4, 3)), ((5, 1), (6, 4)))


@dataclass(frozen=True)
class GateOp:
    """One timed gate; every op is a fallible location tagged with its kind."""

    t: int
    gate: str  # PZ PX H U CNOT W MZ MX
    qubits: tuple[int, ...]
    kind: str
    reg: str | None = None
    bit: int = 0
    loc: int = -1


@dataclass(frozen=True)
class AncillaFactory:
    """A logical ancilla block, its checker, and the verification readout.

    ``ops`` is the retried unit: on verification failure the whole factory
    re-runs (with fresh faults by default).
    """

    name: str
    basis: str  # "plus" or "zero"
    block: tuple[int, ...]
    checker: tuple[int, ...]
    ops: tuple[GateOp, ...]
    verify_reg: str


@dataclass(frozen=True)
class EcRound:
    """One Steane error-correction round on one data block."""

    name: str
    block: tuple[int, ...]
    x_factory: AncillaFactory
    z_factory: AncillaFactory
    interlude_ops: tuple[GateOp, ...]  # fixed idle waits between factories
    couple_ops: tuple[GateOp, ...]
    x_reg: str
    z_reg: str


@dataclass(frozen=True)
class ExRec:
    """An extended rectangle: EC per operand plus a transversal stage."""

    kind: str
    name: str
    n_qubits: int
    data_blocks: tuple[tuple[int, ...], ...]
    ec_rounds: tuple[EcRound, ...]
    tail_ops: tuple[GateOp, ...]
    registers: dict[str, int]
    final_reg: str | None = None
    locations: tuple[GateOp, ...] = field(default_factory=tuple)

    def census(self) -> dict[str, int]:
        out = {k: 0 for k in KINDS}
        for op in self.locations:
            out[op.kind] += 1
        return out

    def schedule_text(self) -> str:
        """Text export, one location per line: ``t gate qubits kind``."""
        lines = [f"# {self.name}: {self.n_qubits} qubits, {len(self.locations)} locations"]
        for op in sorted(self.locations, key=lambda o: (o.t, o.qubits)):
            qs = ",".join(str(q) for q in op.qubits)
            tag = f" -> {op.reg}[{op.bit}]" if op.reg else ""
            lines.append(f"{op.t}\t{op.gate}\t{qs}\t{op.kind}{tag}")
        return "\n".join(lines)


class _Schedule:
    """Collects ops; gate kind conventions live here."""

    def __init__(self):
        self.ops: list[GateOp] = []

    def prep_z(self, t: int, qubits: Iterable[int]):
        for q in qubits:
            self.ops.append(GateOp(t, "PZ", (q,), "p"))

    def hadamard(self, t: int, qubits: Iterable[int]):
        for q in qubits:
            self.ops.append(GateOp(t, "H", (q,), "1"))

    def unitary(self, t: int, qubits: Iterable[int], kind: str = "1"):
        for q in qubits:
            self.ops.append(GateOp(t, "U", (q,), kind))

    def cnot(self, t: int, pairs: Iterable[tuple[int, int]]):
        for c, tq in pairs:
            self.ops.append(GateOp(t, "CNOT", (c, tq), "2"))

    def wait(self, t: int, qubits: Iterable[int]):
        for q in qubits:
            self.ops.append(GateOp(t, "W", (q,), "w"))

    def measure(self, t: int, qubits: Iterable[int], basis: str, reg: str):
        gate = "MZ" if basis == "z" else "MX"
        for i, q in enumerate(qubits):
            self.ops.append(GateOp(t, gate, (q,), "1m", reg=reg, bit=i))


def _encoder(s: _Schedule, t0: int, block: tuple[int, ...], basis: str) -> int:
    """Five-step logical encoder; returns the next free time step."""
    h_local, rounds = (_ZERO_H, _ZERO_CNOTS) if basis == "zero" else (_PLUS_H, _PLUS_CNOTS)
    s.prep_z(t0, block)
    s.hadamard(t0 + 1, [block[i] for i in h_local])
    s.wait(t0 + 1, [q for i, q in enumerate(block) if i not in h_local])
    for r, pairs in enumerate(rounds):
        t = t0 + 2 + r
        busy = {i for pair in pairs for i in pair}
        s.cnot(t, [(block[c], block[tq]) for c, tq in pairs])
        s.wait(t, [q for i, q in enumerate(block) if i not in busy])
    return t0 + 5


def _build_factory(
    name: str, basis: str, block: tuple[int, ...], checker: tuple[int, ...], t0: int
) -> tuple[AncillaFactory, int]:
    """Encode the ancilla and its checker in parallel, couple, and measure.

    A |+> ancilla can leak correlated Z onto the data (it is the target of
    the syndrome coupling), so its checker is coupled checker->ancilla and
    measured in X, which collects exactly those Z errors.  A |0> ancilla
    leaks X (it couples as control), so it is coupled ancilla->checker and
    the checker is measured in Z.
    """
    s = _Schedule()
    t = _encoder(s, t0, block, basis)
    _encoder(s, t0, checker, basis)
    reg = f"{name}.verify"
    if basis == "plus":
        s.cnot(t, [(c, a) for c, a in zip(checker, block)])
        s.measure(t + 1, checker, "x", reg)
    else:
        s.cnot(t, [(a, c) for a, c in zip(block, checker)])
        s.measure(t + 1, checker, "z", reg)
    s.wait(t + 1, block)
    return AncillaFactory(name, basis, block, checker, tuple(s.ops), reg), t + 2


def _build_ec_round(name: str, block: tuple[int, ...], pool: list[int], t0: int) -> tuple[EcRound, int]:
    """One EC round; consumes 28 ancilla qubits from the pool."""
    ax_block = tuple(pool[0:7])
    cx_block = tuple(pool[7:14])
    az_block = tuple(pool[14:21])
    dz_block = tuple(pool[21:28])
    del pool[:28]

    x_factory, t1 = _build_factory(f"{name}.ax", "plus", ax_block, cx_block, t0)
    z_factory, t2 = _build_factory(f"{name}.az", "zero", az_block, dz_block, t1)

    inter = _Schedule()
    for t in range(t1, t2):
        inter.wait(t, ax_block)  # X ancilla idles while the Z factory runs

    couple = _Schedule()
    for t in range(t0, t2):
        couple.wait(t, block)  # data idles through both factories
    x_reg, z_reg = f"{name}.sx", f"{name}.sz"
    couple.cnot(t2, [(d, a) for d, a in zip(block, ax_block)])
    couple.wait(t2, az_block)
    couple.measure(t2 + 1, ax_block, "z", x_reg)
    couple.cnot(t2 + 1, [(a, d) for a, d in zip(az_block, block)])
    couple.measure(t2 + 2, az_block, "x", z_reg)
    couple.wait(t2 + 2, block)

    round_ = EcRound(
        name=name,
        block=block,
        x_factory=x_factory,
        z_factory=z_factory,
        interlude_ops=tuple(inter.ops),
        couple_ops=tuple(couple.ops),
        x_reg=x_reg,
        z_reg=z_reg,
    )
    return round_, t2 + 3


def _assemble(kind: str, name: str, blocks, rounds, tail_ops, registers, n_qubits, final_reg=None) -> ExRec:
    ordered: list[GateOp] = []
    for rnd in rounds:
        ordered.extend(rnd.x_factory.ops)
        ordered.extend(rnd.z_factory.ops)
        ordered.extend(rnd.interlude_ops)
        ordered.extend(rnd.couple_ops)
    ordered.extend(tail_ops)
    located = [dataclasses.replace(op, loc=i) for i, op in enumerate(ordered)]
    by_id = {id(op): new for op, new in zip(ordered, located)}

    def relocate(ops):
        return tuple(by_id[id(op)] for op in ops)

    new_rounds = tuple(
        dataclasses.replace(
            rnd,
            x_factory=dataclasses.replace(rnd.x_factory, ops=relocate(rnd.x_factory.ops)),
            z_factory=dataclasses.replace(rnd.z_factory, ops=relocate(rnd.z_factory.ops)),
            interlude_ops=relocate(rnd.interlude_ops),
            couple_ops=relocate(rnd.couple_ops),
        )
        for rnd in rounds
    )
    return ExRec(
        kind=kind,
        name=name,
        n_qubits=n_qubits,
        data_blocks=tuple(tuple(b) for b in blocks),
        ec_rounds=new_rounds,
        tail_ops=relocate(tail_ops),
        registers=registers,
        final_reg=final_reg,
        locations=tuple(located),
    )


def build_ec() -> ExRec:
    """A bare error-correction round on one data block (no transversal stage)."""
    block = tuple(range(7))
    pool = list(range(7, 35))
    rnd, _ = _build_ec_round("ec0", block, pool, 0)
    registers = {rnd.x_factory.verify_reg: 7, rnd.z_factory.verify_reg: 7, rnd.x_reg: 7, rnd.z_reg: 7}
    return _assemble("ec", "ec", [block], [rnd], (), registers, 35)


def build_exrec(kind: str) -> ExRec:
    """Replacement circuit for one location kind.

    One-qubit-like kinds (1, w, 1m, p) get one EC plus a transversal stage;
    a two-qubit gate gets an EC per logical operand plus a transversal CNOT.
    The measured kind ends in the transversal measurement with no trailing
    error correction; preparation is modeled as a one-qubit-rate transversal
    stage.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown location kind {kind!r}; expected one of {KINDS}")
    n_blocks = 2 if kind == "2" else 1
    blocks = [tuple(range(35 * b, 35 * b + 7)) for b in range(n_blocks)]
    rounds = []
    registers: dict[str, int] = {}
    t_end = 0
    for b, block in enumerate(blocks):
        pool = list(range(35 * b + 7, 35 * b + 35))
        rnd, t_end = _build_ec_round(f"ec{b}", block, pool, 0)
        rounds.append(rnd)
        registers.update({rnd.x_factory.verify_reg: 7, rnd.z_factory.verify_reg: 7, rnd.x_reg: 7, rnd.z_reg: 7})

    tail = _Schedule()
    final_reg = None
    if kind == "1":
        tail.unitary(t_end, blocks[0], kind="1")
    elif kind == "w":
        tail.wait(t_end, blocks[0])
    elif kind == "p":
        tail.unitary(t_end, blocks[0], kind="p")
    elif kind == "1m":
        final_reg = "meas"
        registers["meas"] = 7
        tail.measure(t_end, blocks[0], "z", final_reg)
    else:  # kind == "2"
        tail.cnot(t_end, list(zip(blocks[0], blocks[1])))

    return _assemble(
        kind,
        f"exrec({kind})",
        blocks,
        rounds,
        tuple(tail.ops),
        registers,
        35 * n_blocks,
        final_reg=final_reg,
    )
