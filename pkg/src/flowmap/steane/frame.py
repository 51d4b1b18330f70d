"""Vectorized Pauli-frame execution of exrec schedules.

Frames are (trials, qubits) bit arrays for X and Z errors, propagated
through the standard Clifford conjugations (CNOT copies X control-to-target
and Z target-to-control; H swaps the two).  Measurements record frame bits
into classical registers: the simulated circuits make every ideal outcome
either deterministic or used only through Hamming syndromes, so outcome
flips are all the decoder needs.

Faults follow the depolarizing model: a failing one-qubit location applies
X, Y or Z with equal weight; a failing two-qubit location applies one of
the fifteen nontrivial Pauli pairs.  A Pauli component that stabilizes a
freshly prepared state (Z after a |0> preparation, X after |+>) is dropped
at the preparation, which keeps the frame physical.

Verification rejections re-run the ancilla factory: with fresh faults under
the default ``resample`` policy (the retry costs more exposure), fault-free
under ``free`` (post-selection without cost) and in deterministic overlay
runs (the injected fault was already consumed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import ExRec, GateOp, H_MATRIX, LOGICAL_SUPPORT

#: syndrome integer of qubit j is j+1 (Hamming column reads as binary)
_COLS = np.array([1, 2, 3, 4, 5, 6, 7], dtype=np.uint8)

# two-qubit Pauli pairs: code k in 1..15 -> (k // 4, k % 4) with 0=I,1=X,2=Y,3=Z
_PAIR_XC = np.array([0] + [1 if (k // 4) in (1, 2) else 0 for k in range(1, 16)], dtype=np.uint8)
_PAIR_ZC = np.array([0] + [1 if (k // 4) in (2, 3) else 0 for k in range(1, 16)], dtype=np.uint8)
_PAIR_XT = np.array([0] + [1 if (k % 4) in (1, 2) else 0 for k in range(1, 16)], dtype=np.uint8)
_PAIR_ZT = np.array([0] + [1 if (k % 4) in (2, 3) else 0 for k in range(1, 16)], dtype=np.uint8)

_PAULI_X = np.array([0, 1, 1, 0], dtype=np.uint8)  # code 1=X, 2=Y, 3=Z
_PAULI_Z = np.array([0, 0, 1, 1], dtype=np.uint8)

#: retries per factory before giving up and keeping the last preparation
RETRY_CAP = 24

Overlay = dict[int, tuple[np.ndarray, np.ndarray]]  # loc -> (trial rows, pauli codes)


def syndrome_int(bits: np.ndarray) -> np.ndarray:
    """Hamming syndrome of (trials, 7) bit rows as integers 0..7."""
    return np.bitwise_xor.reduce(bits * _COLS[None, :], axis=1)


def logical_parity(bits: np.ndarray) -> np.ndarray:
    return bits[:, LOGICAL_SUPPORT].sum(axis=1).astype(np.uint8) & 1


def decode_block(bits: np.ndarray) -> np.ndarray:
    """Correct one Hamming error, then read the logical parity."""
    s = syndrome_int(bits)
    corrected = logical_parity(bits).copy()
    hit = s > 0
    flip_on_logical = np.isin(s[hit] - 1, LOGICAL_SUPPORT)
    corrected[hit] ^= flip_on_logical.astype(np.uint8)
    return corrected


@dataclass
class RunStats:
    trials: int
    failures: int
    retry_rounds: int = 0
    retry_overflow: int = 0


class _Executor:
    def __init__(
        self,
        exrec: ExRec,
        trials: int,
        rates: dict[str, float] | None,
        rng: np.random.Generator | None,
        overlay: Overlay | None,
        retry_policy: str = "resample",
    ):
        self.exrec = exrec
        self.trials = trials
        self.rates = rates or {}
        self.rng = rng
        self.overlay = overlay
        self.retry_policy = retry_policy
        self.x = np.zeros((trials, exrec.n_qubits), dtype=np.uint8)
        self.z = np.zeros((trials, exrec.n_qubits), dtype=np.uint8)
        self.regs = {name: np.zeros((trials, size), dtype=np.uint8) for name, size in exrec.registers.items()}
        self.stats = RunStats(trials, 0)

    # -- fault injection ------------------------------------------------

    def _fault_rows(self, op: GateOp, mask: np.ndarray | None, faulty: bool):
        """Rows that fail at this op and their Pauli codes; mask None = all."""
        if not faulty:
            return None, None
        if self.overlay is not None:
            hit = self.overlay.get(op.loc)
            if hit is None:
                return None, None
            rows, codes = hit
            if mask is None:
                return rows, codes
            keep = mask[rows]
            return rows[keep], codes[keep]
        rate = self.rates.get(op.kind, 0.0)
        if rate <= 0.0 or self.rng is None:
            return None, None
        n_paulis = 15 if op.gate == "CNOT" else 3
        u = self.rng.random(self.trials)
        fails = u < rate if mask is None else (u < rate) & mask
        rows = np.nonzero(fails)[0]
        if rows.size == 0:
            return None, None
        codes = np.minimum((u[rows] * (n_paulis / rate)).astype(np.int64), n_paulis - 1) + 1
        return rows, codes

    def _apply_pauli_1q(self, q: int, rows, codes):
        if rows is None:
            return
        self.x[rows, q] ^= _PAULI_X[codes]
        self.z[rows, q] ^= _PAULI_Z[codes]

    # -- gate semantics ---------------------------------------------------

    def run_ops(self, ops, mask: np.ndarray | None, faulty: bool = True):
        """Apply a run of gates; mask selects the trials (None for all)."""
        x, z = self.x, self.z
        rows_all = slice(None) if mask is None else mask
        for op in ops:
            g = op.gate
            if g == "CNOT":
                c, t = op.qubits
                x[rows_all, t] ^= x[rows_all, c]
                z[rows_all, c] ^= z[rows_all, t]
                rows, codes = self._fault_rows(op, mask, faulty)
                if rows is not None:
                    x[rows, c] ^= _PAIR_XC[codes]
                    z[rows, c] ^= _PAIR_ZC[codes]
                    x[rows, t] ^= _PAIR_XT[codes]
                    z[rows, t] ^= _PAIR_ZT[codes]
                continue
            q = op.qubits[0]
            if g in ("PZ", "PX"):
                x[rows_all, q] = 0
                z[rows_all, q] = 0
                rows, codes = self._fault_rows(op, mask, faulty)
                self._apply_pauli_1q(q, rows, codes)
                if g == "PZ":
                    z[rows_all, q] = 0  # Z stabilizes |0>
                else:
                    x[rows_all, q] = 0  # X stabilizes |+>
            elif g == "H":
                tmp = x[rows_all, q].copy()
                x[rows_all, q] = z[rows_all, q]
                z[rows_all, q] = tmp
                rows, codes = self._fault_rows(op, mask, faulty)
                self._apply_pauli_1q(q, rows, codes)
            elif g in ("U", "W"):
                rows, codes = self._fault_rows(op, mask, faulty)
                self._apply_pauli_1q(q, rows, codes)
            elif g == "MZ":
                rows, codes = self._fault_rows(op, mask, faulty)
                self._apply_pauli_1q(q, rows, codes)
                self.regs[op.reg][rows_all, op.bit] = x[rows_all, q]
            elif g == "MX":
                rows, codes = self._fault_rows(op, mask, faulty)
                self._apply_pauli_1q(q, rows, codes)
                self.regs[op.reg][rows_all, op.bit] = z[rows_all, q]
            else:
                raise ValueError(f"unknown gate {g!r}")

    # -- factory retries --------------------------------------------------

    def run_factory(self, factory):
        self.run_ops(factory.ops, None, faulty=True)
        retry_faulty = self.overlay is None and self.retry_policy == "resample"
        for _ in range(RETRY_CAP):
            rejected = syndrome_int(self.regs[factory.verify_reg]) > 0
            if not rejected.any():
                return
            self.stats.retry_rounds += 1
            self.run_ops(factory.ops, rejected, faulty=retry_faulty)
        still = syndrome_int(self.regs[factory.verify_reg]) > 0
        self.stats.retry_overflow += int(still.sum())

    # -- corrections and verdicts ----------------------------------------

    def apply_corrections(self, rnd):
        block = np.asarray(rnd.block)
        for reg, frame in ((rnd.x_reg, self.x), (rnd.z_reg, self.z)):
            s = syndrome_int(self.regs[reg])
            rows = np.nonzero(s > 0)[0]
            if rows.size:
                frame[rows, block[s[rows] - 1]] ^= 1

    def verdict(self) -> np.ndarray:
        exrec = self.exrec
        if exrec.final_reg is not None:
            return decode_block(self.regs[exrec.final_reg]) == 1
        fail = np.zeros(self.trials, dtype=bool)
        for block in exrec.data_blocks:
            cols = np.asarray(block)
            fail |= decode_block(self.x[:, cols]) == 1
            fail |= decode_block(self.z[:, cols]) == 1
        return fail

    def run(self, input_x: np.ndarray | None = None, input_z: np.ndarray | None = None) -> np.ndarray:
        if input_x is not None:
            self.x[:, : input_x.shape[1]] = input_x
        if input_z is not None:
            self.z[:, : input_z.shape[1]] = input_z
        for rnd in self.exrec.ec_rounds:
            self.run_factory(rnd.x_factory)
            self.run_factory(rnd.z_factory)
            self.run_ops(rnd.interlude_ops, None, faulty=True)
            self.run_ops(rnd.couple_ops, None, faulty=True)
            self.apply_corrections(rnd)
        self.run_ops(self.exrec.tail_ops, None, faulty=True)
        failures = self.verdict()
        self.stats.failures = int(failures.sum())
        return failures


def run_trials(
    exrec: ExRec,
    rates: dict[str, float],
    trials: int,
    rng: np.random.Generator,
    retry_policy: str = "resample",
    input_x: np.ndarray | None = None,
    input_z: np.ndarray | None = None,
) -> tuple[np.ndarray, RunStats]:
    """Monte-Carlo batch; returns the per-trial failure flags and stats."""
    ex = _Executor(exrec, trials, rates, rng, overlay=None, retry_policy=retry_policy)
    failures = ex.run(input_x, input_z)
    return failures, ex.stats


def run_overlay(
    exrec: ExRec,
    overlay: Overlay,
    trials: int,
    input_x: np.ndarray | None = None,
    input_z: np.ndarray | None = None,
) -> np.ndarray:
    """Deterministic batch with explicit fault assignments per location."""
    ex = _Executor(exrec, trials, None, None, overlay=overlay)
    return ex.run(input_x, input_z)


_PAULI_CODE_1Q = {"X": 1, "Y": 2, "Z": 3}
_PAULI_INDEX = {"I": 0, "X": 1, "Y": 2, "Z": 3}


def pauli_code(op_gate: str, pauli) -> int:
    """Overlay code for a fault: 'X'/'Y'/'Z' on one-qubit ops, a pair like
    ('X', 'I') on CNOTs."""
    if op_gate == "CNOT":
        a, b = pauli
        code = _PAULI_INDEX[a] * 4 + _PAULI_INDEX[b]
        if code == 0:
            raise ValueError("two-qubit fault must be nontrivial")
        return code
    return _PAULI_CODE_1Q[pauli]


def propagate_pauli(exrec: ExRec, faults: dict[int, object]) -> bool:
    """Deterministic single-run oracle: explicit Pauli per failed location.

    Returns True when the run succeeds (no residual logical error).
    """
    op_by_loc = {op.loc: op for op in exrec.locations}
    overlay: Overlay = {}
    for loc, pauli in faults.items():
        code = pauli_code(op_by_loc[loc].gate, pauli)
        overlay[loc] = (np.array([0]), np.array([code]))
    failures = run_overlay(exrec, overlay, 1)
    return not bool(failures[0])


def single_fault_cases(exrec: ExRec) -> list[tuple[int, object]]:
    cases: list[tuple[int, object]] = []
    for op in exrec.locations:
        if op.gate == "CNOT":
            for a in "IXYZ":
                for b in "IXYZ":
                    if a == b == "I":
                        continue
                    cases.append((op.loc, (a, b)))
        else:
            for p in "XYZ":
                cases.append((op.loc, p))
    return cases


def sweep_single_faults(exrec: ExRec) -> list[tuple[int, object]]:
    """Run every single-fault case in one vectorized batch.

    Returns the failing (location, pauli) cases; fault tolerance to distance
    three means the list must be empty.
    """
    cases = single_fault_cases(exrec)
    op_by_loc = {op.loc: op for op in exrec.locations}
    per_loc: dict[int, tuple[list[int], list[int]]] = {}
    for t, (loc, pauli) in enumerate(cases):
        rows, codes = per_loc.setdefault(loc, ([], []))
        rows.append(t)
        codes.append(pauli_code(op_by_loc[loc].gate, pauli))
    overlay: Overlay = {
        loc: (np.array(rows), np.array(codes)) for loc, (rows, codes) in per_loc.items()
    }
    failures = run_overlay(exrec, overlay, len(cases))
    return [cases[i] for i in np.nonzero(failures)[0]]
