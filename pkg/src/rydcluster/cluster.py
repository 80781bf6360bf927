"""Entangling schedules and statevector checks for 1D chains and 2D grids.

Sites are numbered from 1; on a grid, site (r, c) is ``r * cols + c + 1``
with zero-based r and c.  Qubit ``a`` is tensor axis ``a - 1`` of the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError
from .gate_blockade import local_phase_stripped
from .params import GateOutcome

MAX_QUBITS = 16

CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
# Gate produced by both protocols; equals (Z x Z) CZ.
REALIZED = np.diag([1.0, -1.0, -1.0, -1.0]).astype(complex)


@dataclass(frozen=True)
class Geometry:
    kind: str
    shape: tuple

    def __post_init__(self):
        if self.kind == "1d":
            if len(self.shape) != 1 or self.shape[0] < 2:
                raise ParameterError("a chain needs at least 2 sites")
        elif self.kind == "2d":
            if len(self.shape) != 2 or min(self.shape) < 2:
                raise ParameterError("a grid needs at least 2 rows and 2 columns")
        else:
            raise ParameterError(f"unknown geometry kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Geometry":
        """Parse ``1d:N`` or ``2d:RxC``."""
        try:
            kind, size = text.lower().split(":")
            if kind == "1d":
                return cls("1d", (int(size),))
            rows, cols = size.split("x")
            return cls(kind, (int(rows), int(cols)))
        except ValueError:
            raise ParameterError(f"cannot parse geometry {text!r}; use 1d:N or 2d:RxC") from None

    @property
    def n_sites(self) -> int:
        return math.prod(self.shape)

    def chains(self):
        """Rows first, then columns; each chain is a list of site numbers."""
        if self.kind == "1d":
            return [list(range(1, self.shape[0] + 1))], []
        rows, cols = self.shape
        row_chains = [[r * cols + c + 1 for c in range(cols)] for r in range(rows)]
        col_chains = [[r * cols + c + 1 for r in range(rows)] for c in range(cols)]
        return row_chains, col_chains

    def edges(self) -> set:
        row_chains, col_chains = self.chains()
        return {
            (chain[j], chain[j + 1]) for chain in row_chains + col_chains for j in range(len(chain) - 1)
        }

    def neighbors(self, site: int) -> list:
        return sorted({b for a, b in self.edges() if a == site} | {a for a, b in self.edges() if b == site})

    def describe(self) -> str:
        return f"1d:{self.shape[0]}" if self.kind == "1d" else f"2d:{self.shape[0]}x{self.shape[1]}"


@dataclass(frozen=True)
class Schedule:
    rounds: tuple
    geometry: Geometry

    def pairs(self):
        return [pair for rnd in self.rounds for pair in rnd]


# Offsets of the first site of each round's pairs within a block of four.
_ROUND_OFFSETS = (1, 3, 2, 4)


def chain_rounds(chain: list) -> list:
    """Four-round pattern along one chain: (1,2),(3,4),(2,3),(4,5) shifted by 4n."""
    n = len(chain)
    rounds = []
    for start in _ROUND_OFFSETS:
        pairs = [(chain[i - 1], chain[i]) for i in range(start, n, 4)]
        rounds.append(pairs)
    return rounds


def make_schedule(geometry: Geometry | str) -> Schedule:
    g = Geometry.parse(geometry) if isinstance(geometry, str) else geometry
    row_chains, col_chains = g.chains()
    rounds = []
    for chains in (row_chains, col_chains):
        if not chains:
            continue
        per_chain = [chain_rounds(c) for c in chains]
        for j in range(4):
            merged = tuple(pair for rounds_of_chain in per_chain for pair in rounds_of_chain[j])
            if merged:
                rounds.append(merged)
    return Schedule(tuple(rounds), g)


def check_schedule(schedule: Schedule) -> list:
    """Return a list of invariant violations (empty when valid).

    Separation is measured along a chain: two pairs on the same row (or
    column) must have at least two sites between them.
    """
    problems = []
    g = schedule.geometry
    row_chains, col_chains = g.chains()
    position = {}
    for idx, chain in enumerate(row_chains + col_chains):
        for pos, site in enumerate(chain):
            position.setdefault(site, []).append((idx, pos))
    for r, rnd in enumerate(schedule.rounds):
        sites = [s for pair in rnd for s in pair]
        if len(sites) != len(set(sites)):
            problems.append(f"round {r + 1}: pairs overlap")
        for i, p in enumerate(rnd):
            for q in rnd[i + 1:]:
                shared = set.intersection(*({c for c, _ in position[s]} for s in p + q))
                for c in shared:
                    pos_p = [dict(position[s])[c] for s in p]
                    pos_q = [dict(position[s])[c] for s in q]
                    if min(abs(x - y) for x in pos_p for y in pos_q) < 3:
                        problems.append(f"round {r + 1}: pairs {p} and {q} too close")
    edges = [tuple(sorted(p)) for p in schedule.pairs()]
    if len(edges) != len(set(edges)):
        problems.append("an edge is scheduled twice")
    if set(edges) != {tuple(sorted(e)) for e in g.edges()}:
        problems.append("scheduled edges differ from the nearest-neighbour edge set")
    return problems


@dataclass(frozen=True)
class QubitState:
    amplitudes: np.ndarray
    N: int
    frame: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.N > MAX_QUBITS:
            raise ParameterError(f"at most {MAX_QUBITS} qubits are supported")
        if self.amplitudes.shape != (2**self.N,):
            raise ParameterError("amplitude vector length must be 2**N")
        if self.frame is None:
            object.__setattr__(self, "frame", np.zeros(self.N, dtype=np.int8))

    @classmethod
    def plus(cls, N: int) -> "QubitState":
        if N > MAX_QUBITS:
            raise ParameterError(f"at most {MAX_QUBITS} qubits are supported")
        return cls(np.full(2**N, 2 ** (-N / 2), dtype=complex), N)

    @classmethod
    def zeros(cls, N: int) -> "QubitState":
        amps = np.zeros(2**N, dtype=complex)
        amps[0] = 1.0
        return cls(amps, N)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def _is_realized_form(gate: np.ndarray, tol: float = 1e-12) -> bool:
    d = np.diag(gate)
    if not np.allclose(gate, np.diag(d), atol=tol) or abs(d[0]) < tol:
        return False
    return np.allclose(d / d[0], np.diag(REALIZED), atol=tol)


def apply_gate(state: QubitState, pair, gate) -> QubitState:
    """Apply a two-qubit map on sites ``pair`` (1-based); basis index 2*q_a + q_b.

    ``gate`` may be a 4x4 matrix or a length-4 diagonal and need not be
    unitary.  When it is the realized (Z x Z) CZ form, both frame bits toggle
    so that :func:`apply_frame` recovers the CZ result.
    """
    a, b = pair
    if not (1 <= a <= state.N and 1 <= b <= state.N) or a == b:
        raise ParameterError(f"pair {pair} out of range for {state.N} qubits")
    G = np.asarray(gate, dtype=complex)
    if G.shape == (4,):
        G = np.diag(G)
    if G.shape != (4, 4):
        raise ParameterError("gate must be 4x4 or a length-4 diagonal")
    psi = state.amplitudes.reshape((2,) * state.N)
    psi = np.moveaxis(psi, (a - 1, b - 1), (0, 1))
    shape = psi.shape
    out = (G @ psi.reshape(4, -1)).reshape(shape)
    out = np.moveaxis(out, (0, 1), (a - 1, b - 1)).reshape(-1)
    frame = state.frame.copy()
    if _is_realized_form(G):
        frame[a - 1] ^= 1
        frame[b - 1] ^= 1
    return QubitState(out, state.N, frame)


def apply_frame(state: QubitState) -> QubitState:
    """Apply the pending Z corrections and clear the frame."""
    psi = state.amplitudes.reshape((2,) * state.N).copy()
    for q in np.flatnonzero(state.frame):
        idx = [slice(None)] * state.N
        idx[q] = 1
        psi[tuple(idx)] *= -1
    return QubitState(psi.reshape(-1), state.N, np.zeros(state.N, dtype=np.int8))


def gate_from_outcome(outcome: GateOutcome) -> np.ndarray:
    """Diagonal map of a simulated gate with single-qubit phases removed.

    Magnitudes and the conditional phase are kept, so an ideal outcome maps
    to CZ and leakage shows up as lost norm.
    """
    return local_phase_stripped(outcome)


def _resolve_gate(source):
    if isinstance(source, str):
        if source == "ideal":
            return CZ
        if source == "realized":
            return REALIZED
        raise ParameterError(f"unknown gate source {source!r}")
    if isinstance(source, GateOutcome):
        return np.diag(gate_from_outcome(source))
    G = np.asarray(source, dtype=complex)
    return np.diag(G) if G.shape == (4,) else G


def ideal_cluster(geometry: Geometry) -> QubitState:
    state = QubitState.plus(geometry.n_sites)
    for edge in sorted(geometry.edges()):
        state = apply_gate(state, edge, CZ)
    return state


@dataclass(frozen=True)
class ProtocolResult:
    state: QubitState
    fidelity: float
    success_probability: float
    stabilizers: np.ndarray

    def to_dict(self) -> dict:
        return {
            "fidelity_to_ideal": self.fidelity,
            "success_probability": self.success_probability,
            "stabilizers": self.stabilizers.tolist(),
        }


def run_protocol(geometry: Geometry | str, gate_source="ideal") -> ProtocolResult:
    """Prepare |+>^N, apply every scheduled round, then the frame corrections."""
    g = Geometry.parse(geometry) if isinstance(geometry, str) else geometry
    if g.n_sites > MAX_QUBITS:
        raise ParameterError(f"at most {MAX_QUBITS} qubits are supported")
    gate = _resolve_gate(gate_source)
    state = QubitState.plus(g.n_sites)
    for rnd in make_schedule(g).rounds:
        for pair in rnd:
            state = apply_gate(state, pair, gate)
    state = apply_frame(state)
    ideal = ideal_cluster(g)
    fidelity = abs(np.vdot(ideal.amplitudes, state.amplitudes)) ** 2
    return ProtocolResult(state, float(fidelity), state.norm2, stabilizer_expectations(state, g))


def stabilizer_expectations(state: QubitState, geometry: Geometry) -> np.ndarray:
    """<K_a> / <psi|psi> for K_a = X_a prod_{b ~ a} Z_b."""
    N = state.N
    if geometry.n_sites != N:
        raise ParameterError("geometry and state sizes differ")
    psi = state.amplitudes.reshape((2,) * N)
    norm2 = state.norm2
    signs = [np.array([1.0, -1.0]).reshape([2 if ax == q else 1 for ax in range(N)]) for q in range(N)]
    out = np.empty(N)
    for a in range(1, N + 1):
        phi = psi
        for b in geometry.neighbors(a):
            phi = phi * signs[b - 1]
        phi = np.flip(phi, axis=a - 1)
        out[a - 1] = float(np.vdot(psi, phi).real) / norm2
    return out


def with_frame(state: QubitState, frame) -> QubitState:
    return replace(state, frame=np.asarray(frame, dtype=np.int8))
