"""Exact and shot-based statevector simulation.

Two execution primitives sit on top of the raw state: ``estimator`` returns
observable expectation values and ``sampler`` returns outcome probability
distributions. Both are pure functions of (circuit, values, shots, seed) and
safe to call concurrently. The measurement halves (``expectation``,
``expectation_sampled``, ``sample_state``) also work on a ``Statevector``
directly, which lets gradient and network code reuse prepared states.

Bit ordering is little-endian throughout: qubit 0 is the least significant
bit of a basis index, and outcome bitstrings put qubit 0 first (the most
significant qubit comes last). ``[X q0]`` on two qubits therefore produces
basis index 1 and bitstring "10".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import Circuit
from .errors import CircuitError

MAX_QUBITS = 24

_H_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
_SDG_MATRIX = np.array([[1.0, 0.0], [0.0, -1.0j]], dtype=complex)


def derive_rng(seed: int | None, *task: int) -> np.random.Generator:
    """Seedable, splittable RNG stream for (seed, task indices).

    Streams derived from the same seed but different task tuples are
    statistically independent, so per-entry or per-term work can be
    scheduled in any order without changing results. ``None`` gives a
    fresh nondeterministic generator.
    """
    if seed is None:
        return np.random.default_rng()
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(int(t) for t in task)))


def derive_seed(seed: int | None, *task: int) -> int | None:
    """Integer child seed for (seed, task indices); None stays None."""
    if seed is None:
        return None
    seq = np.random.SeedSequence((int(seed),) + tuple(int(t) for t in task))
    return int(seq.generate_state(1, np.uint64)[0])


def index_to_bitstring(index: int, num_qubits: int) -> str:
    """Little-endian outcome string: character k holds qubit k's bit."""
    return "".join(str((index >> q) & 1) for q in range(num_qubits))


def bitstring_to_index(bits: str) -> int:
    """Inverse of ``index_to_bitstring``."""
    return sum((1 << q) for q, ch in enumerate(bits) if ch == "1")


@dataclass(frozen=True)
class Statevector:
    """2^n complex amplitudes of an n-qubit pure state, unit norm."""

    num_qubits: int
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: "Statevector") -> complex:
        """The overlap <self|other>."""
        if self.num_qubits != other.num_qubits:
            raise CircuitError("statevector widths differ")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class PauliObservable:
    """Real-weighted sum of Pauli strings.

    Strings use the little-endian character order: character k acts on
    qubit k. All strings must share one length.
    """

    terms: tuple[tuple[float, str], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise CircuitError("observable needs at least one term")
        width = len(self.terms[0][1])
        for coeff, string in self.terms:
            if len(string) != width:
                raise CircuitError("all Pauli strings must have the same length")
            if any(ch not in "IXYZ" for ch in string):
                raise CircuitError(f"invalid Pauli string {string!r}")
            if not math.isfinite(coeff):
                raise CircuitError("observable coefficients must be finite")

    @property
    def num_qubits(self) -> int:
        return len(self.terms[0][1])

    @property
    def coefficient_bound(self) -> float:
        """Sum of |coefficients|; expectation values lie within +-bound."""
        return float(sum(abs(c) for c, _ in self.terms))

    @staticmethod
    def z_on(qubit: int, num_qubits: int) -> "PauliObservable":
        string = "".join("Z" if q == qubit else "I" for q in range(num_qubits))
        return PauliObservable(((1.0, string),))


@dataclass(frozen=True)
class QuasiDistribution:
    """Outcome probabilities from the sampler; ``shots`` is None in exact mode."""

    probabilities: dict[str, float]
    shots: int | None = None

    def to_dict(self) -> dict:
        return {
            "shots": "exact" if self.shots is None else self.shots,
            "probs": dict(sorted(self.probabilities.items())),
        }


def _apply_matrix(state: np.ndarray, matrix: np.ndarray, qubit: int) -> np.ndarray:
    """Apply a 2x2 matrix on one qubit of a flat amplitude vector."""
    shaped = state.reshape(-1, 2, 1 << qubit)
    lo = shaped[:, 0, :]
    hi = shaped[:, 1, :]
    out = np.empty_like(shaped)
    out[:, 0, :] = matrix[0, 0] * lo + matrix[0, 1] * hi
    out[:, 1, :] = matrix[1, 0] * lo + matrix[1, 1] * hi
    return out.reshape(-1)


def _apply_x(state: np.ndarray, qubit: int) -> np.ndarray:
    shaped = state.reshape(-1, 2, 1 << qubit)
    return shaped[:, ::-1, :].reshape(-1)


def _apply_rz(state: np.ndarray, angle: float, qubit: int) -> np.ndarray:
    shaped = state.reshape(-1, 2, 1 << qubit).copy()
    shaped[:, 0, :] *= complex(math.cos(angle / 2.0), -math.sin(angle / 2.0))
    shaped[:, 1, :] *= complex(math.cos(angle / 2.0), math.sin(angle / 2.0))
    return shaped.reshape(-1)


@lru_cache(maxsize=4096)
def _controlled_indices(dim: int, conditions: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Flat basis indices whose bits satisfy every (qubit, value) condition."""
    indices = np.arange(dim)
    mask = np.ones(dim, dtype=bool)
    for q, v in conditions:
        mask &= ((indices >> q) & 1) == v
    out = indices[mask]
    out.setflags(write=False)
    return out


def _apply_op(state: np.ndarray, kind: str, target: int,
              controls: tuple[tuple[int, int], ...], angle: float) -> np.ndarray:
    if kind == "H":
        return _apply_matrix(state, _H_MATRIX, target)
    if kind == "X":
        return _apply_x(state, target)
    if kind == "RZ":
        return _apply_rz(state, angle, target)
    if kind == "RY":
        c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
        return _apply_matrix(state, np.array([[c, -s], [s, c]], dtype=complex), target)
    if kind == "RX":
        c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
        return _apply_matrix(state, np.array([[c, -1j * s], [-1j * s, c]], dtype=complex), target)
    dim = state.shape[0]
    if kind == "CX":
        sel = _controlled_indices(dim, controls + ((target, 0),))
        flipped = sel | (1 << target)
        out = state.copy()
        out[sel], out[flipped] = state[flipped], state[sel]
        return out
    if kind == "CZ":
        sel = _controlled_indices(dim, controls + ((target, 1),))
        out = state.copy()
        out[sel] *= -1.0
        return out
    if kind == "CRY":
        sel = _controlled_indices(dim, controls + ((target, 0),))
        paired = sel | (1 << target)
        c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
        out = state.copy()
        lo, hi = state[sel], state[paired]
        out[sel] = c * lo - s * hi
        out[paired] = s * lo + c * hi
        return out
    raise CircuitError(f"unknown gate kind {kind!r}")


def run_ops(num_qubits: int, gates, angles) -> Statevector:
    """Apply gates to |0...0> with one pre-evaluated angle per gate.

    The fast path under ``run`` and the gradient machinery: ``angles[i]``
    is the constant rotation angle for ``gates[i]`` (ignored for
    non-rotation gates).
    """
    if num_qubits > MAX_QUBITS:
        raise CircuitError(
            f"{num_qubits} qubits exceeds the dense statevector limit of {MAX_QUBITS}"
        )
    state = np.zeros(1 << num_qubits, dtype=complex)
    state[0] = 1.0
    for gate, angle in zip(gates, angles):
        state = _apply_op(state, gate.kind, gate.targets[0], gate.controls, angle)
    return Statevector(num_qubits, state)


def run(circuit: Circuit) -> Statevector:
    """Apply all gates in order to |0...0> and return the final state."""
    if circuit.parameters:
        names = ", ".join(p.name for p in circuit.parameters)
        raise CircuitError(f"cannot run circuit with unbound parameters: {names}")
    angles = [g.angle.evaluate({}) if g.angle is not None else 0.0 for g in circuit.gates]
    return run_ops(circuit.num_qubits, circuit.gates, angles)


def _apply_pauli_string(amplitudes: np.ndarray, string: str) -> np.ndarray:
    out = amplitudes
    for qubit, ch in enumerate(string):
        if ch == "I":
            continue
        if ch == "Z":
            shaped = out.reshape(-1, 2, 1 << qubit).copy()
            shaped[:, 1, :] *= -1.0
            out = shaped.reshape(-1)
        elif ch == "X":
            out = _apply_x(out, qubit)
        else:  # Y
            shaped = out.reshape(-1, 2, 1 << qubit)
            flipped = np.empty_like(shaped)
            flipped[:, 1, :] = 1j * shaped[:, 0, :]
            flipped[:, 0, :] = -1j * shaped[:, 1, :]
            out = flipped.reshape(-1)
    return out


def expectation(state: Statevector, observable: PauliObservable) -> float:
    """Exact <state|O|state> for a Pauli-sum observable."""
    if observable.num_qubits != state.num_qubits:
        raise CircuitError(
            f"observable width {observable.num_qubits} != state width {state.num_qubits}"
        )
    total = 0.0 + 0.0j
    for coeff, string in observable.terms:
        total += coeff * np.vdot(state.amplitudes, _apply_pauli_string(state.amplitudes, string))
    return float(total.real)


def _measurement_probabilities(state: Statevector, string: str) -> np.ndarray:
    """Outcome probabilities after rotating each non-I qubit into the Z basis."""
    amps = state.amplitudes
    for qubit, ch in enumerate(string):
        if ch == "X":
            amps = _apply_matrix(amps, _H_MATRIX, qubit)
        elif ch == "Y":
            amps = _apply_matrix(amps, _SDG_MATRIX, qubit)
            amps = _apply_matrix(amps, _H_MATRIX, qubit)
    probs = np.abs(amps) ** 2
    return probs / probs.sum()


@lru_cache(maxsize=1024)
def _eigenvalues(dim: int, string: str) -> np.ndarray:
    """Per-outcome eigenvalue (+-1) of a Pauli string in its measurement basis."""
    parity = np.zeros(dim, dtype=np.int64)
    indices = np.arange(dim)
    for qubit, ch in enumerate(string):
        if ch != "I":
            parity ^= (indices >> qubit) & 1
    out = 1.0 - 2.0 * parity
    out.setflags(write=False)
    return out


def expectation_sampled(
    state: Statevector,
    observable: PauliObservable,
    shots: int,
    seed: int | None = None,
) -> float:
    """Shot-based expectation: each term measured in its own rotated basis.

    Every term gets the full shot budget and an RNG stream derived from
    (seed, term index), so results are deterministic per seed and
    independent of evaluation order.
    """
    if observable.num_qubits != state.num_qubits:
        raise CircuitError(
            f"observable width {observable.num_qubits} != state width {state.num_qubits}"
        )
    if shots < 1:
        raise CircuitError("shots must be a positive integer")
    dim = state.amplitudes.shape[0]
    total = 0.0
    for term_index, (coeff, string) in enumerate(observable.terms):
        if all(ch == "I" for ch in string):
            total += coeff
            continue
        probs = _measurement_probabilities(state, string)
        rng = derive_rng(seed, term_index)
        outcomes = rng.choice(dim, size=shots, p=probs)
        total += coeff * float(_eigenvalues(dim, string)[outcomes].mean())
    return total


def sample_state(state: Statevector, shots: int, seed: int | None = None) -> QuasiDistribution:
    """Empirical outcome frequencies from a seeded draw against |amp|^2."""
    if shots < 1:
        raise CircuitError("shots must be a positive integer")
    probs = state.probabilities()
    rng = derive_rng(seed)
    outcomes = rng.choice(probs.shape[0], size=shots, p=probs / probs.sum())
    values, counts = np.unique(outcomes, return_counts=True)
    freqs = {
        index_to_bitstring(int(i), state.num_qubits): float(c) / shots
        for i, c in zip(values, counts)
    }
    return QuasiDistribution(freqs, shots)


def estimator(
    circuit: Circuit,
    observable: PauliObservable,
    values,
    shots: int | None = None,
    seed: int | None = None,
) -> float:
    """Expectation value of the bound circuit's output state.

    Exact mode (``shots`` None) evaluates the Pauli sum directly; shot mode
    delegates to ``expectation_sampled``.
    """
    state = run(circuit.bind(values))
    if shots is None:
        return expectation(state, observable)
    return expectation_sampled(state, observable, shots, seed)


def sampler(
    circuit: Circuit,
    values,
    shots: int | None = None,
    seed: int | None = None,
) -> QuasiDistribution:
    """Outcome distribution of the bound circuit.

    Exact mode reports squared amplitude magnitudes for every nonzero
    outcome; shot mode reports empirical frequencies from a seeded draw.
    """
    state = run(circuit.bind(values))
    if shots is None:
        probs = state.probabilities()
        return QuasiDistribution(
            {
                index_to_bitstring(i, state.num_qubits): float(p)
                for i, p in enumerate(probs)
                if p > 0.0
            },
            None,
        )
    return sample_state(state, shots, seed)
