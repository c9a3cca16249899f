"""Bayesian networks over binary variables, compiled to quantum circuits.

Each node becomes one qubit; every conditional probability row becomes one
controlled RY whose controls pin the parent assignment and whose angle
2*arcsin(sqrt(p)) puts amplitude sqrt(p) on the node's |1>. The circuit's
exact outcome distribution is then the network's joint distribution.
Conditional queries run either by enumeration or by rejection sampling of
the compiled circuit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

from .circuits import Circuit, Gate
from .errors import CircuitError, ModelFormatError, NoSupportError
from .simulator import MAX_QUBITS, derive_rng, run

_SAMPLE_BATCH = 4096


@dataclass(frozen=True)
class BayesNode:
    """One binary variable: name, parent names, and P(node=1 | parents).

    CPT keys are parent bitstrings in parent-list order; the root key is "".
    """

    name: str
    parents: tuple[str, ...] = ()
    cpt: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        expected = {"".join(bits) for bits in itertools.product("01", repeat=len(self.parents))}
        if set(self.cpt) != expected:
            raise CircuitError(
                f"node {self.name!r} needs CPT entries for exactly the keys {sorted(expected)}"
            )
        for key, p in self.cpt.items():
            if not (0.0 <= p <= 1.0):
                raise CircuitError(f"node {self.name!r} CPT[{key!r}] = {p} outside [0, 1]")


@dataclass(frozen=True)
class BayesianNetwork:
    """Topologically ordered nodes; parents always refer to earlier nodes."""

    nodes: tuple[BayesNode, ...]

    def __post_init__(self) -> None:
        if not self.nodes:
            raise CircuitError("network needs at least one node")
        seen: set[str] = set()
        for node in self.nodes:
            if node.name in seen:
                raise CircuitError(f"duplicate node name {node.name!r}")
            for parent in node.parents:
                if parent not in seen:
                    raise CircuitError(
                        f"node {node.name!r} references {parent!r} before it is defined"
                    )
            seen.add(node.name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(node.name for node in self.nodes)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise CircuitError(f"unknown node {name!r}") from None


@dataclass(frozen=True)
class Query:
    """P(target = target_value | evidence), evidence possibly empty."""

    target: str
    target_value: int
    evidence: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.target in self.evidence:
            raise CircuitError(f"target {self.target!r} cannot also be evidence")
        for name, bit in {**{self.target: self.target_value}, **self.evidence}.items():
            if bit not in (0, 1):
                raise CircuitError(f"{name!r} must be queried as 0 or 1, got {bit}")


class RejectionResult(NamedTuple):
    estimate: float
    accepted: int


def compile_network(bn: BayesianNetwork) -> Circuit:
    """One qubit per node; one (controlled) RY per CPT row."""
    n = len(bn.nodes)
    if n > MAX_QUBITS:
        raise CircuitError(f"{n} nodes exceeds the simulator limit of {MAX_QUBITS} qubits")
    circuit = Circuit(n)
    indices = {node.name: q for q, node in enumerate(bn.nodes)}
    for q, node in enumerate(bn.nodes):
        for bits in itertools.product("01", repeat=len(node.parents)):
            key = "".join(bits)
            angle = 2.0 * math.asin(math.sqrt(node.cpt[key]))
            if not node.parents:
                circuit = circuit.append(Gate.ry(angle, q))
            else:
                controls = [(indices[p], int(b)) for p, b in zip(node.parents, bits)]
                circuit = circuit.append(Gate.cry(angle, controls, q))
    return circuit


def _joint_probability(bn: BayesianNetwork, assignment: Sequence[int]) -> float:
    joint = 1.0
    indices = {name: q for q, name in enumerate(bn.names)}
    for q, node in enumerate(bn.nodes):
        key = "".join(str(assignment[indices[p]]) for p in node.parents)
        p_one = node.cpt[key]
        joint *= p_one if assignment[q] else 1.0 - p_one
    return joint


_ENUMERATION_LIMIT = 20


def exact_inference(bn: BayesianNetwork, query: Query) -> float:
    """P(target = v | evidence) by summing CPT products over all assignments."""
    if len(bn.nodes) > _ENUMERATION_LIMIT:
        raise CircuitError(
            f"{len(bn.nodes)} nodes exceeds the enumeration limit of {_ENUMERATION_LIMIT}"
        )
    target = bn.index_of(query.target)
    evidence = {bn.index_of(name): bit for name, bit in query.evidence.items()}
    numerator = 0.0
    denominator = 0.0
    for assignment in itertools.product((0, 1), repeat=len(bn.nodes)):
        if any(assignment[q] != bit for q, bit in evidence.items()):
            continue
        joint = _joint_probability(bn, assignment)
        denominator += joint
        if assignment[target] == query.target_value:
            numerator += joint
    if denominator <= 0.0:
        raise NoSupportError(f"evidence {dict(query.evidence)!r} has zero probability")
    return numerator / denominator


def rejection_inference(
    bn: BayesianNetwork,
    query: Query,
    shots: int,
    seed: int | None = None,
) -> RejectionResult:
    """Sample the compiled circuit, discard evidence-inconsistent draws, estimate.

    Sampling happens in fixed batches with per-batch RNG streams, so the
    merged estimate is independent of how batches are scheduled. Zero
    accepted samples raise NoSupportError.
    """
    if shots < 1:
        raise CircuitError("shots must be a positive integer")
    target = bn.index_of(query.target)
    evidence = {bn.index_of(name): bit for name, bit in query.evidence.items()}
    probs = run(compile_network(bn)).probabilities()
    probs = probs / probs.sum()
    evidence_mask = 0
    evidence_bits = 0
    for q, bit in evidence.items():
        evidence_mask |= 1 << q
        evidence_bits |= bit << q
    accepted = 0
    hits = 0
    for batch_index, start in enumerate(range(0, shots, _SAMPLE_BATCH)):
        batch = min(_SAMPLE_BATCH, shots - start)
        rng = derive_rng(seed, batch_index)
        outcomes = rng.choice(probs.shape[0], size=batch, p=probs)
        keep = (outcomes & evidence_mask) == evidence_bits
        accepted += int(keep.sum())
        hits += int((keep & (((outcomes >> target) & 1) == query.target_value)).sum())
    if accepted == 0:
        raise NoSupportError(
            f"no samples out of {shots} were consistent with evidence {dict(query.evidence)!r}"
        )
    return RejectionResult(hits / accepted, accepted)


# --- JSON interchange -----------------------------------------------------


def network_to_dict(bn: BayesianNetwork) -> dict:
    return {
        "nodes": [
            {"name": node.name, "parents": list(node.parents), "cpt": dict(node.cpt)}
            for node in bn.nodes
        ]
    }


def network_from_dict(data: dict) -> BayesianNetwork:
    if not isinstance(data, dict) or "nodes" not in data:
        raise ModelFormatError("nodes", "missing field")
    if not isinstance(data["nodes"], list):
        raise ModelFormatError("nodes", "expected a list")
    nodes = []
    for i, entry in enumerate(data["nodes"]):
        where = f"nodes[{i}]"
        if not isinstance(entry, dict):
            raise ModelFormatError(where, "expected an object")
        try:
            nodes.append(
                BayesNode(
                    str(entry["name"]),
                    tuple(str(p) for p in entry.get("parents", [])),
                    {str(k): float(v) for k, v in entry["cpt"].items()},
                )
            )
        except (KeyError, TypeError, ValueError, CircuitError) as exc:
            raise ModelFormatError(where, str(exc)) from exc
    try:
        return BayesianNetwork(tuple(nodes))
    except CircuitError as exc:
        raise ModelFormatError("nodes", str(exc)) from exc
