"""Shared generators and independent oracles for the test suite.

The oracles here deliberately avoid the library code paths they check:
the SVM dual oracle is projected gradient ascent on the boxed dual, and
the Bayesian oracle enumerates CPT products directly.
"""

from __future__ import annotations

import itertools

import numpy as np

from qmlkit import AngleExpr, BayesianNetwork, BayesNode, Circuit, Gate, Parameter, PauliObservable


def random_supported_circuit(
    rng: np.random.Generator,
    num_qubits: int | None = None,
    max_qubits: int = 3,
    max_params: int = 6,
    max_gates: int = 10,
) -> tuple[Circuit, np.ndarray]:
    """Random circuit whose every parameter occurrence is shift-differentiable.

    Parameters may repeat across gates (multi-occurrence product rule) and
    enter with either sign.
    """
    n = int(rng.integers(1, max_qubits + 1)) if num_qubits is None else num_qubits
    num_gates = int(rng.integers(3, max_gates + 1))
    circuit = Circuit(n)
    params: list[Parameter] = []
    kinds = ["H", "X", "RX", "RY", "RZ"] + (["CX", "CZ"] if n > 1 else [])
    for _ in range(num_gates):
        kind = str(rng.choice(kinds))
        if kind in ("H", "X"):
            circuit = circuit.append(Gate(kind, (int(rng.integers(n)),)))
            continue
        if kind in ("CX", "CZ"):
            control, target = rng.choice(n, size=2, replace=False)
            circuit = circuit.append(Gate(kind, (int(target),), ((int(control), 1),)))
            continue
        roll = rng.uniform()
        if roll < 0.2 or (roll < 0.6 and len(params) >= max_params):
            angle = AngleExpr.constant(float(rng.uniform(-np.pi, np.pi)))
        else:
            if params and (roll < 0.6 or len(params) >= max_params):
                p = params[int(rng.integers(len(params)))]
            else:
                p = Parameter(f"p{len(params)}")
                params.append(p)
            sign = -1.0 if rng.uniform() < 0.5 else 1.0
            if rng.uniform() < 0.5:
                angle = AngleExpr(sign, ((0.0, 1.0, p),))
            else:
                angle = AngleExpr(1.0, ((0.0, sign, p),))
        circuit = circuit.append(Gate(kind, (int(rng.integers(n)),), angle=angle))
    if not circuit.parameters:
        p = Parameter("p0")
        circuit = circuit.append(Gate.ry(p, int(rng.integers(n))))
    values = rng.uniform(-np.pi, np.pi, circuit.num_parameters)
    return circuit, values


def random_bound_circuit(rng: np.random.Generator, num_qubits: int, max_gates: int = 12) -> Circuit:
    """Random parameterless circuit over the full gate set, CRY included."""
    circuit = Circuit(num_qubits)
    kinds = ["H", "X", "RX", "RY", "RZ"]
    if num_qubits > 1:
        kinds += ["CX", "CZ", "CRY"]
    for _ in range(int(rng.integers(3, max_gates + 1))):
        kind = str(rng.choice(kinds))
        angle = float(rng.uniform(-np.pi, np.pi))
        if kind in ("H", "X"):
            circuit = circuit.append(Gate(kind, (int(rng.integers(num_qubits)),)))
        elif kind in ("RX", "RY", "RZ"):
            circuit = circuit.append(Gate(kind, (int(rng.integers(num_qubits)),), angle=AngleExpr.constant(angle)))
        elif kind == "CRY":
            count = int(rng.integers(1, num_qubits))
            chosen = rng.choice(num_qubits, size=count + 1, replace=False)
            controls = [(int(q), int(rng.integers(2))) for q in chosen[:-1]]
            circuit = circuit.append(Gate.cry(angle, controls, int(chosen[-1])))
        else:
            control, target = rng.choice(num_qubits, size=2, replace=False)
            circuit = circuit.append(Gate(kind, (int(target),), ((int(control), 1),)))
    return circuit


def random_observable(
    rng: np.random.Generator, num_qubits: int, alphabet: str = "IZX", max_terms: int = 2
) -> PauliObservable:
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        while True:
            string = "".join(rng.choice(list(alphabet), size=num_qubits))
            if any(ch != "I" for ch in string):
                break
        coeff = float(rng.uniform(0.2, 1.0)) * (-1.0 if rng.uniform() < 0.5 else 1.0)
        terms.append((coeff, string))
    return PauliObservable(tuple(terms))


# --- SVM dual oracle -------------------------------------------------------


def svm_dual_objective(alpha: np.ndarray, K: np.ndarray, y: np.ndarray) -> float:
    """Soft-margin dual value sum(a) - 0.5 a'(yy'*K)a."""
    Q = K * np.outer(y, y)
    return float(alpha.sum() - 0.5 * alpha @ (Q @ alpha))


def project_dual_feasible(alpha: np.ndarray, y: np.ndarray, C: float) -> np.ndarray:
    """Euclidean projection onto {0 <= a <= C, y.a = 0}.

    Solves y @ clip(alpha - mu*y, 0, C) = 0 for mu; the left side is
    piecewise linear and nonincreasing in mu, so evaluating it at every
    clip breakpoint and interpolating inside the crossing segment is exact.
    """
    breakpoints = np.unique(
        np.concatenate(
            [alpha[y > 0] - C, alpha[y > 0], -alpha[y < 0], C - alpha[y < 0]]
        )
    )
    values = np.clip(alpha[None, :] - breakpoints[:, None] * y[None, :], 0.0, C) @ y
    crossing = np.nonzero(values <= 0.0)[0]
    if crossing.size == 0:
        mu = breakpoints[-1]
    elif crossing[0] == 0:
        mu = breakpoints[0]
    else:
        k = crossing[0]
        left, right = values[k - 1], values[k]
        span = breakpoints[k] - breakpoints[k - 1]
        mu = breakpoints[k - 1] + span * left / (left - right)
    return np.clip(alpha - mu * y, 0.0, C)


def brute_force_svm_dual(
    K: np.ndarray, y: np.ndarray, C: float, iterations: int = 4000
) -> tuple[np.ndarray, float]:
    """Global dual maximum by projected gradient ascent from several starts.

    The dual is concave, so any feasible start converges; multiple starts
    are insurance against slow faces of the box.
    """
    Q = K * np.outer(y, y)
    lipschitz = float(np.linalg.norm(Q, 2)) + 1e-9
    step = 1.0 / lipschitz
    best_alpha, best_value = None, -np.inf
    m = len(y)
    starts = [np.zeros(m), np.full(m, C / 2.0), np.full(m, C)]
    for start in starts:
        alpha = project_dual_feasible(start, y, C)
        for _ in range(iterations):
            gradient = 1.0 - Q @ alpha
            alpha = project_dual_feasible(alpha + step * gradient, y, C)
        value = svm_dual_objective(alpha, K, y)
        if value > best_value:
            best_alpha, best_value = alpha, value
    return best_alpha, best_value


def svm_bias_from_alpha(alpha: np.ndarray, K: np.ndarray, y: np.ndarray, C: float) -> float:
    """Textbook bias: average over unbounded support vectors, KKT midpoint fallback."""
    decision = (alpha * y) @ K
    unbounded = (alpha > 1e-6 * C) & (alpha < C * (1.0 - 1e-6))
    if unbounded.any():
        return float(np.mean(y[unbounded] - decision[unbounded]))
    grad = (K * np.outer(y, y)) @ alpha - 1.0
    score = -y * grad
    up = ((y > 0) & (alpha < C - 1e-9)) | ((y < 0) & (alpha > 1e-9))
    low = ((y > 0) & (alpha > 1e-9)) | ((y < 0) & (alpha < C - 1e-9))
    if not (up.any() and low.any()):
        return 0.0
    return float((np.max(score[up]) + np.min(score[low])) / 2.0)


# --- Bayesian network oracle ----------------------------------------------


def random_network(rng: np.random.Generator, max_nodes: int = 4) -> BayesianNetwork:
    n = int(rng.integers(1, max_nodes + 1))
    nodes = []
    for i in range(n):
        fan_in = int(rng.integers(0, min(i, 3) + 1))
        parents = tuple(
            f"n{j}" for j in sorted(rng.choice(i, size=fan_in, replace=False))
        )
        cpt = {
            "".join(bits): float(rng.uniform())
            for bits in itertools.product("01", repeat=fan_in)
        }
        nodes.append(BayesNode(f"n{i}", parents, cpt))
    return BayesianNetwork(tuple(nodes))


def enumerate_joint(bn: BayesianNetwork) -> np.ndarray:
    """CPT-product joint over all assignments, indexed little-endian by node order."""
    n = len(bn.nodes)
    position = {node.name: q for q, node in enumerate(bn.nodes)}
    joint = np.zeros(2**n)
    for index in range(2**n):
        bits = [(index >> q) & 1 for q in range(n)]
        p = 1.0
        for q, node in enumerate(bn.nodes):
            key = "".join(str(bits[position[parent]]) for parent in node.parents)
            p_one = node.cpt[key]
            p *= p_one if bits[q] else 1.0 - p_one
        joint[index] = p
    return joint
