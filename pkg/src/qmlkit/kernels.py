"""Fidelity quantum kernels and alignment-based kernel training.

A kernel entry is the squared overlap between the feature-map states of two
samples. Entries are pure functions of (data, shots, per-entry seed), so a
Gram matrix can be filled in any order; the symmetric case evaluates only
the upper triangle and mirrors it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circuits import Circuit, Parameter
from .errors import CircuitError, DataError
from .fidelity import FidelityJob, compute_uncompute
from .optimizers import OptimizeResult, OptimizerConfig, minimize
from .simulator import derive_rng, derive_seed


@dataclass(frozen=True)
class KernelMatrix:
    """Gram matrix of fidelities plus references to the data that produced it."""

    entries: np.ndarray
    row_data: np.ndarray
    col_data: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class TrainableKernelSpec:
    """Feature map whose first ``data_count`` parameters carry the sample.

    The remaining parameters are trainable and get bound by ``train_kernel``
    (or by hand) before any kernel entry is evaluated.
    """

    feature_map: Circuit
    data_count: int

    def __post_init__(self) -> None:
        if not 0 <= self.data_count <= self.feature_map.num_parameters:
            raise CircuitError(
                f"data_count {self.data_count} outside 0..{self.feature_map.num_parameters}"
            )

    @property
    def trainable_count(self) -> int:
        return self.feature_map.num_parameters - self.data_count

    @property
    def trainable_parameters(self) -> tuple[Parameter, ...]:
        return self.feature_map.parameters[self.data_count :]


def _as_dataset(X, feature_map: Circuit, name: str) -> np.ndarray:
    data = np.atleast_2d(np.asarray(X, dtype=float))
    if data.shape[1] != feature_map.num_parameters:
        raise DataError(
            f"{name} has {data.shape[1]} features but the feature map takes "
            f"{feature_map.num_parameters} data parameters"
        )
    return data


def kernel_entry(
    feature_map: Circuit,
    x,
    y,
    shots: int | None = None,
    seed: int | None = None,
) -> float:
    """Fidelity between the feature-map states of two samples."""
    return compute_uncompute(
        FidelityJob(feature_map, feature_map, tuple(x), tuple(y), shots=shots, seed=seed)
    )


def kernel_matrix(
    feature_map: Circuit,
    X,
    Y=None,
    shots: int | None = None,
    seed: int | None = None,
) -> KernelMatrix:
    """Gram matrix of fidelities between feature-map states.

    With ``Y`` absent the matrix is symmetric: only the upper triangle is
    evaluated and mirrored, and the diagonal is pinned to 1 in exact mode
    (shot mode samples it like any other entry). Entry (i, j) uses the RNG
    stream derived from (seed, i*cols + j), so results do not depend on
    evaluation order.
    """
    rows = _as_dataset(X, feature_map, "X")
    if Y is None:
        m = rows.shape[0]
        entries = np.eye(m)
        for i in range(m):
            for j in range(i, m):
                if i == j and shots is None:
                    continue
                value = kernel_entry(
                    feature_map, rows[i], rows[j], shots=shots, seed=derive_seed(seed, i * m + j)
                )
                entries[i, j] = value
                entries[j, i] = value
        return KernelMatrix(entries, rows, rows)
    cols = _as_dataset(Y, feature_map, "Y")
    entries = np.zeros((rows.shape[0], cols.shape[0]))
    for i in range(rows.shape[0]):
        for j in range(cols.shape[0]):
            entries[i, j] = kernel_entry(
                feature_map,
                rows[i],
                cols[j],
                shots=shots,
                seed=derive_seed(seed, i * cols.shape[0] + j),
            )
    return KernelMatrix(entries, rows, cols)


def trainable_kernel_matrix(
    spec: TrainableKernelSpec,
    train_values,
    X,
    Y=None,
    shots: int | None = None,
    seed: int | None = None,
) -> KernelMatrix:
    """Kernel matrix with the trainable parameters pre-bound on both sides."""
    train_values = np.asarray(train_values, dtype=float)
    if train_values.shape != (spec.trainable_count,):
        raise CircuitError(
            f"expected {spec.trainable_count} trainable values, got {train_values.shape}"
        )
    bound_map = spec.feature_map.bind_partial(
        dict(zip(spec.trainable_parameters, train_values))
    )
    return kernel_matrix(bound_map, X, Y, shots=shots, seed=seed)


def kernel_alignment(K, labels) -> float:
    """Cosine similarity between the kernel and the label outer product.

    Returns <K, yy^T>_F / (||K||_F * ||yy^T||_F), in [-1, 1].
    """
    entries = np.asarray(getattr(K, "entries", K), dtype=float)
    y = np.asarray(labels, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise DataError("alignment needs a square kernel matrix")
    if y.shape != (entries.shape[0],):
        raise DataError(f"expected {entries.shape[0]} labels, got {y.shape}")
    target = np.outer(y, y)
    denom = np.linalg.norm(entries) * np.linalg.norm(target)
    if denom == 0.0:
        raise DataError("alignment undefined for an all-zero kernel")
    return float(np.sum(entries * target) / denom)


def train_kernel(
    spec: TrainableKernelSpec,
    X,
    labels,
    optimizer_config: OptimizerConfig | None = None,
    seed: int | None = None,
    initial=None,
) -> OptimizeResult:
    """Tune the trainable feature-map parameters by maximizing alignment.

    Minimizes ``1 - alignment`` with the configured optimizer (SPSA when no
    config is given) in exact mode. ``best_point`` holds the trained values;
    ``history`` the per-iteration objective. With no trainable parameters
    the objective is evaluated once and returned unchanged.
    """
    y = np.asarray(labels, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("kernel training expects labels in {-1, +1}")
    data = _as_dataset(X, spec.feature_map.bind_partial(
        {p: 0.0 for p in spec.trainable_parameters}
    ), "X")
    if optimizer_config is None:
        optimizer_config = OptimizerConfig(kind="spsa", max_iterations=100, seed=seed)
    elif optimizer_config.seed is None:
        optimizer_config = replace(optimizer_config, seed=seed)

    def objective(values: np.ndarray) -> float:
        K = trainable_kernel_matrix(spec, values, data)
        return 1.0 - kernel_alignment(K, y)

    if initial is None:
        initial = derive_rng(seed, 1).uniform(-0.1, 0.1, size=spec.trainable_count)
    initial = np.asarray(initial, dtype=float)
    if initial.shape != (spec.trainable_count,):
        raise CircuitError(
            f"expected {spec.trainable_count} initial values, got {initial.shape}"
        )
    return minimize(objective, None, initial, optimizer_config)
