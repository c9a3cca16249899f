"""Quantum machine learning on an exact, seedable statevector simulator.

Everything runs in-process: parameterized circuits, an exact/shot-based
simulator with sampler and estimator primitives, compute-uncompute fidelity
kernels, shift-rule and SPSA gradients, quantum neural networks, variational
and kernel classifiers/regressors, and Bayesian-network inference.
"""

from .bayesian import (
    BayesianNetwork,
    BayesNode,
    Query,
    RejectionResult,
    compile_network,
    exact_inference,
    network_from_dict,
    network_to_dict,
    rejection_inference,
)
from .circuits import (
    AngleExpr,
    Circuit,
    Gate,
    Parameter,
    circuit_from_dict,
    circuit_to_dict,
    real_amplitudes_ansatz,
    zz_feature_map,
)
from .errors import (
    CircuitError,
    DataError,
    ModelFormatError,
    NoSupportError,
    QmlkitError,
    UnsupportedParameterError,
)
from .fidelity import FidelityJob, compute_uncompute
from .gradients import (
    GradientRequest,
    SpsaGradientConfig,
    finite_difference,
    param_shift_gradient,
    shift_rule_jacobian,
    spsa_gradient,
)
from .kernels import (
    KernelMatrix,
    TrainableKernelSpec,
    kernel_alignment,
    kernel_entry,
    kernel_matrix,
    trainable_kernel_matrix,
    train_kernel,
)
from .models import (
    Dataset,
    SvmModel,
    VqcModel,
    VqrModel,
    load_model,
    model_from_dict,
    model_to_dict,
    pegasos_fit,
    qsvc_fit,
    save_model,
    svm_predict,
    vqc_fit,
    vqc_predict,
    vqr_fit,
    vqr_predict,
)
from .networks import EstimatorQnn, SamplerQnn, identity_interpret, parity_interpret
from .optimizers import OptimizerConfig, OptimizeResult, minimize
from .simulator import (
    MAX_QUBITS,
    PauliObservable,
    QuasiDistribution,
    Statevector,
    derive_rng,
    derive_seed,
    estimator,
    expectation,
    index_to_bitstring,
    bitstring_to_index,
    run,
    sampler,
)

__version__ = "0.1.0"
