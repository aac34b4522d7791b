"""Choi-matrix tools for exchangeable sequences of quantum operations.

Submodules:

* :mod:`qdefinetti.linalg` - Kronecker products, partial traces, permutation operators
* :mod:`qdefinetti.states` - density operators and state-level exchangeability
* :mod:`qdefinetti.channels` - channels as Choi matrices, CP/TP, symmetry, extendibility
* :mod:`qdefinetti.definetti` - mixtures of tensor powers, moments, weight recovery
* :mod:`qdefinetti.tomography` - Bayesian process tomography over a channel dictionary
* :mod:`qdefinetti.io` - JSON file formats
"""
from .channels import (
    Channel,
    SVector,
    apply,
    channel_from_action,
    channel_from_kraus,
    is_channel_extension,
    is_cp,
    is_symmetric_channel,
    is_tp,
    jamiolkowski,
    permute_channel,
    phi_from_svector,
    random_cptp,
    svector_from_phi,
    tensor_power,
)
from .definetti import (
    MixtureEnsemble,
    extract_weights,
    mixture_power,
    moment_trace,
    tp_violation_scan,
    uniqueness_probe,
    verify_exchangeable_prefix,
)
from .linalg import Permutation, TensorSpace, hermitian_eigenvalues, kron, partial_trace, permutation_operator
from .states import DensityOperator, StateEnsemble, max_entangled, permute_state, state_mixture_power

__version__ = "0.1.0"
