"""Maximum-likelihood reconstruction of CPTP quantum channels.

Four reconstruction methods share one data model: unconstrained linear
inversion, a likelihood fit that only fixes ``Tr S = N``, and two fits that
impose the full trace-preservation condition ``Tr_K S = 1_H`` (a retracted
downhill simplex and a multiplier fixed-point iteration).
"""

__version__ = "0.1.0"

from .channels import (
    ChoiMatrix,
    CptpReport,
    KrausSet,
    apply_channel,
    choi_from_kraus,
    preset_channel,
    process_fidelity,
    verify_cptp,
)
from .compare import ComparisonReport, closure_residual, compare_methods
from .errors import (
    CptpMaxlikError,
    DegenerateFactorError,
    DomainError,
    InvalidArgumentError,
    InvalidStartError,
    NotApplicableError,
    NotInformationallyCompleteError,
    NumericalFailureError,
)
from .kernels import BACKEND
from .likelihood import effective_log_likelihood, log_likelihood, r_operator
from .linalg import herm_eig, kron, partial_trace_k, psd_power
from .optimize import SolverConfig, nelder_mead
from .solvers import (
    METHODS,
    ReconstructionResult,
    cptp_retraction,
    reconstruct,
    reconstruct_linear,
    reconstruct_maxlik_iterative,
    reconstruct_maxlik_loose,
    reconstruct_maxlik_simplex,
)
from .tomography import (
    CountsDataset,
    TomographyDesign,
    balanced_qubit_design,
    exact_dataset,
    exact_probabilities,
    sample_counts,
    simulate,
    standard_qubit_design,
)
