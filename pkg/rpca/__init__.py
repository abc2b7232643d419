"""Matrix-free randomized low-rank SVD with power-iteration sketching."""

from rpca.errors import ContractViolation, FormatError, InputOutputError, NumericalBreakdown, RpcaError
from rpca.kernels import householder_qr, orthonormal_range_k, small_svd
from rpca.linop import (
    CallbackOperator,
    DenseOperator,
    HadamardSpectrumOperator,
    LinearOperator,
    Shape,
    SparseCsrOperator,
    apply_block,
    apply_transpose_block,
    fwht_in_place,
)
from rpca.randsvd import LowRankFactors, SketchParams, approximate, cost_report, gaussian_matrix
from rpca.specnorm import NormEstimate, certify, estimate_spectral_norm, residual_operator
from rpca.theory import BoundParams, BoundReport, accuracy_bound, auxiliary_bounds, success_probability

__version__ = "0.1.0"
