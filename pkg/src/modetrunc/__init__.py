"""Low mode-rank recompression of bilinear operations on 3-tensors.

The package works with three-way tensors in Tucker-like formats (canonical,
Tucker, Kronecker-structured cores arising from Hadamard products) and
truncates them back to low mode-rank orthonormal Tucker form using a cross
approximation of the Gram matrices of the unfoldings.

Index convention, frozen everywhere: in a written multi-index such as "jk"
the first listed index varies fastest, consistent with column-major
vectorization a[ij] = A[i, j].
"""

from .errors import ResourceCapError
from .dense import (
    unfold,
    fold,
    mode_mul,
    frob_inner,
    frob_norm,
    matrix_2norm,
    row_kron,
    read_tkr,
    write_tkr,
)
from .formats import (
    DenseCore,
    DiagCore,
    KronCore,
    TuckerLike,
    TuckerOrtho,
    from_canonical,
    hadamard,
    linear_combine,
    to_dense,
    structured_inner,
    structured_norm_sq,
    frob_distance,
    residual_frob_norm,
    accuracy_constant_cF,
    save_tucker,
    load_tucker,
)
from .cross import (
    CoreGram,
    GramOracle,
    CrossState,
    core_grams,
    gram_diag,
    gram_column,
    rediagonalize,
    run_cross,
    mode_subspace,
    eigensplit_stop,
    oracle_from_matrix,
)
from .truncate import (
    TruncationConfig,
    TruncationReport,
    truncate,
    refine_als,
    error_bound,
)
from . import baselines
from .bench import BenchConfig, BenchReport, gen_density, run_pipeline, core_memory_mb

__all__ = [
    "ResourceCapError",
    "unfold", "fold", "mode_mul", "frob_inner", "frob_norm", "matrix_2norm",
    "row_kron", "read_tkr", "write_tkr",
    "DenseCore", "DiagCore", "KronCore", "TuckerLike", "TuckerOrtho",
    "from_canonical", "hadamard", "linear_combine", "to_dense",
    "structured_inner", "structured_norm_sq", "frob_distance",
    "residual_frob_norm", "accuracy_constant_cF", "save_tucker", "load_tucker",
    "CoreGram", "GramOracle", "CrossState", "core_grams", "gram_diag",
    "gram_column", "rediagonalize", "run_cross", "mode_subspace",
    "eigensplit_stop", "oracle_from_matrix",
    "TruncationConfig", "TruncationReport", "truncate", "refine_als",
    "error_bound",
    "baselines",
    "BenchConfig", "BenchReport", "gen_density", "run_pipeline",
    "core_memory_mb",
]
