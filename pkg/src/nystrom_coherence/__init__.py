"""Nystrom low-rank approximation of SPSD matrices and matrix coherence."""

from .coherence import (
    CoherenceReport,
    SamplingBoundParams,
    check_isometry,
    coherence_growth,
    coherence_of,
    coherence_of_matrix,
    min_samples,
    sample_rows,
)
from .kernels import DataTable, KernelSpec, gram, load_csv, median_heuristic_gamma
from .linalg import (
    EigenDecomp,
    RankTolerance,
    eig_sym,
    frobenius,
    frobenius_diff,
    pinv_trunc,
    qr_orthonormalize,
    rank_numeric,
)
from .nystrom import (
    NystromModel,
    SampleScheme,
    estimate_recovery_prob,
    fit,
    percent_error,
    reconstruct,
    sample_columns,
)
from .synth import (
    SyntheticSpec,
    pathological,
    solve_eta_for_fraction,
    spectrum_fraction,
    synth_spsd,
    targeted_basis,
)

__version__ = "0.1.0"
