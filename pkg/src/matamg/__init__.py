"""Smoothed aggregation AMG with a material-aware strength of connection."""
from .aggregation import Aggregation, aggregate, coarsen_auxiliary, tentative_prolongator
from .fem import (
    AssembledProblem,
    annulus_problem,
    assemble,
    layered_stack_problem,
    nodal_material_average,
    two_domain_problem,
)
from .filtering import (
    DropMask,
    cutdrop_row,
    drop_cutdrop,
    drop_pointwise,
    filter_matrix,
    one_norm_diagonal,
    symmetrize_mask,
)
from .hierarchy import (
    AmgConfig,
    CoarseningStagnation,
    Hierarchy,
    build_hierarchy,
    estimate_spectral_radius,
    operator_complexity,
    smooth_prolongator,
)
from .io import read_matrix_market, write_matrix_market
from .solvers import (
    PCGBreakdown,
    SolveReport,
    amg_preconditioner,
    chebyshev_smooth,
    coarse_solve,
    jacobi_smooth,
    pcg,
    v_cycle,
)
from .sparse import SparseMatrix, extract_diagonal, galerkin_product, spmv, transpose
from .strength import (
    AuxiliaryData,
    SocMatrix,
    distance_laplacian,
    material_distance,
    soc_dlap,
    soc_material_dlap,
    soc_sa,
)

__version__ = "0.1.0"
