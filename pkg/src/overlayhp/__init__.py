"""Multi-level hp finite elements on superposed axis-aligned overlay meshes."""

from .mesh import Box, CartesianMesh, build_uniform_mesh, element_box, locate_element, to_local
from .basis import BasisSpec, eval_basis, eval_legendre_1d, multi_indices, trace_flags
from .regions import (
    AT_LEAST_ONE,
    AllOf,
    AtLeastOne,
    Exactly,
    IntegrationRegion,
    compute_regions,
    gauss_rule,
    region_quadrature,
    regions_to_csv,
)
from .space import (
    DofStatus,
    LevelSpec,
    MultiLevelSpace,
    apply_fitted_deactivation,
    build_space,
    count_active,
    set_dirichlet,
)
from .assembly import ReducedSystem, SparseSystem, WeakForm, apply_constraints, assemble, assemble_load
from .solvers import NonSPDError, PcgReport, SolverError, condition_number_spd, pcg_jacobi, solve_direct
from .postproc import (
    FieldSolution,
    ProbeRecord,
    compute_energy,
    evaluate,
    grid_to_csv,
    relative_energy_error,
    sample_grid,
)
from .transient import MovingSource, ThetaScheme, advance_overlays, l2_project, theta_step

__version__ = "0.1.0"
