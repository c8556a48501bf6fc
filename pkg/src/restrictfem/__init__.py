"""Lagrange finite elements with restricted function spaces.

A restricted function space removes the Dirichlet boundary dofs from the
global system instead of replacing their rows with identity rows, so
assembled operators carry no spurious boundary eigenvalues.
"""
from .assembly import (
    assemble_bilinear,
    assemble_linear,
    assemble_local,
    bc_values,
    element_kernel,
    errornorm,
    l2_difference,
    l2_norm,
)
from .elements import LagrangeElement, QuadratureRule, lagrange, quadrature, tabulate
from .errors import (
    BoundaryMismatchWarning,
    ConsistencyError,
    ConstructionError,
    ConvergenceError,
    EigenClampWarning,
    FEMError,
    GeometryError,
    RestrictEverythingWarning,
    RestrictionWarning,
    SingularSystemError,
    UnknownSubdomainWarning,
)
from .numbering import (
    PointClass,
    Section,
    create_section,
    lgmap_with_bcs,
    make_global_numbering,
    plex_renumbering,
    serial_global_section,
)
from .plex import Plex, boundary_points, build_unit_interval_mesh, build_unit_square_mesh
from .solve import (
    EigenResult,
    LinearEigenproblem,
    LinearVariationalProblem,
    apply_bc_shift,
    eigenfunction,
    eigensolve,
    generalized_eig,
    linear_solve,
    shift_demo,
    solve_variational,
)
from .spaces import (
    BilinearForm,
    DirichletBC,
    Function,
    FunctionSpace,
    LinearForm,
    Source,
    advection_x,
    dirichlet_bc,
    dof_permutation,
    form_signature,
    function_space,
    interpolate,
    mass,
    restricted,
    source,
    stiffness,
    transfer,
)

__version__ = "0.1.0"
