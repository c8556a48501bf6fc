"""Exception and warning types raised by restrictfem."""


class FEMError(Exception):
    """Base class for library errors that are not plain argument errors."""


class SingularSystemError(FEMError, ArithmeticError):
    """A linear system (or the mass matrix of an eigenproblem) is singular."""


class ConsistencyError(FEMError):
    """Two data structures that must agree (sections, rank views) do not."""


class GeometryError(FEMError):
    """Degenerate cell geometry, e.g. a zero Jacobian determinant."""


class ConstructionError(FEMError):
    """An element or quadrature rule cannot be built."""


class RestrictionWarning(UserWarning):
    """Suspicious use of a restricted function space."""


class RestrictEverythingWarning(RestrictionWarning):
    """Every degree of freedom of a space is constrained."""


class BoundaryMismatchWarning(RestrictionWarning):
    """A boundary condition is placed on a subdomain outside the boundary set."""


class UnknownSubdomainWarning(RestrictionWarning):
    """A boundary set names a subdomain id that no facet carries."""


class EigenClampWarning(UserWarning):
    """More eigenpairs were requested than the problem has."""


class ConvergenceError(FEMError):
    """An iterative solve stopped before reaching its tolerance."""
