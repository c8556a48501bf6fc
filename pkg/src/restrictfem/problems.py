"""Ready-made demo problems shared by the CLI and the tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import errornorm, l2_difference
from .plex import build_unit_interval_mesh, build_unit_square_mesh
from .solve import LinearEigenproblem, LinearVariationalProblem, eigensolve, solve_variational
from .spaces import Function, dirichlet_bc, function_space, interpolate, mass, source, stiffness

__all__ = [
    "manufactured_exact",
    "manufactured_source",
    "PoissonResult",
    "manufactured_poisson",
    "poisson_eigen_1d",
    "exact_eigenvalues_1d",
]


def manufactured_exact(x, y):
    """``u = -(y^3 - 3/2 y^2) x (1 - x)``: zero on x=0 and x=1, zero normal flux on y=0 and y=1."""
    return -(y**3 - 1.5 * y**2) * x * (1 - x)


def manufactured_source(x, y):
    """``f = -laplacian(u)`` for :func:`manufactured_exact`."""
    return -2 * (y**3 - 1.5 * y**2) + (x - x**2) * (6 * y - 3)


@dataclass
class PoissonResult:
    """Solution of the manufactured problem and its errors.

    ``error`` compares against the nodal interpolant of the exact solution
    in the solution space; ``exact_error`` against the exact solution itself.
    """

    u: Function
    error: float
    exact_error: float


def manufactured_poisson(
    nx: int, ny: int, degree: int, restrict: bool, interpolate_source: bool = True, mesh=None
) -> PoissonResult:
    """Solve ``-lap u = f`` with ``u = 0`` on x=0 and x=1 and natural bcs elsewhere.

    ``mesh`` overrides the ``nx x ny`` square, e.g. to compare two solves
    on one mesh object.
    """
    mesh = build_unit_square_mesh(nx, ny) if mesh is None else mesh
    V = function_space(mesh, degree)
    f = interpolate(manufactured_source, V) if interpolate_source else manufactured_source
    bcs = [dirichlet_bc(V, 0.0, 1), dirichlet_bc(V, 0.0, 2)]
    problem = LinearVariationalProblem(stiffness(), source(f), V, bcs, restrict=restrict)
    u = solve_variational(problem)
    return PoissonResult(
        u,
        l2_difference(u, interpolate(manufactured_exact, V)),
        errornorm(manufactured_exact, u),
    )


def poisson_eigen_1d(
    cells: int = 10,
    degree: int = 4,
    nev: int = 10,
    restrict: bool = True,
    shift: float = 0.0,
    length: float = math.pi,
):
    """``-u'' = lambda u`` on ``[0, length]`` with ``u = 0`` at both ends.

    The exact eigenvalues are ``(n pi / length)^2``.
    """
    mesh = build_unit_interval_mesh(cells, length)
    V = function_space(mesh, degree)
    bcs = [dirichlet_bc(V, 0.0, 1), dirichlet_bc(V, 0.0, 2)]
    problem = LinearEigenproblem(stiffness(), V, mass(), bcs, restrict=restrict, bc_shift=shift)
    return eigensolve(problem, nev, "smallest_real")


def exact_eigenvalues_1d(n: int, length: float = math.pi) -> np.ndarray:
    k = np.arange(1, n + 1)
    return (k * math.pi / length) ** 2
