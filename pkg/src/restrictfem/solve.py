"""Linear and eigenvalue solvers over restricted or unrestricted spaces.

With ``restrict=True`` the boundary conditions of a problem decide the
boundary set of a restricted copy of the solution space; the reduced
system is solved there and mapped back to the original numbering.  With
``restrict=False`` bc rows and columns become identity rows, which for an
eigenproblem injects spurious eigenvalues (1, or ``theta`` once the mass
matrix bc rows are scaled by ``1/theta``).
"""
from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_bilinear, assemble_linear, assemble_local, bc_values
from .errors import ConvergenceError, EigenClampWarning, SingularSystemError
from .spaces import (
    BilinearForm,
    DirichletBC,
    Function,
    FunctionSpace,
    LinearForm,
    mass,
    restricted,
    transfer,
)

__all__ = [
    "linear_solve",
    "LinearVariationalProblem",
    "solve_variational",
    "LinearEigenproblem",
    "EigenResult",
    "eigensolve",
    "eigenfunction",
    "generalized_eig",
    "apply_bc_shift",
    "SHIFT_DEMO_A",
    "SHIFT_DEMO_M",
    "shift_demo",
]

DENSE_LIMIT = 2000
RESIDUAL_TOL = 1e-10
PIVOT_TOL = 1e-14
EIG_RESIDUAL_TOL = 1e-8
WHICH = ("smallest_real", "largest_imag", "largest_magnitude")


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def linear_solve(matrix, rhs) -> np.ndarray:
    """Solve ``matrix @ x = rhs``.

    Dense LU with partial pivoting up to ``DENSE_LIMIT`` unknowns, conjugate
    gradients (the matrix must then be SPD) above it.

    Raises
    ------
    SingularSystemError
        If an LU pivot falls below ``1e-14`` times the largest entry.
    ConvergenceError
        If the relative residual exceeds ``1e-10``.
    """
    b = np.asarray(rhs)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError(f"matrix must be square, got {matrix.shape}")
    if b.shape != (n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({n},)")
    if n == 0:
        return np.zeros(0, dtype=b.dtype)

    if n <= DENSE_LIMIT:
        A = _dense(matrix)
        scale = np.abs(A).max()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(A, check_finite=True)
        pivots = np.abs(np.diag(lu))
        if scale == 0.0 or pivots.min() < PIVOT_TOL * scale:
            raise SingularSystemError(
                f"singular {n}x{n} system: smallest pivot {pivots.min():.3e}, scale {scale:.3e}"
            )
        x = sla.lu_solve((lu, piv), b)
    else:
        A = sp.csr_matrix(matrix)
        x, info = spla.cg(A, b, rtol=RESIDUAL_TOL * 1e-2, atol=0.0, maxiter=10 * n)
        if info != 0:
            raise ConvergenceError(f"conjugate gradients stopped with info={info}")

    res = np.linalg.norm(matrix @ x - b) / max(np.linalg.norm(b), np.finfo(float).eps)
    if res > RESIDUAL_TOL:
        raise ConvergenceError(f"relative residual {res:.3e} above {RESIDUAL_TOL}")
    return x


def _subdomains(bcs: Sequence[DirichletBC]) -> list[int]:
    return sorted({bc.subdomain for bc in bcs})


def _restricted_space(space: FunctionSpace, bcs: Sequence[DirichletBC]) -> FunctionSpace:
    if space.restricted:
        raise ValueError("the solution space must be unrestricted; pass restrict=True instead")
    return restricted(space, _subdomains(bcs)) if bcs else space


def _expand(space: FunctionSpace, reduced: np.ndarray, fill: np.ndarray | None = None) -> np.ndarray:
    """Full local vector with free values taken from ``reduced`` through the lgmap."""
    full = np.zeros(space.dim_total, dtype=np.result_type(reduced, float))
    if fill is not None:
        full[:] = fill
    free = space.free_dofs
    full[free] = reduced[space.lgmap[free]]
    return full


@dataclass
class LinearVariationalProblem:
    """Find ``u`` in ``space`` with ``a(u, v) = L(v)`` and ``u = g`` on each bc.

    Parameters
    ----------
    a : BilinearForm
    L : LinearForm
    space : FunctionSpace
        Unrestricted space the solution is returned in.
    bcs : sequence of DirichletBC
    restrict : bool
        Solve on the restricted copy of ``space`` built from the bc subdomains.
    """

    a: BilinearForm
    L: LinearForm
    space: FunctionSpace
    bcs: Sequence[DirichletBC] = ()
    restrict: bool = False

    def __post_init__(self):
        self.bcs = tuple(self.bcs)
        for bc in self.bcs:
            if bc.space.mesh is not self.space.mesh:
                raise ValueError("boundary condition lives on a different mesh")


def solve_variational(problem: LinearVariationalProblem) -> Function:
    """Solve a linear variational problem; the result lives on ``problem.space``."""
    V = problem.space
    inhomogeneous = any(not bc.homogeneous for bc in problem.bcs)
    if problem.restrict:
        Vr = _restricted_space(V, problem.bcs)
        bcs = [bc.reconstruct(Vr) for bc in problem.bcs]
        A = assemble_bilinear(problem.a, Vr)
        lift = assemble_local(problem.a, Vr) if inhomogeneous else None
        b = assemble_linear(problem.L, Vr, bcs, lift)
        x = linear_solve(A, b)
        full = _expand(Vr, x, fill=bc_values(Vr, bcs))
        return transfer(Function(Vr, full, name="u"), V)

    if V.restricted:
        raise ValueError("restrict=False needs an unrestricted solution space")
    A = assemble_bilinear(problem.a, V, bcs=problem.bcs)
    lift = assemble_local(problem.a, V) if inhomogeneous else None
    b = assemble_linear(problem.L, V, problem.bcs, lift)
    return Function(V, linear_solve(A, b), name="u")


# -- eigenproblems --------------------------------------------------------------
@dataclass
class LinearEigenproblem:
    """Generalized eigenproblem ``A x = lambda M x`` with homogeneous bcs.

    ``bc_shift`` (``theta``) only matters when ``restrict`` is false: the bc
    rows of ``M`` are scaled by ``1/theta`` so the spurious eigenvalues sit at
    ``theta`` instead of 1.  ``theta = 0`` leaves ``M`` untouched.
    """

    A: BilinearForm
    space: FunctionSpace
    M: BilinearForm = field(default_factory=mass)
    bcs: Sequence[DirichletBC] = ()
    restrict: bool = True
    bc_shift: float = 0.0

    def __post_init__(self):
        self.bcs = tuple(self.bcs)
        if not np.isfinite(self.bc_shift) or self.bc_shift < 0:
            raise ValueError(f"bc_shift must be a non-negative number, got {self.bc_shift}")
        for bc in self.bcs:
            if not bc.homogeneous:
                raise ValueError("eigenproblems only accept homogeneous boundary conditions")


@dataclass
class EigenResult:
    """Converged eigenpairs, eigenvectors expressed on the original space.

    Attributes
    ----------
    eigenvalues : ndarray of complex
    eigenvectors : list of Function
    nconverged : int
    mode : str
        ``"restricted"`` or ``"shifted"``.
    residuals : ndarray
        ``||A x - lambda M x||`` of each returned pair, in the solved space.
    """

    eigenvalues: np.ndarray
    eigenvectors: list
    nconverged: int
    mode: str
    residuals: np.ndarray


def _is_spd(M: np.ndarray) -> bool:
    if not np.allclose(M, M.T, rtol=0, atol=1e-14 * max(np.abs(M).max(), 1.0)):
        return False
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    return True


def generalized_eig(A, M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense solve of ``A x = lambda M x``.

    Uses the symmetric-definite reduction when ``A`` is symmetric and ``M``
    SPD, the QZ algorithm otherwise.  Infinite eigenvalues (``M`` singular)
    are returned as ``inf`` and flagged in the mask.

    Returns
    -------
    values : ndarray of complex
    vectors : ndarray, columns are eigenvectors
    finite : ndarray of bool
    """
    A, M = _dense(A).astype(float), _dense(M).astype(float)
    n = A.shape[0]
    if n == 0:
        return np.zeros(0, complex), np.zeros((0, 0)), np.zeros(0, bool)
    if np.allclose(A, A.T, rtol=0, atol=1e-14 * max(np.abs(A).max(), 1.0)) and _is_spd(M):
        w, v = sla.eigh(A, M)
        return w.astype(complex), v, np.ones(n, dtype=bool)
    (alpha, beta), v = sla.eig(A, M, homogeneous_eigvals=True)
    finite = np.abs(beta) > 1e-14 * max(np.abs(M).max(), 1.0) * max(1.0, np.abs(alpha).max())
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(finite, alpha / np.where(finite, beta, 1.0), np.inf)
    return w.astype(complex), v, finite


def _order(values: np.ndarray, which: str) -> np.ndarray:
    if which == "smallest_real":
        key = values.real
    elif which == "largest_imag":
        key = -values.imag
    elif which == "largest_magnitude":
        key = -np.abs(values)
    else:
        raise ValueError(f"which must be one of {WHICH}, got {which!r}")
    return np.argsort(key, kind="stable")


def _normalise(v: np.ndarray) -> np.ndarray:
    """Unit 2-norm with the first non-negligible component positive real."""
    v = v / np.linalg.norm(v)
    mag = np.abs(v)
    first = int(np.argmax(mag > 1e-12 * mag.max()))
    v = v * (np.conj(v[first]) / mag[first])
    if np.iscomplexobj(v) and np.all(np.abs(v.imag) <= 1e-14):
        v = v.real
    return v


def apply_bc_shift(M, rows, theta: float):
    """Copy of ``M`` with ``rows`` scaled by ``1/theta``; ``theta = 0`` means no shift."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    rows = np.asarray(rows, dtype=np.int64)
    if theta == 0 or rows.size == 0:
        return M.copy()
    scale = np.ones(M.shape[0])
    scale[rows] = 1.0 / theta
    if sp.issparse(M):
        return sp.csr_matrix(sp.diags(scale) @ M)
    return scale[:, None] * np.asarray(M)


def eigensolve(problem: LinearEigenproblem, nev: int, which: str = "smallest_real") -> EigenResult:
    """Solve ``problem`` densely and return the first ``nev`` pairs by ``which``."""
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}, got {which!r}")
    if nev < 1:
        raise ValueError(f"nev must be positive, got {nev}")
    V = problem.space
    if problem.restrict:
        Vs = _restricted_space(V, problem.bcs)
        A = assemble_bilinear(problem.A, Vs)
        M = assemble_bilinear(problem.M, Vs)
        mode = "restricted"
    else:
        if V.restricted:
            raise ValueError("restrict=False needs an unrestricted space")
        Vs = V
        A = assemble_bilinear(problem.A, V, bcs=problem.bcs)
        M = assemble_bilinear(problem.M, V, bcs=problem.bcs)
        rows = np.unique(np.concatenate([bc.nodes for bc in problem.bcs])) if problem.bcs else []
        M = apply_bc_shift(M, rows, problem.bc_shift)
        mode = "shifted"

    n = A.shape[0]
    if n > DENSE_LIMIT:
        raise ValueError(f"dense eigensolve limited to {DENSE_LIMIT} unknowns, got {n}")
    if nev > n:
        warnings.warn(
            f"requested {nev} eigenpairs but the problem has {n}; returning at most {n}",
            EigenClampWarning,
            stacklevel=2,
        )
        nev = n

    Ad, Md = _dense(A), _dense(M)
    values, vectors, finite = generalized_eig(Ad, Md)
    normA, normM = np.linalg.norm(Ad), np.linalg.norm(Md)
    good = []
    residuals = []
    for i in _order(values, which):
        if not finite[i]:
            continue
        lam, x = values[i], _normalise(vectors[:, i])
        r = np.linalg.norm(Ad @ x - lam * (Md @ x))
        if r <= EIG_RESIDUAL_TOL * (normA + abs(lam) * normM):
            good.append((lam, x))
            residuals.append(r)
        if len(good) == nev:
            break

    funcs = []
    for k, (_, x) in enumerate(good):
        if problem.restrict:
            f = transfer(Function(Vs, _expand(Vs, x), name=f"mode{k}"), V)
        else:
            f = Function(V, x, name=f"mode{k}")
        funcs.append(f)
    return EigenResult(
        eigenvalues=np.array([lam for lam, _ in good], dtype=complex),
        eigenvectors=funcs,
        nconverged=len(good),
        mode=mode,
        residuals=np.array(residuals),
    )


def eigenfunction(result: EigenResult, k: int) -> Function:
    """The ``k``-th returned eigenvector as a Function on the original space."""
    if not 0 <= k < result.nconverged:
        raise IndexError(f"eigenpair {k} out of range [0, {result.nconverged})")
    return result.eigenvectors[k]


# -- 3x3 boundary-shift demonstration -----------------------------------------
SHIFT_DEMO_A = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 1.0], [0.0, 3.0, 2.0]])
SHIFT_DEMO_M = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.25], [0.0, 3.0, -0.5]])
SHIFT_DEMO_BC_ROWS = (0,)


def shift_demo(theta: float, A=SHIFT_DEMO_A, M=SHIFT_DEMO_M, bc_rows=SHIFT_DEMO_BC_ROWS) -> np.ndarray:
    """Spectrum of ``A x = lambda M x`` after shifting the bc rows of ``M`` by ``theta``.

    The eigenvalues come from the full generalized solve.  They are listed
    with the bc-row eigenvalues first (``A_ii / M_ii`` for each bc row),
    then the remaining ones in ascending real part.
    """
    Ms = apply_bc_shift(np.asarray(M, float), bc_rows, theta)
    values, _, finite = generalized_eig(A, Ms)
    if not finite.all():
        raise SingularSystemError("shifted mass matrix is singular")
    remaining = list(values)
    head = []
    for i in bc_rows:
        target = A[i, i] / Ms[i, i]
        j = int(np.argmin([abs(v - target) for v in remaining]))
        head.append(remaining.pop(j))
    tail = sorted(remaining, key=lambda v: (v.real, v.imag))
    return np.array(head + tail, dtype=complex)
