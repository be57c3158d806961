"""Second-order centered finite differences for the Laplacian on the unit square.

Unknowns are the nodes left over after removing Dirichlet edges; edges with a
Neumann condition keep their boundary nodes as unknowns and eliminate the
ghost value through the centered flux condition (ghost = inner +- 2h*b), which
keeps second order and the 5-point structure.  Every admissible edge
combination yields a rectangular tensor-product unknown set, so the 2D matrix
is kron(Tx, I) + kron(I, Ty) built from two 1D operators.  That same tensor
structure is what the diffusion flow later diagonalizes, axis by axis.

Boundary data enters only through the affine forcing r(t): a Dirichlet
neighbour contributes value/h^2 to the adjacent unknown row, a Neumann edge
contributes 2*value/h to its own boundary row.
"""

import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh_tridiagonal

from .grid import EDGES, GridFunction, GridLevel, edge_line_coords

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


class SingularSystem(RuntimeError):
    """Pure-Neumann right-hand side violates the discrete compatibility condition."""


@dataclass(frozen=True)
class EdgeCondition:
    """Boundary kind plus trace/flux data b(t, x, y) for one edge."""

    kind: str
    data: Callable

    def __post_init__(self):
        if self.kind not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown boundary kind {self.kind!r}")


@dataclass(frozen=True)
class BoundarySpec:
    """Per-edge boundary conditions for the unit square.

    Data is stored per edge because the corner of two Neumann edges needs two
    distinct flux values (one ghost per direction); a single global b(t,x,y)
    cannot express that.
    """

    left: EdgeCondition
    right: EdgeCondition
    bottom: EdgeCondition
    top: EdgeCondition

    @classmethod
    def uniform(cls, kind: str, data: Callable) -> "BoundarySpec":
        ec = EdgeCondition(kind, data)
        return cls(ec, ec, ec, ec)

    def edge(self, name: str) -> EdgeCondition:
        return getattr(self, name)

    @property
    def all_dirichlet(self) -> bool:
        return all(self.edge(e).kind == DIRICHLET for e in EDGES)

    @property
    def all_neumann(self) -> bool:
        return all(self.edge(e).kind == NEUMANN for e in EDGES)


def _axis_operator(M: int, h: float, kind_lo: str, kind_hi: str):
    """1D second-difference operator on the unknown index range of one axis.

    Returns (i0, i1, lower, main, upper, w) where the tridiagonal bands carry
    the 1/h^2 scale.  A Neumann end doubles the inner off-diagonal entry
    (ghost elimination); its flux datum lives in the forcing, not here.  The
    weights w (1/2 on Neumann end nodes) symmetrize the operator and span its
    left nullspace in the doubly-Neumann case.
    """
    i0 = 0 if kind_lo == NEUMANN else 1
    i1 = M if kind_hi == NEUMANN else M - 1
    n = i1 - i0 + 1
    main = np.full(n, -2.0)
    lower = np.ones(n - 1)
    upper = np.ones(n - 1)
    w = np.ones(n)
    if kind_lo == NEUMANN:
        upper[0] = 2.0
        w[0] = 0.5
    if kind_hi == NEUMANN:
        lower[-1] = 2.0
        w[-1] = 0.5
    s = 1.0 / h**2
    return i0, i1, lower * s, main * s, upper * s, w


def _axis_eigen(lower, main, upper, w):
    """Diagonalize a (possibly end-doubled) 1D operator.

    The half-weights on Neumann end nodes symmetrize the operator:
    S = W^(1/2) T W^(-1/2) is symmetric tridiagonal, so T = R diag(lam) P with
    analysis P = Q^T W^(1/2) and synthesis R = W^(-1/2) Q.
    """
    sw = np.sqrt(w)
    off = upper * sw[:-1] / sw[1:]
    lam, Q = eigh_tridiagonal(main, off)
    P = Q.T * sw[None, :]
    R = Q / sw[:, None]
    return lam, P, R


class DiscreteOperator:
    """Assembled 5-point Laplacian with boundary forcing on one (level, spec).

    The matrix is time-invariant; factorizations and the axis eigenpairs are
    built lazily and cached on the instance, so repeated solves and flow steps
    amortize to a single backsolve / modal update each.
    """

    compat_tol = 1e-8

    def __init__(self, level: GridLevel, spec: BoundarySpec):
        self.level = level
        self.spec = spec
        M, h = level.M, level.h
        self.i0, self.i1, self._xl, self._xd, self._xu, self._xw = _axis_operator(
            M, h, spec.left.kind, spec.right.kind
        )
        self.j0, self.j1, self._yl, self._yd, self._yu, self._yw = _axis_operator(
            M, h, spec.bottom.kind, spec.top.kind
        )
        self.nx = self.i1 - self.i0 + 1
        self.ny = self.j1 - self.j0 + 1
        if self.nx < 1 or self.ny < 1:
            raise ValueError("empty unknown set")
        self.pure_neumann = spec.all_neumann
        self._matrix = None
        self._lu = None
        self._aug_lu = None
        self._gs = None
        self._modal = None

    # -- index bookkeeping -------------------------------------------------

    @property
    def n_unknowns(self) -> int:
        return self.nx * self.ny

    def unknown_slices(self) -> tuple[slice, slice]:
        return slice(self.i0, self.i1 + 1), slice(self.j0, self.j1 + 1)

    def extract(self, full_values: np.ndarray) -> np.ndarray:
        si, sj = self.unknown_slices()
        return np.array(full_values[si, sj])

    def x_unknown_coords(self) -> np.ndarray:
        return np.arange(self.i0, self.i1 + 1) * self.level.h

    def y_unknown_coords(self) -> np.ndarray:
        return np.arange(self.j0, self.j1 + 1) * self.level.h

    # -- matrix ------------------------------------------------------------

    @property
    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            Tx = sp.diags([self._xl, self._xd, self._xu], [-1, 0, 1])
            Ty = sp.diags([self._yl, self._yd, self._yu], [-1, 0, 1])
            A = sp.kron(Tx, sp.identity(self.ny)) + sp.kron(sp.identity(self.nx), Ty)
            self._matrix = A.tocsr()
        return self._matrix

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u.reshape(-1)

    def modal(self):
        """Per-axis eigen-factorizations (lamx, Px, Rx, lamy, Py, Ry)."""
        if self._modal is None:
            lx, Px, Rx = _axis_eigen(self._xl, self._xd, self._xu, self._xw)
            ly, Py, Ry = _axis_eigen(self._yl, self._yd, self._yu, self._yw)
            self._modal = (lx, Px, Rx, ly, Py, Ry)
        return self._modal

    def null_weights(self) -> np.ndarray:
        """Left-null weights of the pure-Neumann matrix (trapezoid weights)."""
        return np.outer(self._xw, self._yw).reshape(-1)

    # -- boundary data and forcing ------------------------------------------

    def problem_edge_values(self, t: float) -> dict[str, np.ndarray]:
        """Sample the spec's boundary data on the full node line of each edge."""
        out = {}
        for e in EDGES:
            x, y = edge_line_coords(self.level, e)
            vals = np.asarray(self.spec.edge(e).data(t, x, y), dtype=float)
            out[e] = np.broadcast_to(vals, x.shape).astype(float, copy=True)
        return out

    def forcing_from_edge_values(self, edge_values: dict[str, np.ndarray]) -> np.ndarray:
        """Affine term r of A u + r from full-line boundary value arrays.

        Each array has length M+1, indexed by the running coordinate of its
        edge; only the entries adjacent to (Dirichlet) or on (Neumann) the
        unknown block are read.
        """
        h = self.level.h
        r = np.zeros((self.nx, self.ny))
        sx = slice(self.i0, self.i1 + 1)
        sy = slice(self.j0, self.j1 + 1)
        c_dir = 1.0 / h**2
        c_neu = 2.0 / h
        if self.spec.left.kind == DIRICHLET:
            r[0, :] += c_dir * edge_values["left"][sy]
        else:
            r[0, :] += c_neu * edge_values["left"][sy]
        if self.spec.right.kind == DIRICHLET:
            r[-1, :] += c_dir * edge_values["right"][sy]
        else:
            r[-1, :] += c_neu * edge_values["right"][sy]
        if self.spec.bottom.kind == DIRICHLET:
            r[:, 0] += c_dir * edge_values["bottom"][sx]
        else:
            r[:, 0] += c_neu * edge_values["bottom"][sx]
        if self.spec.top.kind == DIRICHLET:
            r[:, -1] += c_dir * edge_values["top"][sx]
        else:
            r[:, -1] += c_neu * edge_values["top"][sx]
        return r

    def forcing(self, t: float) -> np.ndarray:
        return self.forcing_from_edge_values(self.problem_edge_values(t))

    def apply(self, v, t: float) -> np.ndarray:
        """Discrete Laplacian of v at the unknown nodes, boundary data folded in."""
        if isinstance(v, GridFunction):
            v = v.values
        u = self.extract(v) if v.shape == self.level.shape else np.asarray(v, float)
        out = (self.matrix @ u.reshape(-1)).reshape(self.nx, self.ny)
        return out + self.forcing(t)

    def fill_boundary(self, full: np.ndarray, edge_values: dict[str, np.ndarray]) -> None:
        """Write Dirichlet edge lines into a full array, corners to bottom/top.

        Vertical edges are written first so a Dirichlet horizontal edge owns
        its corners; if a horizontal edge is Neumann, the vertical Dirichlet
        neighbour supplies the corner value instead.
        """
        if self.spec.left.kind == DIRICHLET:
            full[0, :] = edge_values["left"]
        if self.spec.right.kind == DIRICHLET:
            full[-1, :] = edge_values["right"]
        if self.spec.bottom.kind == DIRICHLET:
            full[:, 0] = edge_values["bottom"]
        if self.spec.top.kind == DIRICHLET:
            full[:, -1] = edge_values["top"]

    def to_full(self, block: np.ndarray, edge_values: dict[str, np.ndarray] | None) -> np.ndarray:
        full = np.zeros(self.level.shape)
        si, sj = self.unknown_slices()
        full[si, sj] = block
        if edge_values is not None:
            self.fill_boundary(full, edge_values)
        return full

    def to_grid_function(self, block: np.ndarray, t: float) -> GridFunction:
        return GridFunction(
            self.level, self.to_full(block, self.problem_edge_values(t))
        )

    # -- direct solves -------------------------------------------------------

    def _factorization(self):
        if self._lu is None:
            self._lu = spla.factorized(self.matrix.tocsc())
        return self._lu

    def _augmented(self):
        # bordered system [[A, 1], [1^T, 0]]: pins the nodal mean of q to zero
        if self._aug_lu is None:
            n = self.n_unknowns
            ones = np.ones((n, 1))
            A = sp.bmat(
                [[self.matrix, ones], [ones.T, None]], format="csc"
            )
            self._aug_lu = spla.splu(A)
        return self._aug_lu

    def solve(self, rhs: np.ndarray, edge_values: dict[str, np.ndarray]) -> np.ndarray:
        """Solve A q = rhs - r(edge_values) on the unknown block.

        For the singular pure-Neumann operator the right-hand side is checked
        against the discrete compatibility condition (left-null weights),
        projected onto the compatible subspace, and the zero-mean
        representative is returned.
        """
        b = np.asarray(rhs, float).reshape(-1) - self.forcing_from_edge_values(
            edge_values
        ).reshape(-1)
        if not self.pure_neumann:
            q = self._factorization()(b)
        else:
            w = self.null_weights()
            s = float(w @ b)
            nb = np.linalg.norm(b)
            if nb > 0 and abs(s) / (np.linalg.norm(w) * nb) > self.compat_tol:
                raise SingularSystem(
                    f"incompatible pure-Neumann right-hand side (defect {s:.3e})"
                )
            b = b - (s / w.sum())
            q = self._augmented().solve(np.append(b, 0.0))[:-1]
            q -= q.mean()
        return q.reshape(self.nx, self.ny)

    # -- smoother ingredients (used by the half-V-cycle) ---------------------

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def gauss_seidel_parts(self):
        """Lower-triangular factor (incl. diagonal) and strict upper part of A."""
        if self._gs is None:
            lower = spla.splu(
                sp.tril(self.matrix, 0, format="csc"),
                permc_spec="NATURAL",
                options={"SymmetricMode": False},
            )
            upper = sp.triu(self.matrix, 1, format="csr")
            self._gs = (lower, upper)
        return self._gs


@functools.lru_cache(maxsize=64)
def assemble(level: GridLevel, spec: BoundarySpec) -> DiscreteOperator:
    """Build (or fetch the cached) discrete operator for a level and spec."""
    return DiscreteOperator(level, spec)


def solve_poisson(op: DiscreteOperator, rhs, t: float = 0.0) -> GridFunction:
    """Solve A q = rhs - r(t) and return the full grid function.

    Dirichlet boundary nodes carry the spec data at time t; Neumann boundary
    nodes are unknowns and carry the computed values.  rhs may be a
    GridFunction, a full nodal array, or an unknown-shaped block.
    """
    if isinstance(rhs, GridFunction):
        rhs = rhs.values
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape == op.level.shape:
        rhs = op.extract(rhs)
    block = op.solve(rhs, op.problem_edge_values(t))
    return op.to_grid_function(block, t)


def compat_constant(spec: BoundarySpec, u: GridFunction, fprime, t: float = 0.0) -> float:
    """Compatibility constant of the pure-Neumann correction problem.

    Composite trapezoidal rule of f'(u) * b along each edge (|domain| = 1),
    with b evaluated at the given time; corners contribute to both adjacent
    edges with each edge's own flux datum.
    """
    if not spec.all_neumann:
        raise ValueError("compatibility constant is defined for pure Neumann problems")
    from .grid import edge_line_values

    h = u.level.h
    g = 0.0
    for e in EDGES:
        x, y = edge_line_coords(u.level, e)
        b = np.broadcast_to(np.asarray(spec.edge(e).data(t, x, y), float), x.shape)
        phi = np.asarray(fprime(edge_line_values(u, e)), float) * b
        g += float(np.trapezoid(phi, dx=h))
    return g
