"""Correction-field builders that make the reaction sub-flow boundary-compatible.

A correction q shifts the split system (diffusion gets +q, reaction gets -q)
without changing its sum; second order survives when q carries the boundary
behaviour of the nonlinearity.  Concretely, on Dirichlet edges q must equal
f(b) (assigned exactly, never solved for), and on Neumann edges its discrete
outward normal derivative must match f'(u) b to second order.

Four constructions are provided:

* ExactElliptic -- solve the Laplace problem with the correction data; one
  cached backsolve per step.
* DirectF       -- q = f(u_n) pointwise; trivially compatible, one reaction
  evaluation per step.
* GridAverage   -- multilevel moving-average interpolation from the four
  corners up to the target grid, one 5-point smoothing sweep per level;
  Dirichlet only (it would perturb the boundary slope).
* HalfVCycle    -- coarse direct solve, then prolong + nu smoother sweeps
  (weighted Jacobi or Gauss-Seidel) per level up to the target grid.
"""

from dataclasses import dataclass

import numpy as np

from .discretization import (
    DIRICHLET,
    NEUMANN,
    BoundarySpec,
    DiscreteOperator,
    assemble,
)
from .grid import EDGES, GridFunction, GridLevel, edge_line_coords, prolong_values


def _line_of(values: np.ndarray, edge: str) -> np.ndarray:
    if edge == "left":
        return values[0, :]
    if edge == "right":
        return values[-1, :]
    if edge == "bottom":
        return values[:, 0]
    return values[:, -1]


def _sample_line(fn, x, y) -> np.ndarray:
    return np.broadcast_to(np.asarray(fn(x, y), dtype=float), x.shape).astype(
        float, copy=True
    )


def correct_dirichlet_elliptic(op: DiscreteOperator, trace_values: dict) -> GridFunction:
    """Harmonic fill of Dirichlet correction data: Laplacian zero inside,
    q = f(b) assigned exactly on the boundary lines."""
    if not op.spec.all_dirichlet:
        raise ValueError("Dirichlet elliptic correction needs all-Dirichlet edges")
    block = op.solve(np.zeros((op.nx, op.ny)), trace_values)
    return GridFunction(op.level, op.to_full(block, trace_values))


def correct_direct(u_n: GridFunction, f) -> GridFunction:
    """Pointwise correction q = f(u_n), all nodes including the boundary."""
    return GridFunction(u_n.level, np.asarray(f(u_n.values), dtype=float))


def correct_neumann_elliptic(op: DiscreteOperator, flux_values: dict, g: float) -> GridFunction:
    """Zero-mean solution of Laplacian q = g with normal derivative f'(u) b."""
    if not op.spec.all_neumann:
        raise ValueError("Neumann elliptic correction needs all-Neumann edges")
    rhs = np.full((op.nx, op.ny), g)
    block = op.solve(rhs, flux_values)
    return GridFunction(op.level, op.to_full(block, flux_values))


def correct_grid_average(trace_fns: dict, level: GridLevel) -> GridFunction:
    """Multilevel moving-average construction of Dirichlet correction data.

    Starting from the four corner values, each round doubles the resolution:
    even nodes copy the coarse grid, cell centers take the 4-point average of
    their coarse neighbours, the remaining inner nodes take the 2-point
    average of the adjacent centers; the boundary of the new grid is then
    re-assigned from the data and one simultaneous 5-point averaging sweep
    (weights 1/5) runs over the interior.  Boundary values of the result are
    the data, bit for bit.

    trace_fns maps each edge to a callable (x, y) -> f(b) values.
    """
    one = np.ones(1)
    zero = np.zeros(1)
    corner = np.empty((2, 2))
    corner[0, 0] = _sample_line(trace_fns["bottom"], zero, zero)[0]
    corner[1, 0] = _sample_line(trace_fns["bottom"], one, zero)[0]
    corner[0, 1] = _sample_line(trace_fns["top"], zero, one)[0]
    corner[1, 1] = _sample_line(trace_fns["top"], one, one)[0]
    q = corner
    for k in range(1, level.level + 1):
        n_new = 2 ** k + 1
        fine = np.empty((n_new, n_new))
        fine[::2, ::2] = q
        fine[1::2, 1::2] = 0.25 * (q[:-1, :-1] + q[1:, :-1] + q[:-1, 1:] + q[1:, 1:])
        # inner nodes between two vertically / horizontally adjacent centers
        fine[1::2, 2:-1:2] = 0.5 * (fine[1::2, 1:-2:2] + fine[1::2, 3::2])
        fine[2:-1:2, 1::2] = 0.5 * (fine[1:-2:2, 1::2] + fine[3::2, 1::2])
        c = np.arange(n_new) * 2.0 ** (-k)
        fine[:, 0] = _sample_line(trace_fns["bottom"], c, np.zeros(n_new))
        fine[:, -1] = _sample_line(trace_fns["top"], c, np.ones(n_new))
        fine[0, :] = _sample_line(trace_fns["left"], np.zeros(n_new), c)
        fine[-1, :] = _sample_line(trace_fns["right"], np.ones(n_new), c)
        fine[1:-1, 1:-1] = 0.2 * (
            fine[1:-1, 1:-1]
            + fine[:-2, 1:-1]
            + fine[2:, 1:-1]
            + fine[1:-1, :-2]
            + fine[1:-1, 2:]
        )
        q = fine
    return GridFunction(level, q)


def _edge_values(spec: BoundarySpec, level: GridLevel, trace_fns, flux_values) -> dict:
    vals = {}
    for e in EDGES:
        if spec.edge(e).kind == DIRICHLET:
            x, y = edge_line_coords(level, e)
            vals[e] = _sample_line(trace_fns[e], x, y)
        else:
            vals[e] = np.asarray(flux_values[e], dtype=float)
    return vals


def _compat_from_flux(level: GridLevel, flux_values: dict) -> float:
    return sum(float(np.trapezoid(flux_values[e], dx=level.h)) for e in EDGES)


def jacobi_sweeps(A, diag, b, q, nu: int, omega: float) -> np.ndarray:
    """nu weighted-Jacobi iterations q <- (I - w D^-1 A) q + w D^-1 b."""
    for _ in range(nu):
        q = q + omega * (b - A @ q) / diag
    return q


def gauss_seidel_sweeps(lower_lu, upper, b, q, nu: int) -> np.ndarray:
    """nu forward Gauss-Seidel iterations q <- (D - L)^-1 (U q + b), where
    -L/-U are the strict lower/upper parts of A (so D - L = tril(A))."""
    for _ in range(nu):
        q = lower_lu.solve(b - upper @ q)
    return q


def correct_half_vcycle(spec: BoundarySpec, level: GridLevel, strategy,
                        trace_fns=None, flux_at_level=None) -> GridFunction:
    """Half-V-cycle correction: exact solve on the coarsest grid, then
    prolongation plus nu smoother sweeps per level up to the target level.

    trace_fns supplies (x, y) -> f(b) callables for Dirichlet edges (sampled
    on every level); flux_at_level(k) supplies the Neumann flux line arrays
    f'(u) b on level k.
    """
    l = level.level
    s = strategy.coarsest_s if strategy.coarsest_s is not None else max(1, l - 3)
    if s < 1 or s >= l:
        raise ValueError(f"coarsest offset s = {s} must satisfy 1 <= s < level = {l}")
    has_neumann = any(spec.edge(e).kind == NEUMANN for e in EDGES)
    full = None
    for k in range(l - s, l + 1):
        lv = GridLevel(k)
        op_k = assemble(lv, spec)
        flux = flux_at_level(k) if has_neumann else None
        vals = _edge_values(spec, lv, trace_fns, flux)
        if spec.all_neumann:
            rhs = np.full((op_k.nx, op_k.ny), _compat_from_flux(lv, flux))
        else:
            rhs = np.zeros((op_k.nx, op_k.ny))
        if full is None:
            block = op_k.solve(rhs, vals)
            full = op_k.to_full(block, vals)
            continue
        full = prolong_values(full)
        op_k.fill_boundary(full, vals)
        b = rhs.reshape(-1) - op_k.forcing_from_edge_values(vals).reshape(-1)
        qv = op_k.extract(full).reshape(-1)
        if strategy.smoother == "jacobi":
            qv = jacobi_sweeps(op_k.matrix, op_k.diagonal(), b, qv,
                               strategy.nu, strategy.omega)
        else:
            lower, upper = op_k.gauss_seidel_parts()
            qv = gauss_seidel_sweeps(lower, upper, b, qv, strategy.nu)
        si, sj = op_k.unknown_slices()
        full[si, sj] = qv.reshape(op_k.nx, op_k.ny)
    return GridFunction(level, full)


def amplification_factor(m: int, n: int, M: int) -> float:
    """Frequency amplification of one 5-point averaging sweep at mode (m, n)."""
    if not (0 <= m <= M and 0 <= n <= M):
        raise ValueError("mode indices must lie in [0, M]")
    return amplification_ratio(m / (M + 1), n / (M + 1))


def amplification_ratio(m_ratio: float, n_ratio: float) -> float:
    """Same factor on continuous frequency ratios in [0, 1]."""
    return (
        abs(1.0 + 2.0 * np.cos(2.0 * np.pi * m_ratio) + 2.0 * np.cos(2.0 * np.pi * n_ratio))
        / 5.0
    )


# -- strategies -------------------------------------------------------------


def _dirichlet_trace_fns(problem, t: float) -> dict:
    fns = {}
    for e in EDGES:
        ec = problem.boundary.edge(e)
        if ec.kind == DIRICHLET:
            fns[e] = lambda x, y, _d=ec.data, _f=problem.f: _f(_d(t, x, y))
    return fns


def _neumann_flux_values(problem, state: GridFunction, t: float, level: GridLevel) -> dict:
    stride = 2 ** (state.level.level - level.level)
    u = state.values[::stride, ::stride]
    out = {}
    for e in EDGES:
        ec = problem.boundary.edge(e)
        if ec.kind == NEUMANN:
            x, y = edge_line_coords(level, e)
            b = np.broadcast_to(np.asarray(ec.data(t, x, y), float), x.shape)
            out[e] = np.asarray(problem.fprime(_line_of(u, e)), float) * b
    return out


@dataclass(frozen=True)
class ExactElliptic:
    """Correction as the solution of the elliptic problem with the
    nonlinearity's boundary data (trace f(b) / flux f'(u) b)."""

    @property
    def name(self) -> str:
        return "exact-elliptic"

    def build(self, problem, op: DiscreteOperator, state: GridFunction, t: float) -> GridFunction:
        spec = problem.boundary
        trace = _dirichlet_trace_fns(problem, t)
        flux = (
            _neumann_flux_values(problem, state, t, op.level)
            if not spec.all_dirichlet
            else None
        )
        vals = _edge_values(spec, op.level, trace, flux)
        if spec.all_neumann:
            rhs = np.full((op.nx, op.ny), _compat_from_flux(op.level, flux))
        else:
            rhs = np.zeros((op.nx, op.ny))
        block = op.solve(rhs, vals)
        return GridFunction(op.level, op.to_full(block, vals))


@dataclass(frozen=True)
class DirectF:
    """Correction q = f(u_n); compatible because u_n carries the boundary data."""

    @property
    def name(self) -> str:
        return "direct-f"

    def build(self, problem, op, state: GridFunction, t: float) -> GridFunction:
        return correct_direct(state, problem.f)


@dataclass(frozen=True)
class GridAverage:
    """Multilevel moving-average correction; valid for Dirichlet edges only."""

    @property
    def name(self) -> str:
        return "grid-average"

    def build(self, problem, op, state: GridFunction, t: float) -> GridFunction:
        if not problem.boundary.all_dirichlet:
            raise ValueError(
                "grid-average correction requires all-Dirichlet boundaries: "
                "averaging would change the boundary slope, which is what a "
                "Neumann correction must preserve"
            )
        return correct_grid_average(_dirichlet_trace_fns(problem, t), op.level)


@dataclass(frozen=True)
class HalfVCycle:
    """Half-V-cycle correction with a configurable smoother.

    coarsest_s = None picks the offset so the coarsest grid is 9x9 (clamped
    to keep at least one coarsening).
    """

    smoother: str = "jacobi"
    nu: int = 3
    omega: float = 2.0 / 3.0
    coarsest_s: int | None = None

    def __post_init__(self):
        if self.smoother not in ("jacobi", "gauss-seidel"):
            raise ValueError(f"unknown smoother {self.smoother!r}")
        if self.nu < 1:
            raise ValueError("nu must be >= 1")
        if not (0.0 < self.omega < 2.0):
            raise ValueError("omega must lie in (0, 2)")

    @property
    def name(self) -> str:
        tag = "gs" if self.smoother == "gauss-seidel" else "jacobi"
        return f"half-vcycle-{tag}-nu{self.nu}"

    def build(self, problem, op, state: GridFunction, t: float) -> GridFunction:
        spec = problem.boundary
        trace = _dirichlet_trace_fns(problem, t)

        def flux_at_level(k: int):
            return _neumann_flux_values(problem, state, t, GridLevel(k))

        return correct_half_vcycle(spec, op.level, self, trace, flux_at_level)


@dataclass(frozen=True)
class ZeroCorrection:
    """Null correction; a modified scheme with this strategy reproduces the
    standard scheme bit for bit."""

    @property
    def name(self) -> str:
        return "zero"

    def build(self, problem, op, state: GridFunction, t: float) -> GridFunction:
        return GridFunction.zeros(op.level)
