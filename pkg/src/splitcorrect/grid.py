"""Uniform dyadic grids on the closed unit square.

Fields live on the (M+1) x (M+1) nodes of [0,1]^2 with M = 2^level and mesh
width h = 2^-level; node (i, j) sits at (i*h, j*h) and values are stored in a
dense array indexed [i, j].  The module also fixes the boundary partition used
everywhere else (corners belong to the bottom/top edges) and provides the two
inter-grid transfer operators of the multilevel machinery: bilinear
prolongation and injection.
"""

from dataclasses import dataclass

import numpy as np

#: Canonical edge order: left (x=0), right (x=1), bottom (y=0), top (y=1).
EDGES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class GridLevel:
    """Dyadic refinement level (>= 1) of the unit square: M = 2^level intervals."""

    level: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"grid level must be >= 1, got {self.level}")

    @property
    def M(self) -> int:
        return 2 ** self.level

    @property
    def h(self) -> float:
        # exact in binary floating point
        return 2.0 ** (-self.level)

    @property
    def shape(self) -> tuple[int, int]:
        n = self.M + 1
        return (n, n)

    def coords(self) -> np.ndarray:
        """Nodal coordinates 0, h, 2h, ..., 1 along one axis."""
        return np.arange(self.M + 1) * self.h

    def coarser(self) -> "GridLevel":
        return GridLevel(self.level - 1)

    def finer(self) -> "GridLevel":
        return GridLevel(self.level + 1)


@dataclass
class GridFunction:
    """Nodal values of a scalar field; ``values[i, j]`` belongs to (i*h, j*h)."""

    level: GridLevel
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != self.level.shape:
            raise ValueError(
                f"expected shape {self.level.shape} at level {self.level.level}, "
                f"got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function contains non-finite values")

    @classmethod
    def zeros(cls, level: GridLevel) -> "GridFunction":
        return cls(level, np.zeros(level.shape))

    @classmethod
    def from_callable(cls, level: GridLevel, fn) -> "GridFunction":
        """Sample ``fn(x, y)`` at every node; fn may broadcast or return a scalar."""
        x = level.coords()
        X, Y = np.meshgrid(x, x, indexing="ij")
        vals = np.asarray(fn(X, Y), dtype=float)
        return cls(level, np.broadcast_to(vals, level.shape).copy())

    def copy(self) -> "GridFunction":
        return GridFunction(self.level, self.values.copy())

    def interior(self) -> np.ndarray:
        """View of the (M-1) x (M-1) interior block."""
        return self.values[1:-1, 1:-1]


def boundary_nodes(level: GridLevel, edge: str) -> list[tuple[int, int]]:
    """Ordered index pairs of the nodes owned by ``edge``.

    Corners belong to the horizontal edges (bottom/top); left/right run over
    j = 1..M-1 only, so the four edges partition the boundary.
    """
    M = level.M
    if edge == "left":
        return [(0, j) for j in range(1, M)]
    if edge == "right":
        return [(M, j) for j in range(1, M)]
    if edge == "bottom":
        return [(i, 0) for i in range(M + 1)]
    if edge == "top":
        return [(i, M) for i in range(M + 1)]
    raise ValueError(f"unknown edge {edge!r}")


def edge_line_coords(level: GridLevel, edge: str) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of the full node line of an edge, corners included.

    This is the sampling line for boundary data: every edge evaluates its data
    at all M+1 points of its side, independent of the ownership partition.
    """
    c = level.coords()
    zeros = np.zeros_like(c)
    ones = np.ones_like(c)
    if edge == "left":
        return zeros, c
    if edge == "right":
        return ones, c
    if edge == "bottom":
        return c, zeros
    if edge == "top":
        return c, ones
    raise ValueError(f"unknown edge {edge!r}")


def edge_line_values(g: GridFunction, edge: str) -> np.ndarray:
    """Values of g along the full node line of an edge (length M+1)."""
    if edge == "left":
        return g.values[0, :].copy()
    if edge == "right":
        return g.values[-1, :].copy()
    if edge == "bottom":
        return g.values[:, 0].copy()
    if edge == "top":
        return g.values[:, -1].copy()
    raise ValueError(f"unknown edge {edge!r}")


def boundary_trace(g: GridFunction, edges) -> list[tuple[tuple[int, int], float]]:
    """Values of g at the boundary nodes of the requested edges.

    Edges are visited in the order given; within an edge, nodes follow the
    boundary_nodes ordering.  The partition convention applies, so corners
    appear only under bottom/top.
    """
    edges = tuple(edges)
    if not edges:
        raise ValueError("edge set must be nonempty")
    out = []
    for e in edges:
        for (i, j) in boundary_nodes(g.level, e):
            out.append(((i, j), float(g.values[i, j])))
    return out


def prolong_values(coarse: np.ndarray) -> np.ndarray:
    """One dyadic refinement of a square nodal array.

    Even-indexed fine nodes copy the coarse values, fine nodes that are odd in
    one direction take the 2-point average of their coarse neighbours along
    that direction, and odd/odd nodes take the 4-point cell average.  Covers
    the whole fine array, boundary included.
    """
    coarse = np.asarray(coarse, dtype=float)
    n = coarse.shape[0]
    if coarse.shape != (n, n) or n < 2:
        raise ValueError("expected a square nodal array with at least 2x2 nodes")
    fine = np.empty((2 * n - 1, 2 * n - 1))
    fine[::2, ::2] = coarse
    fine[1::2, ::2] = 0.5 * (coarse[:-1, :] + coarse[1:, :])
    fine[::2, 1::2] = 0.5 * (coarse[:, :-1] + coarse[:, 1:])
    fine[1::2, 1::2] = 0.25 * (
        coarse[:-1, :-1] + coarse[1:, :-1] + coarse[:-1, 1:] + coarse[1:, 1:]
    )
    return fine


def prolong(coarse: GridFunction) -> GridFunction:
    """Interpolate a grid function to the next finer dyadic level."""
    return GridFunction(coarse.level.finer(), prolong_values(coarse.values))


def restrict_inject(fine: GridFunction) -> GridFunction:
    """Restrict to the next coarser level by injection at even-indexed nodes."""
    if fine.level.level < 2:
        raise ValueError("cannot restrict below the coarsest admissible level")
    return GridFunction(fine.level.coarser(), fine.values[::2, ::2].copy())


def write_csv(g: GridFunction, path) -> None:
    """Serialize as CSV with header i,j,x,y,value in row-major node order."""
    h = g.level.h
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i,j,x,y,value\n")
        M = g.level.M
        for i in range(M + 1):
            x = i * h
            for j in range(M + 1):
                fh.write(f"{i},{j},{x:.17g},{j * h:.17g},{g.values[i, j]:.17g}\n")
