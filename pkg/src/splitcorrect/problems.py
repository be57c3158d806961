"""Built-in diffusion-reaction test problems on the unit square.

All four instances share the quadratic reaction f(u) = u^2 (f'(u) = 2u) and
run to t = 0.1 by default.  Boundary data uses the outward normal derivative
convention on Neumann edges.
"""

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .discretization import DIRICHLET, NEUMANN, BoundarySpec, EdgeCondition
from .grid import EDGES, GridFunction, GridLevel, edge_line_coords, edge_line_values


class UnknownProblem(KeyError):
    def __str__(self):
        return self.args[0] if self.args else ""


@dataclass(frozen=True)
class ProblemDef:
    name: str
    f: Callable
    fprime: Callable
    u0: Callable
    boundary: BoundarySpec
    t_end: float = 0.1

    def initial_state(self, level: GridLevel) -> GridFunction:
        """Sample u0; warns if it disagrees with Dirichlet data at t = 0."""
        g = GridFunction.from_callable(level, self.u0)
        for e in EDGES:
            ec = self.boundary.edge(e)
            if ec.kind != DIRICHLET:
                continue
            x, y = edge_line_coords(level, e)
            b0 = np.broadcast_to(np.asarray(ec.data(0.0, x, y), float), x.shape)
            gap = float(np.max(np.abs(edge_line_values(g, e) - b0)))
            if gap > 1e-12 * max(1.0, float(np.max(np.abs(b0)))):
                warnings.warn(
                    f"problem {self.name!r}: initial condition deviates from the "
                    f"{e} Dirichlet data at t=0 by {gap:.3e}",
                    stacklevel=2,
                )
        return g


def _f(u):
    return u * u


def _fprime(u):
    return 2.0 * u


def _test1_b(t, x, y):
    return 1.0 + t / (1.0 + x**2 + y**2 + t**2)


def _test1_u0(x, y):
    return 1.0 + np.sin(np.pi * x) ** 2 * np.sin(np.pi * y) ** 2


def _n1_b_plus(t, x, y):
    return np.ones(np.broadcast(x, y).shape)


def _n1_b_minus(t, x, y):
    return -np.ones(np.broadcast(x, y).shape)


def _n1_u0(x, y):
    return x + y + np.sin(np.pi * x) ** 2 * np.sin(np.pi * y) ** 2


def _hump(y):
    return np.exp(-5.0 * (y - 0.5) ** 2)


def _wave_u0(x, y):
    return 3.0 + _hump(y) * np.cos(2.0 * np.pi * (x + y))


def _wave_flux_x0(t, x, y):
    # outward derivative at x = 0
    return 2.0 * np.pi * _hump(y) * np.sin(2.0 * np.pi * (x + y))


def _wave_flux_x1(t, x, y):
    # outward derivative at x = 1 carries the opposite sign
    return -2.0 * np.pi * _hump(y) * np.sin(2.0 * np.pi * (x + y))


def _wave_flux_y0(t, x, y):
    th = 2.0 * np.pi * (x + y)
    return 2.0 * _hump(y) * (5.0 * (y - 0.5) * np.cos(th) + np.pi * np.sin(th))


def _wave_flux_y1(t, x, y):
    th = 2.0 * np.pi * (x + y)
    return -2.0 * _hump(y) * (5.0 * (y - 0.5) * np.cos(th) + np.pi * np.sin(th))


def _wave_trace(t, x, y):
    return 3.0 + np.exp(-5.0 / 4.0) * np.cos(2.0 * np.pi * (x + y))


_CATALOG = {
    "dirichlet-test1": ProblemDef(
        name="dirichlet-test1",
        f=_f,
        fprime=_fprime,
        u0=_test1_u0,
        boundary=BoundarySpec.uniform(DIRICHLET, _test1_b),
    ),
    "neumann-n1": ProblemDef(
        name="neumann-n1",
        f=_f,
        fprime=_fprime,
        u0=_n1_u0,
        boundary=BoundarySpec(
            left=EdgeCondition(NEUMANN, _n1_b_minus),
            right=EdgeCondition(NEUMANN, _n1_b_plus),
            bottom=EdgeCondition(NEUMANN, _n1_b_minus),
            top=EdgeCondition(NEUMANN, _n1_b_plus),
        ),
    ),
    "neumann-n2": ProblemDef(
        name="neumann-n2",
        f=_f,
        fprime=_fprime,
        u0=_wave_u0,
        boundary=BoundarySpec(
            left=EdgeCondition(NEUMANN, _wave_flux_x0),
            right=EdgeCondition(NEUMANN, _wave_flux_x1),
            bottom=EdgeCondition(NEUMANN, _wave_flux_y0),
            top=EdgeCondition(NEUMANN, _wave_flux_y1),
        ),
    ),
    "mixed": ProblemDef(
        name="mixed",
        f=_f,
        fprime=_fprime,
        u0=_wave_u0,
        boundary=BoundarySpec(
            left=EdgeCondition(NEUMANN, _wave_flux_x0),
            right=EdgeCondition(NEUMANN, _wave_flux_x1),
            bottom=EdgeCondition(DIRICHLET, _wave_trace),
            top=EdgeCondition(DIRICHLET, _wave_trace),
        ),
    ),
}

PROBLEM_NAMES = tuple(_CATALOG)


def catalog(name: str) -> ProblemDef:
    try:
        return _CATALOG[name]
    except KeyError:
        raise UnknownProblem(
            f"unknown problem {name!r}; available: {', '.join(PROBLEM_NAMES)}"
        ) from None
