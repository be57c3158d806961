"""Reference solutions, discrete error norms, and convergence-order studies.

The reference integrates the unsplit semi-discrete system u' = A u + r(t) +
f(u) with an adaptive BDF method (sparse Jacobian) at a tolerance well below
the splitting errors under study, and is cached on disk keyed by a content
hash of its configuration (override the cache directory with the
SPLITCORRECT_CACHE environment variable).

Norms follow the interior-only convention for fields that vanish on the
boundary: l2 averages over the (M-1)^2 interior nodes, linf maximizes there.
"""

import hashlib
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .discretization import assemble
from .flows import DEFAULT_TOL, FlowTolerance, StepFailure
from .grid import GridFunction, GridLevel
from .problems import ProblemDef
from .splitting import SchemeConfig, run

log = logging.getLogger(__name__)


class DegenerateError(ValueError):
    """Observed order is undefined for vanishing or non-finite errors."""


def error_norms(E, level: GridLevel) -> tuple[float, float]:
    """(l2, linf) of a difference field over the interior nodes only."""
    vals = E.values if isinstance(E, GridFunction) else np.asarray(E, float)
    interior = vals[1:-1, 1:-1]
    l2 = float(np.sqrt(np.mean(interior**2)))
    linf = float(np.max(np.abs(interior)))
    return l2, linf


def observed_order(e_coarse: float, e_fine: float) -> float:
    """log2 of the error ratio under step-size halving."""
    if not (math.isfinite(e_coarse) and math.isfinite(e_fine)):
        raise DegenerateError("non-finite error")
    if e_coarse <= 0 or e_fine <= 0:
        raise DegenerateError("observed order needs strictly positive errors")
    return math.log2(e_coarse / e_fine)


def cache_directory(cache_dir=None) -> Path:
    if cache_dir is not None:
        return Path(cache_dir)
    env = os.environ.get("SPLITCORRECT_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "splitcorrect"


def reference_cache_path(problem: ProblemDef, level: GridLevel, t_end: float,
                         tol: float, cache_dir=None) -> Path:
    key = f"{problem.name}|{level.level}|{t_end!r}|{tol!r}|ref-v1"
    digest = hashlib.sha256(key.encode()).hexdigest()[:16]
    return cache_directory(cache_dir) / (
        f"reference_{problem.name}_l{level.level}_{digest}.npy"
    )


def reference_solution(problem: ProblemDef, level: GridLevel, t_end: float | None = None,
                       tol: float = 1e-11, cache_dir=None) -> GridFunction:
    """High-accuracy solution of the unsplit semi-discrete system at t_end.

    tol is the relative tolerance of the stiff integrator; it must be at most
    1e-10 so the reference error stays negligible against every tabulated
    splitting error.
    """
    if t_end is None:
        t_end = problem.t_end
    if tol > 1e-10:
        raise ValueError("reference tolerance must be <= 1e-10")
    op = assemble(level, problem.boundary)
    if t_end == 0.0:
        return problem.initial_state(level)

    path = reference_cache_path(problem, level, t_end, tol, cache_dir)
    if path.exists():
        return GridFunction(level, np.load(path))

    y0 = op.extract(problem.initial_state(level).values).reshape(-1)
    A = op.matrix.tocsc()
    f, fprime = problem.f, problem.fprime

    def rhs(t, y):
        return A @ y + op.forcing(t).reshape(-1) + f(y)

    def jac(t, y):
        return A + sp.diags(fprime(y))

    sol = solve_ivp(
        rhs, (0.0, t_end), y0, method="BDF", jac=jac,
        rtol=tol, atol=tol * 1e-2, t_eval=(t_end,),
    )
    if sol.status != 0:
        raise StepFailure(f"reference integration failed: {sol.message}")
    out = op.to_grid_function(sol.y[:, -1].reshape(op.nx, op.ny), t_end)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, out.values)
    return out


@dataclass
class ReportRow:
    tau: float
    err_linf: float
    order_linf: float | None
    err_l2: float
    order_l2: float | None


@dataclass
class ConvergenceReport:
    """Error/order table for one scheme, rows sorted by decreasing tau."""

    scheme: str
    rows: list[ReportRow]
    meta: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("scheme,tau,err_linf,order_linf,err_l2,order_l2\n")
            for r in self.rows:
                o1 = "" if r.order_linf is None else f"{r.order_linf:.17g}"
                o2 = "" if r.order_l2 is None else f"{r.order_l2:.17g}"
                fh.write(
                    f"{self.scheme},{r.tau:.17g},{r.err_linf:.17g},{o1},"
                    f"{r.err_l2:.17g},{o2}\n"
                )

    def final_orders(self) -> tuple[float, float]:
        return self.rows[-1].order_linf, self.rows[-1].order_l2


def format_reports(reports) -> str:
    """Human-readable side-by-side table mirroring the published layout."""
    lines = []
    for rep in reports:
        lines.append(f"scheme: {rep.scheme}")
        lines.append(f"{'tau':>12}  {'linf error':>12} {'order':>6}  {'l2 error':>12} {'order':>6}")
        for r in rep.rows:
            o1 = "--" if r.order_linf is None else f"{r.order_linf:.2f}"
            o2 = "--" if r.order_l2 is None else f"{r.order_l2:.2f}"
            lines.append(
                f"{r.tau:>12.3e}  {r.err_linf:>12.3e} {o1:>6}  {r.err_l2:>12.3e} {o2:>6}"
            )
        lines.append("")
    return "\n".join(lines)


def _check_halving(taus) -> list[float]:
    taus = [float(t) for t in taus]
    if not taus:
        raise ValueError("tau list must be nonempty")
    taus.sort(reverse=True)
    for a, b in zip(taus, taus[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise ValueError("tau list must be a halving sequence")
    return taus


def convergence_study(problem: ProblemDef, level: GridLevel, schemes, taus,
                      t_end: float | None = None, ref_tol: float = 1e-11,
                      tolerances: FlowTolerance = DEFAULT_TOL,
                      cache_dir=None, out_dir=None) -> list[ConvergenceReport]:
    """Error/order tables for a list of schemes against one shared reference.

    schemes is a list of correction strategies, with None meaning the
    standard (uncorrected) scheme.  Writes one CSV per scheme into out_dir
    when given.
    """
    if t_end is None:
        t_end = problem.t_end
    taus = _check_halving(taus)
    h2 = GridLevel(level.level).h ** 2
    log.info(
        "stiffness check: min tau = %.3e vs h^2 = %.3e (ratio %.1f)",
        taus[-1], h2, taus[-1] / h2,
    )
    if taus[-1] <= h2:
        log.warning("smallest tau is not in the stiff regime (tau <= h^2)")

    ref = reference_solution(problem, level, t_end, tol=ref_tol, cache_dir=cache_dir)
    u0 = problem.initial_state(level)
    op = assemble(level, problem.boundary)

    reports = []
    for strategy in schemes:
        rows = []
        prev = None
        for tau in taus:
            cfg = SchemeConfig(tau=tau, t_end=t_end, strategy=strategy,
                               tolerances=tolerances)
            u = run(u0, cfg, op, problem)
            diff = u.values - ref.values
            diff[0, :] = diff[-1, :] = 0.0
            diff[:, 0] = diff[:, -1] = 0.0
            l2, linf = error_norms(diff, level)
            if prev is None:
                rows.append(ReportRow(tau, linf, None, l2, None))
            else:
                rows.append(ReportRow(
                    tau, linf, observed_order(prev[0], linf),
                    l2, observed_order(prev[1], l2),
                ))
            prev = (linf, l2)
        label = "standard" if strategy is None else f"modified-{strategy.name}"
        meta = {
            "problem": problem.name, "level": level.level, "t_end": t_end,
            "scheme": label,
        }
        if strategy is not None and hasattr(strategy, "smoother"):
            meta.update(smoother=strategy.smoother, nu=strategy.nu)
        rep = ConvergenceReport(label, rows, meta)
        reports.append(rep)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            rep.write_csv(out / f"convergence_{problem.name}_{label}.csv")
    return reports
