"""Command-line front end.

Subcommands: run, converge, correction-dump, amplification.  Options can also
come from a flat key=value config file (--config); explicit flags win.  Every
error path exits nonzero with a single machine-parseable line on stderr of the
form "error: <slug>: <detail>".

Report paths write CSV files and, unless --no-figures is given, PNG figures
next to them.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import figures
from .correction import (
    DirectF,
    ExactElliptic,
    GridAverage,
    HalfVCycle,
    amplification_ratio,
)
from .discretization import SingularSystem, assemble
from .flows import BlowUp, StepFailure
from .grid import GridLevel, write_csv
from .harness import (
    DegenerateError,
    convergence_study,
    error_norms,
    format_reports,
    reference_cache_path,
    reference_solution,
)
from .problems import PROBLEM_NAMES, UnknownProblem, catalog
from .splitting import SchemeConfig, run as run_scheme

_STRATEGIES = ("exact-elliptic", "direct-f", "grid-average", "half-vcycle")
_SMOOTHER_ALIASES = {
    "jacobi": "jacobi",
    "gs": "gauss-seidel",
    "gauss-seidel": "gauss-seidel",
}


class CliError(Exception):
    def __init__(self, slug: str, message: str):
        super().__init__(message)
        self.slug = slug


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="splitcorrect",
        description="Boundary-corrected Strang splitting on the unit square",
    )
    sub = top.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file; flags win")
    common.add_argument("--problem", help=f"one of: {', '.join(PROBLEM_NAMES)}")
    common.add_argument("--level", type=int, help="dyadic grid level (default 7)")
    common.add_argument("--t-end", type=float, dest="t_end")
    common.add_argument("--scheme", action="append",
                        help="standard | modified[:strategy[:smoother][:nu=N]"
                             "[:omega=W][:s=K]]; repeatable for converge")
    common.add_argument("--strategy", choices=_STRATEGIES,
                        help="default strategy for modified schemes")
    common.add_argument("--smoother", choices=tuple(_SMOOTHER_ALIASES),
                        help="half-vcycle smoother")
    common.add_argument("--nu", type=int, help="half-vcycle smoothing sweeps")
    common.add_argument("--omega", type=float, help="weighted-Jacobi weight")
    common.add_argument("--coarsest-s", type=int, dest="coarsest_s",
                        help="half-vcycle coarsening offset")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("--ref-tol", type=float, dest="ref_tol",
                        help="reference integrator tolerance (default 1e-11)")
    common.add_argument("--no-figures", action="store_true", default=None,
                        help="write CSV only, skip PNG rendering")

    p_run = sub.add_parser("run", parents=[common],
                           help="single run; writes the final field")
    p_run.add_argument("--tau", type=float)
    p_run.add_argument("--with-reference", action="store_true", default=None,
                       help="also compute the reference and an error report")

    p_conv = sub.add_parser("converge", parents=[common],
                            help="error/order tables over a tau halving sequence")
    p_conv.add_argument("--tau-list", dest="tau_list",
                        help="comma-separated halving sequence of step sizes")

    p_dump = sub.add_parser("correction-dump", parents=[common],
                            help="write the correction field at a given time")
    p_dump.add_argument("--tau", type=float)
    p_dump.add_argument("--at-time", type=float, dest="at_time",
                        help="time at which the correction is built (default 0.1)")

    p_amp = sub.add_parser("amplification", parents=[common],
                           help="averaging-sweep damping curve")
    p_amp.add_argument("--grid-m", type=int, dest="grid_m",
                       help="number of intervals M (default 128)")
    p_amp.add_argument("--ratio", type=float,
                       help="fixed second frequency ratio in [0, 0.5]")
    return top


def _read_config(path: str) -> dict:
    values: dict = {}
    p = Path(path)
    if not p.exists():
        raise CliError("bad-config", f"config file not found: {path}")
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError("bad-config", f"{path}:{lineno}: expected key=value")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if key == "scheme":
            values.setdefault("scheme", []).append(val)
        else:
            values[key] = val
    return values


_CONFIG_TYPES = {
    "level": int, "tau": float, "t_end": float, "ref_tol": float,
    "nu": int, "omega": float, "coarsest_s": int, "grid_m": int,
    "ratio": float, "at_time": float,
    "with_reference": lambda s: s.lower() in ("1", "true", "yes"),
    "no_figures": lambda s: s.lower() in ("1", "true", "yes"),
}


def _resolve(args: argparse.Namespace) -> dict:
    """Fallback chain per option: explicit flag, config file, built-in default."""
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    out: dict = {}
    for key, val in vars(args).items():
        if key in ("config", "command"):
            continue
        if val is not None:
            out[key] = val
        elif key in cfg:
            raw = cfg[key]
            if key == "scheme":
                out[key] = raw
            else:
                conv = _CONFIG_TYPES.get(key, str)
                try:
                    out[key] = conv(raw)
                except ValueError:
                    raise CliError("bad-config", f"cannot parse {key}={raw!r}")
        else:
            out[key] = None
    if "tau_list" in out and isinstance(out.get("tau_list"), str):
        try:
            out["tau_list"] = [float(s) for s in out["tau_list"].split(",") if s]
        except ValueError:
            raise CliError("bad-tau", f"cannot parse tau list {out['tau_list']!r}")
    out.setdefault("scheme", None)
    defaults = {
        "level": 7, "t_end": None, "out": "out", "ref_tol": 1e-11,
        "strategy": "exact-elliptic", "smoother": "jacobi", "nu": 3,
        "omega": 2.0 / 3.0, "coarsest_s": None, "no_figures": False,
    }
    for k, v in defaults.items():
        if out.get(k) is None:
            out[k] = v
    return out


def _parse_scheme(token: str, cfg: dict):
    """Scheme token to a strategy (None = standard)."""
    parts = token.strip().split(":")
    if parts[0] == "standard":
        if len(parts) > 1:
            raise CliError("bad-scheme", f"standard takes no options: {token!r}")
        return None
    if parts[0] != "modified":
        raise CliError("bad-scheme", f"scheme must be standard or modified: {token!r}")
    strategy = parts[1] if len(parts) > 1 else cfg["strategy"]
    opts = {"smoother": _SMOOTHER_ALIASES[cfg["smoother"]], "nu": cfg["nu"],
            "omega": cfg["omega"], "coarsest_s": cfg["coarsest_s"]}
    for part in parts[2:]:
        if part in _SMOOTHER_ALIASES:
            opts["smoother"] = _SMOOTHER_ALIASES[part]
        elif part.startswith("nu="):
            opts["nu"] = int(part[3:])
        elif part.startswith("omega="):
            opts["omega"] = float(part[6:])
        elif part.startswith("s="):
            opts["coarsest_s"] = int(part[2:])
        else:
            raise CliError("bad-scheme", f"unknown scheme option {part!r}")
    try:
        if strategy == "exact-elliptic":
            return ExactElliptic()
        if strategy == "direct-f":
            return DirectF()
        if strategy == "grid-average":
            return GridAverage()
        if strategy == "half-vcycle":
            return HalfVCycle(opts["smoother"], opts["nu"], opts["omega"],
                              opts["coarsest_s"])
    except ValueError as e:
        raise CliError("bad-scheme", str(e))
    raise CliError("bad-scheme", f"unknown strategy {strategy!r}")


def _require(cfg: dict, key: str, slug: str, what: str):
    if cfg.get(key) is None:
        raise CliError(slug, f"missing required option: {what}")
    return cfg[key]


def _load_problem(cfg: dict):
    name = _require(cfg, "problem", "unknown-problem", "--problem")
    try:
        problem = catalog(name)
    except UnknownProblem as e:
        raise CliError("unknown-problem", str(e))
    if cfg["t_end"] is None:
        cfg["t_end"] = problem.t_end
    return problem


def _scheme_label(strategy) -> str:
    return "standard" if strategy is None else f"modified-{strategy.name}"


def _check_strategy_fits(strategy, problem):
    if isinstance(strategy, GridAverage) and not problem.boundary.all_dirichlet:
        raise CliError(
            "strategy-mismatch",
            "grid-average is restricted to all-Dirichlet problems; averaging "
            "would perturb the boundary slope that a Neumann correction must match",
        )


def _make_config(cfg: dict, tau: float, strategy) -> SchemeConfig:
    try:
        return SchemeConfig(tau=tau, t_end=cfg["t_end"], strategy=strategy)
    except ValueError as e:
        raise CliError("bad-tau", str(e))


def _cmd_run(cfg: dict) -> int:
    problem = _load_problem(cfg)
    tau = _require(cfg, "tau", "bad-tau", "--tau")
    schemes = cfg["scheme"] or ["standard"]
    if len(schemes) != 1:
        raise CliError("bad-scheme", "run takes exactly one --scheme")
    strategy = _parse_scheme(schemes[0], cfg)
    _check_strategy_fits(strategy, problem)
    level = GridLevel(cfg["level"])
    scheme_cfg = _make_config(cfg, tau, strategy)
    op = assemble(level, problem.boundary)
    u = run_scheme(problem.initial_state(level), scheme_cfg, op, problem)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    label = _scheme_label(strategy)
    tag = f"{problem.name}_{label}"
    write_csv(u, out / f"solution_{tag}.csv")
    if not cfg["no_figures"]:
        figures.save_field_figure(u, out / f"solution_{tag}.png",
                                  title=f"{problem.name} t={cfg['t_end']:g} {label}")
    ref_path = reference_cache_path(problem, level, cfg["t_end"], cfg["ref_tol"])
    if cfg.get("with_reference") or ref_path.exists():
        ref = reference_solution(problem, level, cfg["t_end"], tol=cfg["ref_tol"])
        diff = u.values - ref.values
        diff[0, :] = diff[-1, :] = 0.0
        diff[:, 0] = diff[:, -1] = 0.0
        l2, linf = error_norms(diff, level)
        with open(out / f"error_{tag}.csv", "w", encoding="utf-8") as fh:
            fh.write("scheme,tau,err_linf,err_l2\n")
            fh.write(f"{label},{tau:.17g},{linf:.17g},{l2:.17g}\n")
        print(f"{label}: tau={tau:g} err_linf={linf:.6e} err_l2={l2:.6e}")
    print(f"wrote {out / f'solution_{tag}.csv'}")
    return 0


def _cmd_converge(cfg: dict) -> int:
    problem = _load_problem(cfg)
    taus = cfg.get("tau_list")
    if not taus:
        raise CliError("bad-tau", "converge needs a nonempty --tau-list")
    tokens = cfg["scheme"] or ["standard"]
    strategies = [_parse_scheme(tok, cfg) for tok in tokens]
    for st in strategies:
        _check_strategy_fits(st, problem)
    level = GridLevel(cfg["level"])
    out = Path(cfg["out"])
    try:
        reports = convergence_study(
            problem, level, strategies, taus, t_end=cfg["t_end"],
            ref_tol=cfg["ref_tol"], out_dir=out,
        )
    except ValueError as e:
        raise CliError("bad-tau", str(e))
    sys.stdout.write(format_reports(reports))
    if not cfg["no_figures"]:
        figures.save_convergence_figure(
            reports, out / f"convergence_{problem.name}.png",
            title=f"{problem.name} (level {level.level}, t={cfg['t_end']:g})",
        )
    return 0


def _cmd_correction_dump(cfg: dict) -> int:
    problem = _load_problem(cfg)
    tau = _require(cfg, "tau", "bad-tau", "--tau")
    t = cfg.get("at_time")
    if t is None:
        t = problem.t_end
    schemes = cfg["scheme"] or [f"modified:{cfg['strategy']}"]
    strategy = _parse_scheme(schemes[0], cfg)
    if strategy is None:
        raise CliError("bad-scheme", "correction-dump needs a modified scheme")
    _check_strategy_fits(strategy, problem)
    level = GridLevel(cfg["level"])
    op = assemble(level, problem.boundary)
    state = problem.initial_state(level)
    if t > 0:
        cfg_t = dict(cfg)
        cfg_t["t_end"] = t
        state = run_scheme(state, _make_config(cfg_t, tau, strategy), op, problem)
    q = strategy.build(problem, op, state, t)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    stem = f"correction_{problem.name}_{strategy.name}_t{t:g}"
    write_csv(q, out / f"{stem}.csv")
    if not cfg["no_figures"]:
        figures.save_field_figure(q, out / f"{stem}.png",
                                  title=f"correction {strategy.name} at t={t:g}")
    print(f"wrote {out / (stem + '.csv')}")
    return 0


def _cmd_amplification(cfg: dict) -> int:
    M = cfg.get("grid_m") or 128
    ratio = cfg.get("ratio")
    if ratio is None:
        ratio = 0.25
    if not (0.0 <= ratio <= 0.5):
        raise CliError("bad-ratio", f"ratio must lie in [0, 0.5], got {ratio}")
    ms = np.arange(int((M + 1) / 2) + 1)
    ratios = ms / (M + 1)
    rhos = np.array([amplification_ratio(r, ratio) for r in ratios])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    stem = f"amplification_M{M}_n{ratio:g}"
    with open(out / f"{stem}.csv", "w", encoding="utf-8") as fh:
        fh.write("m_ratio,rho\n")
        for r, v in zip(ratios, rhos):
            fh.write(f"{r:.17g},{v:.17g}\n")
    if not cfg["no_figures"]:
        figures.save_amplification_figure(ratios, rhos, out / f"{stem}.png", ratio)
    print(f"wrote {out / (stem + '.csv')}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "converge": _cmd_converge,
    "correction-dump": _cmd_correction_dump,
    "amplification": _cmd_amplification,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg)
    except CliError as e:
        print(f"error: {e.slug}: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: invalid-config: {e}", file=sys.stderr)
        return 2
    except (SingularSystem, StepFailure, BlowUp, DegenerateError) as e:
        print(f"error: runtime: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
