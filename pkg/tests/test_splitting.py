import numpy as np
import pytest

from splitcorrect.correction import DirectF, ExactElliptic, ZeroCorrection
from splitcorrect.discretization import BoundarySpec, DIRICHLET, assemble
from splitcorrect.flows import FlowTolerance, diffusion_flow, reaction_flow
from splitcorrect.grid import GridFunction, GridLevel
from splitcorrect.problems import ProblemDef, catalog
from splitcorrect.splitting import SchemeConfig, run, strang_step


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(tau=0.0, t_end=0.1)
    with pytest.raises(ValueError):
        SchemeConfig(tau=0.03, t_end=0.1)  # does not divide
    cfg = SchemeConfig(tau=0.025, t_end=0.1)
    assert cfg.n_steps == 4
    assert SchemeConfig(tau=0.025, t_end=0.0).n_steps == 0
    assert cfg.label == "standard"
    assert SchemeConfig(0.025, 0.1, ExactElliptic()).label == "modified-exact-elliptic"


def test_zero_steps_returns_initial():
    p = catalog("dirichlet-test1")
    lv = GridLevel(3)
    op = assemble(lv, p.boundary)
    u0 = p.initial_state(lv)
    out = run(u0, SchemeConfig(tau=0.01, t_end=0.0), op, p)
    assert out is u0


def test_zero_reaction_reduces_to_diffusion():
    # f = 0: the reaction halves are identities, one step equals the pure
    # diffusion flow over tau
    spec = BoundarySpec.uniform(DIRICHLET, lambda t, x, y: 1.0 + 0.1 * t + 0.0 * x)
    p = ProblemDef("nof", lambda u: 0.0 * u, lambda u: 0.0 * u,
                   lambda x, y: 1.0 + 0.0 * x, spec)
    lv = GridLevel(4)
    op = assemble(lv, spec)
    u0 = p.initial_state(lv)
    tau = 0.02
    stepped = strang_step(u0, 0.0, SchemeConfig(tau, tau), op, p)
    direct = diffusion_flow(op, u0, 0.0, tau)
    tol = FlowTolerance()
    assert np.max(np.abs(stepped.values - direct.values)) < 10 * tol.rel_tol


def test_directf_constant_equilibrium():
    # u = c with consistent data: q = c^2 keeps the reaction halves stationary
    c = 1.5
    spec = BoundarySpec.uniform(DIRICHLET, lambda t, x, y: c + 0.0 * x)
    p = ProblemDef("const", lambda u: u * u, lambda u: 2 * u,
                   lambda x, y: c + 0.0 * x, spec)
    lv = GridLevel(3)
    op = assemble(lv, spec)
    u0 = p.initial_state(lv)
    q = DirectF().build(p, op, u0, 0.0)
    assert np.array_equal(q.values, np.full(lv.shape, c * c))
    w = reaction_flow(u0, p.f, 0.05, q=q)
    assert np.max(np.abs(w.values - c)) < 1e-10


def test_zero_field_strategy_matches_standard_bitwise():
    p = catalog("dirichlet-test1")
    lv = GridLevel(4)
    op = assemble(lv, p.boundary)
    u0 = p.initial_state(lv)
    a = run(u0, SchemeConfig(0.025, 0.1), op, p)
    b = run(u0, SchemeConfig(0.025, 0.1, ZeroCorrection()), op, p)
    assert np.array_equal(a.values, b.values)


def test_determinism():
    p = catalog("neumann-n1")
    lv = GridLevel(3)
    op = assemble(lv, p.boundary)
    u0 = p.initial_state(lv)
    cfg = SchemeConfig(0.025, 0.05, ExactElliptic())
    a = run(u0, cfg, op, p)
    b = run(u0, cfg, op, p)
    assert np.array_equal(a.values, b.values)


def test_modified_self_convergence_second_order():
    # successive halving of tau shrinks the change by ~4x
    p = catalog("dirichlet-test1")
    lv = GridLevel(4)
    op = assemble(lv, p.boundary)
    u0 = p.initial_state(lv)
    t_end = 0.1
    sols = [run(u0, SchemeConfig(t_end / n, t_end, ExactElliptic()), op, p)
            for n in (4, 8, 16, 32)]
    diffs = [np.max(np.abs(a.values - b.values))
             for a, b in zip(sols, sols[1:])]
    for d0, d1 in zip(diffs, diffs[1:]):
        assert 3.3 < d0 / d1 < 4.7


def test_single_table_step_runs_clean():
    p = catalog("dirichlet-test1")
    lv = GridLevel(7)
    op = assemble(lv, p.boundary)
    u0 = p.initial_state(lv)
    out = strang_step(u0, 0.0, SchemeConfig(2.5e-2, 0.1), op, p)
    assert np.all(np.isfinite(out.values))
