import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from splitcorrect.discretization import (
    DIRICHLET,
    NEUMANN,
    BoundarySpec,
    assemble,
)
from splitcorrect.flows import (
    BlowUp,
    FlowTolerance,
    diffusion_flow,
    reaction_flow,
    _phi_stack,
)
from splitcorrect.grid import GridFunction, GridLevel
from splitcorrect.problems import catalog


def zero_dirichlet(level):
    return assemble(level, BoundarySpec.uniform(DIRICHLET, lambda t, x, y: 0.0 * x))


def test_phi_stack_against_quadrature():
    # oracle: phi_k(z) = int_0^1 e^(z(1-s)) s^(k-1)/(k-1)! ds via fine quadrature
    import math

    z = np.array([-300.0, -5.0, -0.75, -0.25, -1e-3, 0.0])
    phis = _phi_stack(z, 4)
    nodes, weights = np.polynomial.legendre.leggauss(400)
    s = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    for k in range(1, 5):
        integrand = np.exp(np.outer(z, 1.0 - s)) * s**(k - 1) / math.factorial(k - 1)
        ref = integrand @ w
        assert np.max(np.abs(phis[k] - ref)) < 1e-12
    assert np.allclose(phis[0], np.exp(z), rtol=1e-14)


def test_eigen_decay_exact_discrete_rate():
    lv = GridLevel(5)
    op = zero_dirichlet(lv)
    h = lv.h
    v0 = GridFunction.from_callable(lv, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    dt = 0.013
    out = diffusion_flow(op, v0, 0.0, dt)
    rate = (2.0 / h**2) * (2.0 - 2.0 * np.cos(np.pi * h))
    exact = np.exp(-rate * dt) * v0.values
    denom = np.max(np.abs(exact))
    assert np.max(np.abs(out.values - exact)) / denom < 1e-8


def test_diffusion_equilibrium():
    # v0 solving A v + q + r = 0 stays put
    lv = GridLevel(4)
    p = catalog("dirichlet-test1")
    spec = BoundarySpec.uniform(DIRICHLET, lambda t, x, y: np.ones_like(x))
    op = assemble(lv, spec)
    q = GridFunction.from_callable(lv, lambda x, y: 0.0 * x + 3.0)
    from splitcorrect.discretization import solve_poisson

    v0 = solve_poisson(op, -op.extract(q.values))
    out = diffusion_flow(op, v0, 0.0, 0.02, q=q)
    assert np.max(np.abs(out.values - v0.values)) < 1e-9


def test_neumann_zero_flux_conserves_mean():
    lv = GridLevel(4)
    z = lambda t, x, y: 0.0 * x
    spec = BoundarySpec.uniform(NEUMANN, z)
    op = assemble(lv, spec)
    rng = np.random.default_rng(2)
    v0 = GridFunction(lv, 1.0 + 0.1 * rng.standard_normal(lv.shape))
    out = diffusion_flow(op, v0, 0.0, 0.05)
    w = op.null_weights()
    m0 = w @ v0.values.reshape(-1)
    m1 = w @ out.values.reshape(-1)
    assert abs(m1 - m0) / abs(m0) < 1e-8


def test_diffusion_against_dense_expm():
    # time-invariant forcing: v(dt) = e^(A dt) v0 + A^(-1)(e^(A dt) - I)(r + q)
    lv = GridLevel(3)
    spec = BoundarySpec.uniform(DIRICHLET, lambda t, x, y: 1.0 + x + 0.5 * y)
    op = assemble(lv, spec)
    rng = np.random.default_rng(4)
    v0 = GridFunction(lv, rng.standard_normal(lv.shape))
    q = GridFunction(lv, rng.standard_normal(lv.shape))
    dt = 0.07
    A = op.matrix.toarray()
    c = op.forcing(0.0).reshape(-1) + op.extract(q.values).reshape(-1)
    E = expm(A * dt)
    u_ref = E @ op.extract(v0.values).reshape(-1) + np.linalg.solve(
        A, (E - np.eye(A.shape[0])) @ c
    )
    out = diffusion_flow(op, v0, 0.0, dt, q=q)
    assert np.max(np.abs(op.extract(out.values).reshape(-1) - u_ref)) < 1e-11


def test_diffusion_time_dependent_against_radau():
    lv = GridLevel(3)
    p = catalog("dirichlet-test1")
    op = assemble(lv, p.boundary)
    v0 = p.initial_state(lv)
    t0, dt = 0.035, 0.0125
    A = op.matrix.toarray()

    def rhs(t, y):
        return A @ y + op.forcing(t).reshape(-1)

    sol = solve_ivp(rhs, (t0, t0 + dt), op.extract(v0.values).reshape(-1),
                    method="Radau", rtol=1e-12, atol=1e-14)
    out = diffusion_flow(op, v0, t0, dt)
    assert np.max(np.abs(op.extract(out.values).reshape(-1) - sol.y[:, -1])) < 1e-10


def test_diffusion_flow_composition():
    lv = GridLevel(4)
    p = catalog("dirichlet-test1")
    op = assemble(lv, p.boundary)
    v0 = p.initial_state(lv)
    dt = 0.02
    once = diffusion_flow(op, v0, 0.0, dt)
    half = diffusion_flow(op, diffusion_flow(op, v0, 0.0, dt / 2), dt / 2, dt / 2)
    tol = FlowTolerance()
    assert np.max(np.abs(once.values - half.values)) < 10 * tol.rel_tol * np.max(
        np.abs(once.values)
    )


def test_diffusion_boundary_carries_data():
    lv = GridLevel(3)
    p = catalog("dirichlet-test1")
    op = assemble(lv, p.boundary)
    out = diffusion_flow(op, p.initial_state(lv), 0.0, 0.05)
    x = lv.coords()
    expect = p.boundary.left.data(0.05, np.zeros_like(x), x)
    assert np.array_equal(out.values[0, :], expect)


def test_diffusion_rejects_bad_dt():
    lv = GridLevel(3)
    op = zero_dirichlet(lv)
    with pytest.raises(ValueError):
        diffusion_flow(op, GridFunction.zeros(lv), 0.0, 0.0)


def test_reaction_closed_form():
    lv = GridLevel(2)
    w0 = GridFunction(lv, np.full(lv.shape, 1.0))
    out = reaction_flow(w0, lambda u: u * u, 0.1)
    assert abs(out.values[1, 1] - 1.0 / 0.9) < 1e-9 / 0.9


def test_reaction_equilibrium_with_correction():
    lv = GridLevel(2)
    c = 1.7
    w0 = GridFunction(lv, np.full(lv.shape, c))
    q = GridFunction(lv, np.full(lv.shape, c * c))
    out = reaction_flow(w0, lambda u: u * u, 0.2, q=q)
    assert np.max(np.abs(out.values - c)) < 1e-10


def test_reaction_blowup():
    lv = GridLevel(2)
    w0 = GridFunction(lv, np.full(lv.shape, 10.0))
    with pytest.raises(BlowUp):
        reaction_flow(w0, lambda u: u * u, 0.1)  # pole at t = 1/w0 = 0.1


def test_reaction_node_local_permutation():
    lv = GridLevel(3)
    rng = np.random.default_rng(8)
    vals = rng.uniform(0.5, 2.0, lv.shape)
    qv = rng.uniform(-1.0, 1.0, lv.shape)
    perm = rng.permutation(lv.shape[0] * lv.shape[1])
    out = reaction_flow(GridFunction(lv, vals), lambda u: u * u, 0.05,
                        q=GridFunction(lv, qv))
    pv = vals.reshape(-1)[perm].reshape(lv.shape)
    pq = qv.reshape(-1)[perm].reshape(lv.shape)
    pout = reaction_flow(GridFunction(lv, pv), lambda u: u * u, 0.05,
                         q=GridFunction(lv, pq))
    # the adaptive controller is exactly permutation-invariant (max norm);
    # the remaining freedom is SIMD-lane rounding inside the BLAS-backed
    # stage combinations, so allow a couple of ulp per node
    expect = out.values.reshape(-1)[perm]
    assert np.max(np.abs(pout.values.reshape(-1) - expect)) <= 4e-16 * np.max(
        np.abs(expect)
    )


def test_modified_rhs_sum_matches_unmodified():
    # the correction cancels between the two sub-problem right-hand sides
    lv = GridLevel(3)
    p = catalog("dirichlet-test1")
    op = assemble(lv, p.boundary)
    rng = np.random.default_rng(9)
    v = rng.standard_normal((op.nx, op.ny))
    w = rng.standard_normal((op.nx, op.ny))
    qb = rng.standard_normal((op.nx, op.ny))
    lhs = (op.apply(v, 0.2) + qb) + (p.f(w) - qb)
    rhs = op.apply(v, 0.2) + p.f(w)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_tolerance_validation():
    with pytest.raises(ValueError):
        FlowTolerance(rel_tol=0.0)


def test_diffusion_step_failure_on_kinked_data():
    # a kink inside the step window cannot be resolved by any polynomial
    # interpolant at the 1e-10 budget
    from splitcorrect.flows import StepFailure

    lv = GridLevel(3)
    spec = BoundarySpec.uniform(
        DIRICHLET, lambda t, x, y: np.abs(t - 0.01) + 0.0 * x
    )
    op = assemble(lv, spec)
    v0 = GridFunction.zeros(lv)
    with pytest.raises(StepFailure):
        diffusion_flow(op, v0, 0.0, 0.02)
