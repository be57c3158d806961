import numpy as np
import pytest

from splitcorrect.grid import (
    EDGES,
    GridFunction,
    GridLevel,
    boundary_nodes,
    boundary_trace,
    prolong,
    prolong_values,
    restrict_inject,
    write_csv,
)


def test_grid_level_basics():
    lv = GridLevel(3)
    assert lv.M == 8
    assert lv.h * lv.M == 1.0
    assert lv.shape == (9, 9)
    c = lv.coords()
    assert c[0] == 0.0 and c[-1] == 1.0
    assert np.allclose(np.diff(c), lv.h)
    with pytest.raises(ValueError):
        GridLevel(0)


def test_grid_function_validation():
    lv = GridLevel(2)
    with pytest.raises(ValueError):
        GridFunction(lv, np.zeros((3, 3)))
    bad = np.zeros(lv.shape)
    bad[1, 1] = np.nan
    with pytest.raises(ValueError):
        GridFunction(lv, bad)


def test_prolong_constant():
    lv = GridLevel(2)
    g = GridFunction(lv, np.full(lv.shape, 3.25))
    fine = prolong(g)
    assert fine.level.level == 3
    assert np.array_equal(fine.values, np.full(fine.level.shape, 3.25))


def test_prolong_unit_cell_corners():
    # 2x2 corner values -> 3x3: center is the 4-point average, edge midpoints
    # the 2-point averages
    coarse = np.array([[0.0, 2.0], [2.0, 4.0]])  # [i, j] at (i, j)
    fine = prolong_values(coarse)
    assert fine[1, 1] == 2.0
    assert fine[1, 0] == 1.0  # between (0,0)=0 and (1,0)=2
    assert fine[0, 1] == 1.0
    assert fine[2, 1] == 3.0
    assert fine[1, 2] == 3.0


def test_prolong_reproduces_bilinear():
    # oracle: evaluate the bilinear polynomial analytically at the fine nodes
    a, b, c, d = 0.7, -1.3, 2.1, 0.4

    def p(x, y):
        return a + b * x + c * y + d * x * y

    coarse = GridFunction.from_callable(GridLevel(3), p)
    fine = prolong(coarse)
    exact = GridFunction.from_callable(GridLevel(4), p)
    assert np.max(np.abs(fine.values - exact.values)) < 1e-14


def test_prolong_linearity():
    rng = np.random.default_rng(7)
    lv = GridLevel(3)
    U = GridFunction(lv, rng.standard_normal(lv.shape))
    V = GridFunction(lv, rng.standard_normal(lv.shape))
    a, b = -0.3, 1.7
    lhs = prolong(GridFunction(lv, a * U.values + b * V.values)).values
    rhs = a * prolong(U).values + b * prolong(V).values
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_restrict_inject_inverts_prolong():
    rng = np.random.default_rng(11)
    lv = GridLevel(4)
    V = GridFunction(lv, rng.standard_normal(lv.shape))
    back = restrict_inject(prolong(V))
    assert np.array_equal(back.values, V.values)


def test_restrict_inject_index_map():
    lv = GridLevel(3)
    vals = np.add.outer(2.0 * np.arange(lv.M + 1), 2.0 * np.arange(lv.M + 1))
    coarse = restrict_inject(GridFunction(lv, vals))
    expect = np.add.outer(4.0 * np.arange(coarse.level.M + 1),
                          4.0 * np.arange(coarse.level.M + 1))
    assert np.array_equal(coarse.values, expect)


def test_boundary_partition():
    lv = GridLevel(3)
    seen = set()
    for e in EDGES:
        for node in boundary_nodes(lv, e):
            assert node not in seen
            seen.add(node)
    M = lv.M
    expect = {(i, j) for i in range(M + 1) for j in range(M + 1)
              if i in (0, M) or j in (0, M)}
    assert seen == expect


def test_boundary_trace_constant():
    lv = GridLevel(1)
    g = GridFunction(lv, np.full(lv.shape, 5.0))
    entries = boundary_trace(g, EDGES)
    assert len(entries) == 8
    assert all(v == 5.0 for _, v in entries)


def test_boundary_trace_right_edge():
    lv = GridLevel(1)
    g = GridFunction.from_callable(lv, lambda x, y: x)
    entries = boundary_trace(g, ["right"])
    # corners belong to bottom/top, so only (M, 1)
    assert [n for n, _ in entries] == [(2, 1)]
    assert all(v == 1.0 for _, v in entries)


def test_boundary_trace_left_order():
    lv = GridLevel(2)
    g = GridFunction.from_callable(lv, lambda x, y: 10 * x + y)
    entries = boundary_trace(g, ["left"])
    assert [n for n, _ in entries] == [(0, j) for j in range(1, 4)]
    assert [v for _, v in entries] == [0.25, 0.5, 0.75]
    with pytest.raises(ValueError):
        boundary_trace(g, [])


def test_csv_roundtrip(tmp_path):
    lv = GridLevel(2)
    g = GridFunction.from_callable(lv, lambda x, y: np.pi * x + y / 3.0)
    path = tmp_path / "field.csv"
    write_csv(g, path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "i,j,x,y,value"
    assert len(rows) == 1 + (lv.M + 1) ** 2
    i, j, x, y, v = rows[1 + 7].split(",")  # node (1, 2): row-major
    assert (int(i), int(j)) == (1, 2)
    assert float(v) == g.values[1, 2]  # 17 significant digits round-trip
