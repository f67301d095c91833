"""Cubical complex unit tests: counting oracles, boundary identities, Stokes."""

import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp

from curlift.cubical import (
    Chain,
    Cochain,
    CubicalComplex,
    ElementaryCube,
    dirichlet_datum,
    pairing,
)


def brute_force_cubes(mask):
    """Enumerate all elementary cubes of the cubical set by definition:
    products of elementary intervals contained in the union of the cells."""
    mask = np.asarray(mask, dtype=bool)
    d = mask.ndim
    cells = mask.shape
    padded = np.zeros(tuple(c + 2 for c in cells), dtype=bool)
    padded[tuple(slice(1, 1 + c) for c in cells)] = mask

    def contained(base, axes):
        # the cube [base, base + chi_axes] is in Q iff some full cell contains it
        deg = [i for i in range(d) if i not in axes]
        for shifts in itertools.product((0, 1), repeat=len(deg)):
            cell = list(base)
            ok = True
            for i, s in zip(deg, shifts):
                cell[i] = base[i] - s
            for i in range(d):
                if not (0 <= cell[i] + 1 < padded.shape[i]):
                    ok = False
            if ok and padded[tuple(c + 1 for c in cell)]:
                return True
        return False

    out = {k: set() for k in range(d + 1)}
    for k in range(d + 1):
        for axes in itertools.combinations(range(d), k):
            ranges = [
                range(cells[i]) if i in axes else range(cells[i] + 1)
                for i in range(d)
            ]
            for base in itertools.product(*ranges):
                if contained(base, axes):
                    out[k].add((base, axes))
    return out


@pytest.mark.parametrize("shape", [(3,), (2, 3), (2, 2, 2)])
def test_full_box_counts(shape):
    cx = CubicalComplex(np.ones(shape, dtype=bool))
    d = len(shape)
    for k in range(d + 1):
        want = 0
        for axes in itertools.combinations(range(d), k):
            cnt = 1
            for i in range(d):
                cnt *= shape[i] if i in axes else shape[i] + 1
            want += cnt
        assert cx.num_cubes(k) == want


def test_registry_matches_brute_force_on_L_shape():
    mask = np.ones((3, 3), dtype=bool)
    mask[2, 2] = False
    mask[0, 2] = False
    cx = CubicalComplex(mask)
    oracle = brute_force_cubes(mask)
    for k in range(3):
        got = {
            (tuple(c.base), tuple(c.axes)) for c in cx.enumerate_cubes(k)
        }
        assert got == oracle[k]


def test_registry_matches_brute_force_3d():
    rng = np.random.default_rng(0)
    mask = rng.random((3, 2, 3)) < 0.6
    if not mask.any():
        mask[0, 0, 0] = True
    cx = CubicalComplex(mask)
    oracle = brute_force_cubes(mask)
    for k in range(4):
        got = {(tuple(c.base), tuple(c.axes)) for c in cx.enumerate_cubes(k)}
        assert got == oracle[k]


def test_registry_order_and_ids():
    cx = CubicalComplex(np.ones((2, 2), dtype=bool))
    cubes = cx.enumerate_cubes(1)
    keys = [(c.base, c.axes) for c in cubes]
    assert keys == sorted(keys)
    for i, c in enumerate(cubes):
        assert cx.id_of(1, c.base, c.axes) == i
    assert cx.contains(1, (0, 0), (0,))
    assert not cx.contains(1, (5, 0), (0,))
    with pytest.raises(KeyError):
        cx.id_of(1, (5, 0), (0,))


def test_single_interval_boundary():
    cx = CubicalComplex(np.ones((3,), dtype=bool))
    T = Chain.zero(cx, 1)
    T.coeffs[cx.id_of(1, (1,), (0,))] = 1.0
    bd = T.boundary()
    assert bd.coeffs[cx.id_of(0, (2,), ())] == 1.0
    assert bd.coeffs[cx.id_of(0, (1,), ())] == -1.0
    assert np.sum(np.abs(bd.coeffs)) == 2.0


def test_square_boundary_signs():
    # d[a, a+e1+e2] = [faces along axis 0 with +/-] - [faces along axis 1]
    cx = CubicalComplex(np.ones((1, 1), dtype=bool))
    B = cx.boundary_matrix(2)
    col = B[:, 0].toarray().ravel()
    expect = np.zeros(cx.num_cubes(1))
    expect[cx.id_of(1, (1, 0), (1,))] = 1.0   # x-upper edge, +
    expect[cx.id_of(1, (0, 0), (1,))] = -1.0  # x-lower edge, -
    expect[cx.id_of(1, (0, 1), (0,))] = -1.0  # y-upper edge, -
    expect[cx.id_of(1, (0, 0), (0,))] = 1.0   # y-lower edge, +
    assert np.allclose(col, expect)


@pytest.mark.parametrize("shape", [(4, 3), (2, 3, 2)])
def test_boundary_squared_zero(shape):
    rng = np.random.default_rng(1)
    mask = rng.random(shape) < 0.7
    mask.flat[0] = True
    cx = CubicalComplex(mask, spacing=rng.random(len(shape)) + 0.5)
    d = len(shape)
    for k in range(2, d + 1):
        BB = cx.boundary_matrix(k - 1) @ cx.boundary_matrix(k)
        assert BB.nnz == 0 or abs(BB).max() == 0.0


def test_volumes():
    cx = CubicalComplex(np.ones((2, 3), dtype=bool), spacing=(0.5, 2.0))
    assert np.allclose(cx.volumes(0), 1.0)
    v1 = cx.volumes(1)
    ax = cx.cube_axes(1).ravel()
    assert np.allclose(v1[ax == 0], 0.5)
    assert np.allclose(v1[ax == 1], 2.0)
    assert np.allclose(cx.volumes(2), 1.0)


def test_pairing_weighted():
    cx = CubicalComplex(np.ones((2, 2), dtype=bool), spacing=(0.5, 3.0))
    T = Chain.zero(cx, 2)
    w = Cochain.zero(cx, 2)
    T.coeffs[:] = 2.0
    w.coeffs[:] = 1.5
    assert math.isclose(pairing(T, w), 4 * 2.0 * 1.5 * 1.5)
    with pytest.raises(ValueError):
        pairing(T, Cochain.zero(cx, 1))


def test_discrete_stokes():
    # <dT, omega> = <T, delta omega> for every chain/cochain pair
    rng = np.random.default_rng(2)
    mask = rng.random((3, 4)) < 0.7
    mask[0, 0] = True
    cx = CubicalComplex(mask, spacing=(0.7, 1.3))
    for k in range(1, 3):
        T = Chain(cx, k, rng.standard_normal(cx.num_cubes(k)))
        w = Cochain(cx, k - 1, rng.standard_normal(cx.num_cubes(k - 1)))
        dw = Cochain(cx, k, cx.coboundary_matrix(k) @ w.coeffs)
        lhs = pairing(T.boundary(), w)
        rhs = pairing(T, dw)
        assert math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-12)


def test_pushforward_first_block():
    mask = np.ones((2, 3), dtype=bool)
    cx = CubicalComplex(mask)
    P, pmask = cx.pushforward_matrix(1, "first")
    assert pmask.shape == (2,)
    assert P.shape == (2, cx.num_cubes(1))
    # only horizontal (axis-0) edges survive, mapped by their x-base
    for c in cx.enumerate_cubes(1):
        col = P[:, cx.id_of(1, c.base, c.axes)].toarray().ravel()
        if c.axes == (0,):
            assert col[c.base[0]] == 1.0 and col.sum() == 1.0
        else:
            assert col.sum() == 0.0


def test_pushforward_last_block():
    mask = np.ones((2, 3), dtype=bool)
    cx = CubicalComplex(mask)
    P, pmask = cx.pushforward_matrix(1, "last")
    assert pmask.shape == (3,)
    for c in cx.enumerate_cubes(1):
        col = P[:, cx.id_of(1, c.base, c.axes)].toarray().ravel()
        if c.axes == (1,):
            assert col[c.base[1]] == 1.0 and col.sum() == 1.0
        else:
            assert col.sum() == 0.0


def test_pushforward_commutes_with_projection_of_chain():
    # pushing a product chain forward recovers the factor chain
    cx = CubicalComplex(np.ones((3, 2), dtype=bool))
    P, _ = cx.pushforward_matrix(1, "first")
    T = Chain.zero(cx, 1)
    # vertical stack of horizontal edges over x-cell 1, all weight 1/3
    for y in range(3):
        T.coeffs[cx.id_of(1, (1, y), (0,))] = 1.0 / 3.0
    out = P @ T.coeffs
    assert np.allclose(out, [0.0, 1.0, 0.0])


def test_dirichlet_datum_vertices_and_errors():
    cx = CubicalComplex(np.ones((2, 2), dtype=bool))
    dat = dirichlet_datum(cx, 0, [((0, 0), -1.0), ((2, 2), 1.0)])
    assert dat.coeffs[cx.id_of(0, (0, 0), ())] == -1.0
    assert dat.coeffs[cx.id_of(0, (2, 2), ())] == 1.0
    assert np.sum(np.abs(dat.coeffs)) == 2.0
    with pytest.raises(ValueError):
        dirichlet_datum(cx, 0, [((5, 5), 1.0)])
    with pytest.raises(ValueError):
        dirichlet_datum(cx, 1, [(((0, 0), ()), 1.0)])


def test_dirichlet_datum_edges():
    cx = CubicalComplex(np.ones((2, 2), dtype=bool))
    dat = dirichlet_datum(cx, 1, [(((0, 0), (0,)), 1.0), (((1, 0), (0,)), 1.0)])
    assert pairing(dat, Cochain(cx, 1, np.ones(cx.num_cubes(1)))) == 2.0


def test_masked_out_region_has_no_cubes():
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, 0] = True
    cx = CubicalComplex(mask)
    assert cx.num_cubes(2) == 1
    assert cx.num_cubes(1) == 4
    assert cx.num_cubes(0) == 4
    assert not cx.contains(0, (3, 3), ())


def test_invalid_inputs():
    with pytest.raises(ValueError):
        CubicalComplex(np.zeros((2, 2), dtype=bool))
    with pytest.raises(ValueError):
        CubicalComplex(np.ones((2, 2), dtype=bool), spacing=(1.0,))
    with pytest.raises(ValueError):
        CubicalComplex(np.ones((2, 2), dtype=bool), spacing=(1.0, -1.0))
    cx = CubicalComplex(np.ones((2, 2), dtype=bool))
    with pytest.raises(ValueError):
        cx.boundary_matrix(0)
    with pytest.raises(ValueError):
        cx.num_cubes(5)
