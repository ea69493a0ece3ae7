import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from replica_lifetime import (
    build_blocks, expected_absorption_vector, mean_lifetime_qbd, rg_factorize, validate_params)
from replica_lifetime.errors import NoConvergence, TruncationTooSmall
from replica_lifetime.montecarlo import jump_rates
from replica_lifetime.qbd import absorption_moments, default_initial, moments_at_level

from conftest import params


def enumerate_generator(p, L):
    """Transient generator built state by state from the physical description."""
    states = [(k, j) for k in range(1, L + 1) for j in range(1, min(k, p.d) + 1)]
    index = {s: i for i, s in enumerate(states)}
    t = np.zeros((len(states), len(states)))
    exit_ = np.zeros(len(states))
    for (k, j), i in index.items():
        moves = {(k - 1, j - 1): j * p.lam, (k - 1, j): (k - j) * p.lam}
        if j < min(k, p.d):
            moves[(k, j + 1)] = j * p.mu
        if k < L:
            moves[(k + 1, j)] = p.beta
        for (k2, j2), rate in moves.items():
            if rate == 0:
                continue
            if j2 == 0:
                exit_[i] += rate
            else:
                t[i, index[(k2, j2)]] += rate
        t[i, i] = -(t[i].sum() + exit_[i])
    return t, exit_, states


def test_level_one_blocks():
    b = build_blocks(params(d=2), 5)
    np.testing.assert_array_equal(b.local[0], [[-5.0]])
    np.testing.assert_array_equal(b.up[0], [[4.0, 0.0]])
    assert b.down[0] is None
    np.testing.assert_array_equal(b.exit[0], [1.0])


def test_level_three_local_block():
    b = build_blocks(params(d=2), 5)
    np.testing.assert_array_equal(b.local[2], [[-8.0, 1.0], [0.0, -7.0]])


def test_block_shapes_and_cap_up_block():
    p = params(d=3)
    b = build_blocks(p, 8)
    for k in range(1, 9):
        m = min(k, 3)
        assert b.local[k - 1].shape == (m, m)
        if k > 1:
            assert b.down[k - 1].shape == (m, min(k - 1, 3))
        if k < 8:
            assert b.up[k - 1].shape == (m, min(k + 1, 3))
    # at and above the cap arrivals keep the copy count: beta * I
    for k in range(3, 8):
        np.testing.assert_array_equal(b.up[k - 1], 4.0 * np.eye(3))
    np.testing.assert_array_equal(b.up[1], [[4.0, 0, 0], [0, 4.0, 0]])


def test_down_block_matches_display():
    # 2 <= k <= d: row j has j*lam at column j-1 and (k-j)*lam at column j
    b = build_blocks(params(d=4), 6)
    np.testing.assert_array_equal(b.down[3], [[3, 0, 0], [2, 2, 0], [0, 3, 1], [0, 0, 4]])
    # l >= d+1
    np.testing.assert_array_equal(b.down[5], [[5, 0, 0, 0], [2, 4, 0, 0], [0, 3, 3, 0], [0, 0, 4, 2]])


def test_truncation_too_small():
    with pytest.raises(TruncationTooSmall):
        build_blocks(params(d=3), 3)


@pytest.mark.parametrize("d, L", [(1, 4), (2, 7), (3, 10), (5, 12)])
def test_blocks_match_enumeration(d, L):
    p = params(d=d)
    b = build_blocks(p, L)
    t, exit_, _ = enumerate_generator(p, L)
    np.testing.assert_array_equal(b.dense(), t)
    np.testing.assert_array_equal(b.dense_exit(), exit_)


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(0.1, 5), beta=st.floats(0, 10), mu=st.floats(0, 5), d=st.integers(1, 6),
       extra=st.integers(1, 10))
def test_conservation_and_signs(lam, beta, mu, d, extra):
    b = build_blocks(validate_params(lam, beta, mu, d), d + extra)
    t = b.dense()
    np.testing.assert_allclose(t.sum(axis=1) + b.dense_exit(), 0.0, atol=1e-12)
    off = t - np.diag(np.diag(t))
    assert np.all(off >= 0)
    for k, e in enumerate(b.exit, start=1):
        assert e[0] == pytest.approx(lam) and np.all(e[1:] == 0)


def test_first_rg_step():
    p = params(d=2)
    b = build_blocks(p, 6)
    f = rg_factorize(b)
    np.testing.assert_array_equal(f.u[0], [[-5.0]])
    np.testing.assert_allclose(f.r[1], b.down[1] / 5.0, rtol=1e-15)
    np.testing.assert_allclose(f.g[0], b.up[0] / 5.0, rtol=1e-15)


def test_scalar_recursion_without_replication():
    p = params(mu=0.0, d=1)
    L = 15
    f = rg_factorize(build_blocks(p, L))
    u = -(p.lam + p.beta)
    assert f.u[0][0, 0] == pytest.approx(u)
    for k in range(1, L):
        top = k + 1 == L
        a_local = -((k + 1) * p.lam + (0 if top else p.beta))
        u_next = a_local + (k * p.lam) * p.beta / (-u)
        assert f.u[k].shape == (1, 1)
        assert f.u[k][0, 0] == pytest.approx(u_next, rel=1e-14)
        assert f.r[k][0, 0] == pytest.approx(k * p.lam / (-u), rel=1e-14) and f.r[k][0, 0] >= 0
        assert f.g[k - 1][0, 0] == pytest.approx(p.beta / (-u), rel=1e-14)
        u = u_next


@pytest.mark.parametrize("d, L", [(1, 10), (3, 40), (6, 120), (10, 200)])
def test_factorization_reassembles(d, L):
    b = build_blocks(params(d=d), L)
    f = rg_factorize(b)
    assert np.max(np.abs(f.reassemble(b.offsets) - b.dense())) <= 1e-10
    for u in f.u:
        assert np.all(np.diag(u) < 0)
    assert all(np.all(r >= 0) for r in f.r[1:])
    assert all(np.all(g >= 0) for g in f.g)


@pytest.mark.parametrize("d, beta, L", [(1, 4, 10), (2, 4, 30), (3, 4, 30), (3, 1, 20), (2, 0.5, 5)])
def test_absorption_vector_matches_dense_solve(d, beta, L):
    p = params(beta=beta, d=d)
    b = build_blocks(p, L)
    x = expected_absorption_vector(b, rg_factorize(b)).flat()
    t, _, _ = enumerate_generator(p, L)
    dense = np.linalg.solve(t, -np.ones(len(t)))
    np.testing.assert_allclose(x, dense, rtol=1e-9)


@pytest.mark.parametrize("lam, beta, mu, L", [(1, 4, 1, 5), (2, 0, 3, 9), (0.5, 7, 1, 30)])
def test_single_copy_cap_is_exponential(lam, beta, mu, L):
    p = validate_params(lam, beta, mu, 1)
    x = expected_absorption_vector(build_blocks(p, L))
    np.testing.assert_allclose(x.flat(), 1 / lam, rtol=1e-9)


def test_more_copies_live_longer():
    x = expected_absorption_vector(build_blocks(params(d=2), 40))
    assert x[(2, 2)] > x[(2, 1)] > 1.0
    assert np.all(x.flat() > 0)


def test_second_moment_vector_matches_dense():
    p = params(d=3)
    b = build_blocks(p, 20)
    x1, x2 = absorption_moments(b, rg_factorize(b), 2)
    t, _, _ = enumerate_generator(p, 20)
    tinv = np.linalg.inv(t)
    e = np.ones(len(t))
    np.testing.assert_allclose(x1.flat(), -tinv @ e, rtol=1e-9)
    np.testing.assert_allclose(x2.flat(), 2 * tinv @ tinv @ e, rtol=1e-9)


def test_mean_d1_exact():
    r = mean_lifetime_qbd(params(d=1), {(1, 1): 1.0})
    assert r.mean == pytest.approx(1.0, abs=1e-9)
    assert r.method == "qbd" and r.std_error == 0.0


def test_default_initial_law():
    p = params(d=3)
    a = default_initial(p, 30)
    theta = np.exp(-4.0) * 4.0 ** np.arange(31) / np.cumprod(np.r_[1, np.arange(1, 31)])
    assert a[(4, 1)] == pytest.approx(theta[4] / (1 - theta[0]), rel=1e-13)
    assert a[(4, 2)] == 0.0
    assert sum(v.sum() for v in a.levels) == pytest.approx(1.0, abs=1e-14)


def test_mapping_initial_lumps_high_levels():
    p = params(d=2)
    assert moments_at_level(p, 5, {(9, 2): 1.0}, 1)[0] == pytest.approx(
        moments_at_level(p, 5, {(5, 2): 1.0}, 1)[0])
    with pytest.raises(ValueError):
        moments_at_level(p, 5, {(1, 2): 1.0}, 1)


def test_truncation_monotone_and_reported_level_converged():
    p = params(d=5)
    r = mean_lifetime_qbd(p, tol=1e-8)
    means = [m for _, m in r.meta["levels"]]
    assert all(b >= a for a, b in zip(means, means[1:]))
    L = r.meta["L_max"]
    again = moments_at_level(p, 2 * L, None, 1)[0]
    assert abs(again - r.mean) <= 1e-8 * r.mean
    assert [moments_at_level(p, L, None, 1)[0] for L in (6, 7, 8, 10, 14)] == sorted(
        moments_at_level(p, L, None, 1)[0] for L in (6, 7, 8, 10, 14))


def test_no_convergence_when_cap_is_tight():
    with pytest.raises(NoConvergence):
        mean_lifetime_qbd(params(d=5), tol=1e-8, L_start=6, level_cap=8)


@pytest.mark.parametrize("d", range(1, 6))
def test_moment_ordering(d):
    r = mean_lifetime_qbd(params(d=d), k_max=3)
    m1, m2, m3 = r.moments
    assert m2 >= m1 ** 2 and m3 >= m1 * m2


@pytest.mark.parametrize("d", range(1, 6))
def test_close_to_approximation(d):
    from replica_lifetime import mean_lifetime_approx

    a = mean_lifetime_approx(params(d=d)).mean
    q = mean_lifetime_qbd(params(d=d)).mean
    assert abs(a - q) / q < 0.25


@pytest.mark.parametrize("d", [1, 2, 3, 6])
def test_simulator_rates_match_blocks(d):
    p = validate_params(1.3, 2.7, 0.9, d)
    L = 11
    t, exit_, states = enumerate_generator(p, L)
    b = build_blocks(p, L)
    dense, dense_exit = b.dense(), b.dense_exit()
    index = {s: i for i, s in enumerate(states)}
    for (k, j), i in index.items():
        if k > 10:
            continue
        row = np.zeros(len(states))
        out = 0.0
        for rate, dk, dj in jump_rates(p, k, j):
            if j + dj == 0:
                out += rate
            else:
                row[index[(k + dk, j + dj)]] += rate
        expected = dense[i].copy()
        expected[i] = 0.0
        assert np.array_equal(row, expected), (k, j)
        assert out == dense_exit[i]
