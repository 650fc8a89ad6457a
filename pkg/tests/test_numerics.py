import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csigait.errors import InvalidInput
from csigait.numerics import SeededRng, joint_diagonalize, off_energy, round_robin_pairs, seeded_rng, svd, sym_eig

from .conftest import random_symmetric


def companion_roots(a):
    """Eigenvalues as roots of the characteristic polynomial (Faddeev-LeVerrier + companion matrix)."""
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    comp = np.zeros((n, n))
    comp[0, :] = -np.array(coeffs[1:])
    comp[1:, :-1] = np.eye(n - 1)
    return np.sort(np.real(np.linalg.eigvals(comp)))[::-1]


def test_identity_eigenvalues():
    e = sym_eig(np.eye(3))
    assert np.allclose(e.eigenvalues, 1.0)
    assert np.allclose(e.eigenvectors.T @ e.eigenvectors, np.eye(3), atol=1e-12)


def test_diagonal_case():
    e = sym_eig(np.diag([1.0, 4.0]))
    assert np.allclose(e.eigenvalues, [4.0, 1.0])
    assert np.allclose(np.abs(e.eigenvectors), [[0, 1], [1, 0]])


def test_eigenvalues_match_characteristic_polynomial(rng):
    for _ in range(5):
        a = random_symmetric(rng, 6)
        assert np.allclose(sym_eig(a).eigenvalues, companion_roots(a), atol=1e-6)


def test_sym_eig_rejects_bad_input():
    with pytest.raises(InvalidInput):
        sym_eig(np.ones((2, 3)))
    with pytest.raises(InvalidInput):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidInput):
        sym_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_sign_convention(rng):
    e = sym_eig(random_symmetric(rng, 7))
    v = e.eigenvectors
    idx = np.argmax(np.abs(v), axis=0)
    assert np.all(v[idx, np.arange(7)] > 0)


@pytest.mark.parametrize("n", [2, 5, 8])
def test_trace_and_determinant(rng, n):
    a = random_symmetric(rng, n)
    lam = sym_eig(a).eigenvalues
    assert np.isclose(lam.sum(), np.trace(a), rtol=1e-8, atol=1e-12)
    assert np.isclose(np.prod(lam), np.linalg.det(a), rtol=1e-6)


def test_svd_simple_cases():
    _, s, _ = svd(np.diag([3.0, 2.0]))
    assert np.allclose(s, [3.0, 2.0])
    u = np.array([1.0, 2.0, 2.0])
    v = np.array([3.0, 4.0])
    _, s, _ = svd(np.outer(u, v))
    assert np.allclose(s, [15.0, 0.0], atol=1e-12)


def test_svd_against_eig_of_gram(rng):
    a = rng.normal(size=(5, 3))
    _, s, _ = svd(a)
    assert np.allclose(s ** 2, sym_eig(a.T @ a).eigenvalues, atol=1e-8)


def test_svd_matches_eig_on_psd(rng):
    b = rng.normal(size=(6, 6))
    a = b @ b.T
    assert np.allclose(svd(a)[1], sym_eig(a).eigenvalues, atol=1e-8 * np.abs(a).max())


@pytest.mark.parametrize("shape", [(7, 3), (3, 7), (52, 52), (200, 10)])
def test_svd_reconstruction_and_orthonormality(rng, shape):
    a = rng.normal(size=shape)
    u, s, v = svd(a)
    assert np.linalg.norm(a - u @ np.diag(s) @ v.T) <= 1e-10 * np.linalg.norm(a)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert np.allclose(u.T @ u, np.eye(u.shape[1]), atol=1e-10)
    assert np.allclose(v.T @ v, np.eye(v.shape[1]), atol=1e-10)


def test_svd_rejects_nan():
    with pytest.raises(InvalidInput):
        svd(np.array([[1.0, np.nan]]))


def test_round_robin_covers_every_pair_once():
    for n in (2, 5, 8):
        pairs = set()
        for rnd in round_robin_pairs(n):
            ps, qs = rnd
            assert len(set(ps) | set(qs)) == 2 * len(ps)  # disjoint within a round
            for p, q in zip(ps, qs):
                key = (min(p, q), max(p, q))
                assert key not in pairs
                pairs.add(key)
        assert len(pairs) == n * (n - 1) // 2


def random_rotation(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def test_joint_diag_recovers_known_rotation(rng):
    q = random_rotation(rng, 4)
    mats = [q @ np.diag(rng.normal(size=4)) @ q.T for _ in range(2)]
    w = joint_diagonalize(mats)
    assert np.allclose(w @ w.T, np.eye(4), atol=1e-8)
    assert off_energy([w @ m @ w.T for m in mats]) < 1e-8
    p = np.abs(w @ q)
    assert np.allclose(np.sort(p, axis=1)[:, -1], 1.0, atol=1e-6)


def test_joint_diag_fixed_point_on_diagonal_input():
    mats = [np.diag([1.0, 2.0, 3.0]), np.diag([3.0, 1.0, 2.0])]
    w = joint_diagonalize(mats)
    assert np.allclose(np.abs(w), np.eye(3))


def test_joint_diag_single_matrix_matches_eig(rng):
    a = random_symmetric(rng, 5)
    w = joint_diagonalize([a])
    assert off_energy([w @ a @ w.T]) < 1e-10
    assert np.allclose(np.sort(np.diag(w @ a @ w.T)), np.sort(sym_eig(a).eigenvalues), atol=1e-10)


def test_joint_diag_dimension_mismatch():
    with pytest.raises(InvalidInput):
        joint_diagonalize([np.eye(2), np.eye(3)])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 4))
def test_joint_diag_never_worse_and_monotone(seed, n, k):
    rng = np.random.default_rng(seed)
    mats = [random_symmetric(rng, n) for _ in range(k)]
    w, info = joint_diagonalize(mats, return_info=True)
    assert np.all(np.diff(info.trace) <= 1e-12 * max(info.trace[0], 1.0))
    assert off_energy([w @ m @ w.T for m in mats]) <= off_energy(mats) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12))
def test_sym_eig_properties(seed, n):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, n)
    e = sym_eig(a)
    v, lam = e.eigenvectors, e.eigenvalues
    assert np.all(np.diff(lam) <= 0)
    assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-8
    assert np.linalg.norm(a @ v - v * lam) <= 1e-6 * max(np.linalg.norm(a), 1e-300)


def test_rng_determinism_and_moments():
    a = seeded_rng(0).uniform(size=100)
    b = seeded_rng(0).uniform(size=100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, seeded_rng(1).uniform(size=100))
    g = SeededRng(7).normal(size=100_000)
    assert abs(g.mean()) < 0.02 and abs(g.var() - 1) < 0.05


def test_rng_spawn_is_stable_and_distinct():
    r = SeededRng(3)
    assert np.array_equal(r.spawn(1, 2).uniform(size=5), SeededRng(3).spawn(1, 2).uniform(size=5))
    assert not np.array_equal(r.spawn(1, 2).uniform(size=5), r.spawn(2, 1).uniform(size=5))
