"""Dense linear-algebra kernels built on Jacobi rotations.

All solvers use the parallel (round-robin) cyclic ordering: within one round
the index pairs are disjoint, so their rotations commute and can be applied
together as a single orthogonal matrix. This gives the same iterates as some
sequential cyclic ordering while keeping the inner loop in numpy.

Vectors returned by :func:`sym_eig` and :func:`svd` are sign-normalised so the
largest-magnitude entry of every eigenvector / left singular vector is
positive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

__all__ = [
    "EigenDecomposition",
    "JointDiagInfo",
    "SeededRng",
    "joint_diagonalize",
    "off_energy",
    "round_robin_pairs",
    "seeded_rng",
    "svd",
    "sym_eig",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal
    sweeps: int = 0


def _as_matrix(a, name="a") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return a


def round_robin_pairs(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule covering every pair ``p < q`` of ``range(n)`` once.

    Returns one ``(P, Q)`` index-array pair per round; pairs within a round
    are disjoint.
    """
    if n < 2:
        return []
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < 0 or b < 0:
                continue
            ps.append(min(a, b))
            qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so their largest-magnitude entry is positive."""
    if vectors.size == 0:
        return np.ones(vectors.shape[1])
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def sym_eig(a, max_sweeps: int = 60) -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Symmetric matrix (asymmetry above 1e-9 absolute is rejected).
    max_sweeps : int
        Upper bound on full sweeps over all index pairs.

    Returns
    -------
    EigenDecomposition
        Eigenvalues in descending order with matching orthonormal columns.
    """
    a = _as_matrix(a)
    n, m = a.shape
    if n != m:
        raise InvalidInput(f"matrix must be square, got {a.shape}")
    if n and np.max(np.abs(a - a.T)) > 1e-9:
        raise InvalidInput("matrix is not symmetric within 1e-9")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    rounds = round_robin_pairs(n)
    scale = np.linalg.norm(a)
    sweeps = 0
    if scale > 0:
        for sweeps in range(1, max_sweeps + 1):
            rotated = False
            for P, Q in rounds:
                apq = a[P, Q]
                # relative (Demmel-Veselic) test, floored at round-off level
                active = np.abs(apq) > np.maximum(_EPS * np.sqrt(np.abs(a[P, P] * a[Q, Q])), _EPS * scale)
                if not np.any(active):
                    continue
                rotated = True
                P, Q, apq = P[active], Q[active], apq[active]
                theta = (a[Q, Q] - a[P, P]) / (2.0 * apq)
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t[theta == 0] = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[P, P] = c
                J[Q, Q] = c
                J[P, Q] = s
                J[Q, P] = -s
                a = J.T @ a @ J
                v = v @ J
            if not rotated:
                sweeps -= 1
                break
    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    lam, v = lam[order], v[:, order]
    v = v * _fix_signs(v)
    return EigenDecomposition(lam, v, sweeps)


def _jacobi_svd_square(a: np.ndarray, max_sweeps: int):
    """One-sided (Hestenes) Jacobi on the columns of ``a`` (m >= n)."""
    u = a.copy()
    n = u.shape[1]
    v = np.eye(n)
    rounds = round_robin_pairs(n)
    for _ in range(max_sweeps):
        rotated = False
        for P, Q in rounds:
            up, uq = u[:, P], u[:, Q]
            alpha = np.einsum("ij,ij->j", up, up)
            beta = np.einsum("ij,ij->j", uq, uq)
            gamma = np.einsum("ij,ij->j", up, uq)
            active = np.abs(gamma) > 1e-15 * np.sqrt(alpha * beta)
            active &= gamma != 0
            if not np.any(active):
                continue
            rotated = True
            P, Q = P[active], Q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            up, uq = u[:, P], u[:, Q]
            u[:, P] = c * up - s * uq
            u[:, Q] = s * up + c * uq
            vp, vq = v[:, P], v[:, Q]
            v[:, P] = c * vp - s * vq
            v[:, Q] = s * vp + c * vq
        if not rotated:
            break
    sv = np.linalg.norm(u, axis=0)
    return u, sv, v


def _complete_basis(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace columns not in ``keep`` by an orthonormal completion."""
    m, k = u.shape
    basis = [u[:, j] for j in range(k) if keep[j]]
    out = u.copy()
    e = 0
    for j in range(k):
        if keep[j]:
            continue
        while e < m:
            cand = np.zeros(m)
            cand[e] = 1.0
            e += 1
            for b in basis:
                cand -= (b @ cand) * b
            for b in basis:
                cand -= (b @ cand) * b
            nrm = np.linalg.norm(cand)
            if nrm > 0.5:
                cand /= nrm
                basis.append(cand)
                out[:, j] = cand
                break
    return out


def svd(a, max_sweeps: int = 60):
    """Thin singular value decomposition ``a = U diag(s) V^T``.

    Tall inputs are first reduced with a Householder QR and the triangular
    factor is diagonalised by one-sided Jacobi; wide inputs are transposed.

    Returns
    -------
    U : ndarray, shape (m, k)
    s : ndarray, shape (k,), descending, nonnegative
    V : ndarray, shape (n, k)
        with ``k = min(m, n)``.
    """
    a = _as_matrix(a)
    m, n = a.shape
    if m < n:
        V, s, U = svd(a.T, max_sweeps)
        signs = _fix_signs(U)
        return U * signs, s, V * signs
    if n == 0:
        return np.zeros((m, 0)), np.zeros(0), np.zeros((0, 0))
    if m > n:
        q, r = np.linalg.qr(a, mode="reduced")
    else:
        q, r = None, a
    ur, s, v = _jacobi_svd_square(r, max_sweeps)
    order = np.argsort(-s, kind="stable")
    ur, s, v = ur[:, order], s[order], v[:, order]
    nonzero = s > s[0] * n * _EPS * 10
    ur = np.where(nonzero, ur / np.where(nonzero, s, 1.0), 0.0)
    if not np.all(nonzero):
        ur = _complete_basis(ur, nonzero)
        s = np.where(nonzero, s, 0.0)
    U = ur if q is None else q @ ur
    signs = _fix_signs(U)
    return U * signs, s, v * signs


def off_energy(mats) -> float:
    """Sum over matrices of squared off-diagonal entries."""
    total = 0.0
    for mat in mats:
        mat = np.asarray(mat, dtype=float)
        total += float(np.sum(mat * mat) - np.sum(np.diag(mat) ** 2))
    return total


@dataclass(frozen=True)
class JointDiagInfo:
    trace: list  # off-diagonal energy before the first sweep and after each sweep
    sweeps: int
    converged: bool


def joint_diagonalize(mats, max_sweeps: int = 100, tol: float = 1e-8, return_info: bool = False):
    """Orthogonal approximate joint diagonaliser of symmetric matrices.

    Each 2x2 sub-problem takes the closed-form Jacobi angle that minimises
    the summed off-diagonal energy over all matrices (Cardoso & Souloumiac),
    so every rotation is non-increasing in that energy.

    Returns ``W`` (orthogonal) such that ``W @ M @ W.T`` is as diagonal as
    possible for every ``M``. With ``return_info`` also returns a
    :class:`JointDiagInfo`. Stops once every angle of a sweep is below
    ``tol`` radians or after ``max_sweeps``.
    """
    mats = [_as_matrix(m, "mats[i]") for m in mats]
    if not mats:
        raise InvalidInput("need at least one matrix")
    n = mats[0].shape[0]
    for mat in mats:
        if mat.shape != (n, n):
            raise InvalidInput("all matrices must share one square shape")
    M = np.stack([0.5 * (mat + mat.T) for mat in mats])
    V = np.eye(n)
    trace = [off_energy(M)]
    rounds = round_robin_pairs(n)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        biggest = 0.0
        for P, Q in rounds:
            g0 = M[:, P, P] - M[:, Q, Q]
            g1 = M[:, P, Q] + M[:, Q, P]
            ton = np.sum(g0 * g0, axis=0) - np.sum(g1 * g1, axis=0)
            toff = 2.0 * np.sum(g0 * g1, axis=0)
            theta = 0.5 * np.arctan2(toff, ton + np.sqrt(ton * ton + toff * toff))
            active = np.abs(theta) > tol
            if not np.any(active):
                continue
            biggest = max(biggest, float(np.max(np.abs(theta))))
            P, Q, theta = P[active], Q[active], theta[active]
            c, s = np.cos(theta), np.sin(theta)
            J = np.eye(n)
            J[P, P] = c
            J[Q, Q] = c
            J[Q, P] = s
            J[P, Q] = -s
            M = np.einsum("ji,kjl,lm->kim", J, M, J, optimize=True)
            V = V @ J
        trace.append(off_energy(M))
        if biggest <= tol:
            converged = True
            break
    W = V.T
    if return_info:
        return W, JointDiagInfo(trace, sweeps, converged)
    return W


class SeededRng:
    """Deterministic random stream.

    Uniforms come from numpy's Philox-4x64 counter-based bit generator keyed
    by the seed; gaussians are produced from those uniforms by the
    Box-Muller transform, so the stream depends only on the seed.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        u = self._gen.random(size)
        return low + (high - low) * u

    def normal(self, size=None, loc: float = 0.0, scale: float = 1.0):
        count = int(np.prod(size)) if size is not None else 1
        half = (count + 1) // 2
        u1 = 1.0 - self._gen.random(half)  # (0, 1]
        u2 = self._gen.random(half)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * half)
        z[0::2] = r * np.cos(2.0 * np.pi * u2)
        z[1::2] = r * np.sin(2.0 * np.pi * u2)
        z = loc + scale * z[:count]
        if size is None:
            return float(z[0])
        return z.reshape(size)

    def integers(self, low: int, high: int, size=None):
        u = self.uniform(size)
        return (low + np.floor(u * (high - low))).astype(int)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")

    def spawn(self, *keys: int) -> "SeededRng":
        """Child stream deterministically derived from this seed and ``keys``."""
        h = self.seed
        for k in keys:
            h = (h * 0x9E3779B97F4A7C15 + int(k) + 0x632BE59BD9B4E019) & 0xFFFFFFFFFFFFFFFF
            h ^= h >> 29
        return SeededRng(h)


def seeded_rng(seed: int) -> SeededRng:
    return SeededRng(seed)
