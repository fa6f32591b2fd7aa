"""Symmetric eigen-decomposition for the high-dimension, low-sample-size regime.

For a p x n data matrix Y with n << p, the nonzero spectrum of the sample
covariance S = Y Y^T / n is recovered from the n x n dual matrix
L = Y^T Y / p:

    L u = l^2 u   =>   S v = s^2 v,   v = Y u / (sqrt(p) l),   s^2 = l^2 p / n

and conversely u = Y^T v / (sqrt(n) s). S itself is never formed on that path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import metrics
from .errors import ConvergenceError, DirectPathTooLarge, RankDegenerateError

DIRECT_PATH_CAP = 512
MAX_JACOBI_DIM = 2048
ZERO_RANK_RTOL = 1e-12
ORIENT_ATOL = 1e-14


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray


@dataclass
class SpectrumSummary:
    eigenvalues: np.ndarray          # nonzero eigenvalues of S, descending
    trace: float                     # tr(S)
    pairs: list                      # top-q EigenPair of S, oriented
    dual_eigenvalues: np.ndarray     # eigenvalues of L (s^2 n / p), descending
    dual_vectors: np.ndarray         # n x q, dual vectors matching ``pairs``

    @property
    def q(self):
        return len(self.pairs)


def _matrix(Y):
    Y = getattr(Y, "values", Y)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("expected a two-dimensional array")
    if not np.all(np.isfinite(Y)):
        raise ValueError("matrix has non-finite entries")
    return Y


def _symmetric(A):
    A = np.asarray(getattr(A, "values", A), dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    At = np.swapaxes(A, -1, -2)
    if not np.array_equal(A, At):
        scale = max(np.abs(A).max(), 1.0)
        if np.abs(A - At).max() > 1e-12 * scale:
            raise ValueError("matrix is not symmetric")
        A = 0.5 * (A + At)
    return A


def sample_covariance(Y, cap: int = DIRECT_PATH_CAP) -> np.ndarray:
    """S = Y Y^T / n, refused for p above ``cap``."""
    Y = _matrix(Y)
    p, n = Y.shape
    if p > cap:
        raise DirectPathTooLarge(f"p={p} exceeds direct-path cap {cap}; use dual_covariance")
    S = Y @ Y.T / n
    return 0.5 * (S + S.T)


def dual_covariance(Y) -> np.ndarray:
    """L = Y^T Y / p."""
    Y = _matrix(Y)
    L = Y.T @ Y / Y.shape[0]
    return 0.5 * (L + L.T)


@lru_cache(maxsize=None)
def _circle_perm(m):
    """Slot permutation advancing the round-robin schedule by one round."""
    return np.array([0, m - 1] + list(range(1, m - 1)), dtype=np.intp)


def _off_norm(A):
    """Off-diagonal Frobenius norm of each matrix in a (B, m, m) stack."""
    off = A.copy()
    idx = np.arange(A.shape[-1])
    off[:, idx, idx] = 0.0
    return np.sqrt(np.sum(off * off, axis=(1, 2)))


def _rotate_pairs(M, h, c, s, axis):
    """Rotate slot k against slot m-1-k (k < h) along ``axis`` of a (B, m, m) stack."""
    if axis == 1:
        top, bot = M[:, :h], M[:, h:][:, ::-1]
        cc, sc = c[:, :, None], s[:, :, None]
    else:
        top, bot = M[:, :, :h], M[:, :, h:][:, :, ::-1]
        cc, sc = c[:, None, :], s[:, None, :]
    t, b = top.copy(), bot.copy()
    top[...] = cc * t - sc * b
    bot[...] = sc * t + cc * b


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 64):
    """Full spectrum of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once (round-robin order), with
    the disjoint pairs of a round rotated together. The matrix is kept in
    slot order so that round pairs are (k, m-1-k); slots are re-permuted
    between rounds instead of gathering scattered rows. A stack of matrices
    (..., d, d) is decomposed in one pass.

    Parameters
    ----------
    A : (..., d, d) array_like
        Symmetric, finite, d <= 2048.
    tol : float
        Stop once the off-diagonal Frobenius norm is below ``tol * |A|_F``
        (for every matrix of a stack).
    max_sweeps : int
        Raise :class:`ConvergenceError` beyond this many sweeps.

    Returns
    -------
    w : (..., d) ndarray
        Eigenvalues, descending.
    V : (..., d, d) ndarray
        Orthonormal eigenvectors as columns, ``A V = V diag(w)``.
    """
    A0 = _symmetric(A)
    batch_shape = A0.shape[:-2]
    d = A0.shape[-1]
    if d > MAX_JACOBI_DIM:
        raise ValueError(f"dimension {d} exceeds {MAX_JACOBI_DIM}")
    A0 = A0.reshape((-1, d, d))
    B = A0.shape[0]
    m = d + (d % 2)
    h = m // 2
    # odd d: a zero dummy slot, never coupled to anything
    A = np.zeros((B, m, m))
    A[:, :d, :d] = A0
    Vt = np.broadcast_to(np.eye(m), (B, m, m)).copy()  # eigenvectors as rows
    slots = np.arange(m)
    perm = _circle_perm(m)
    ar = np.arange(m)
    top_idx = np.arange(h)
    bot_idx = m - 1 - top_idx
    scale = np.sqrt(np.sum(A * A, axis=(1, 2)))
    off = _off_norm(A)
    sweeps = 0
    polished = False
    while True:
        if np.all(off <= tol * scale):
            # one extra sweep: convergence is quadratic, so this lands at roundoff
            if polished or not np.any(off):
                break
            polished = True
        if sweeps == max_sweeps:
            worst = float(np.max(off / np.where(scale > 0, scale, 1.0)))
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (relative off-diagonal {worst:.3e})",
                residual=worst,
            )
        for _ in range(m - 1):
            apq = A[:, top_idx, bot_idx]
            live = apq != 0.0
            if live.any():
                diag = A[:, ar, ar]
                safe = np.where(live, apq, 1.0)
                # a denormal apq overflows theta to inf, which correctly gives t = 0
                with np.errstate(over="ignore"):
                    theta = np.where(live, (diag[:, bot_idx] - diag[:, top_idx]) / (2.0 * safe), 0.0)
                    t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(live, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                _rotate_pairs(A, h, c, s, axis=1)
                _rotate_pairs(A, h, c, s, axis=2)
                A[:, top_idx, bot_idx] = 0.0
                A[:, bot_idx, top_idx] = 0.0
                _rotate_pairs(Vt, h, c, s, axis=1)
            A = A[:, perm][:, :, perm]
            Vt = Vt[:, perm]
            slots = slots[perm]
        A = 0.5 * (A + np.swapaxes(A, 1, 2))
        sweeps += 1
        off = _off_norm(A)
    keep = slots < d
    w = A[:, ar, ar][:, keep]
    V = np.swapaxes(Vt[:, keep][:, :, :d], 1, 2)
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w.reshape(batch_shape + (d,)), V.reshape(batch_shape + (d, d))


def eigenpairs(A, **kw):
    w, V = jacobi_eigh(A, **kw)
    return [EigenPair(float(w[i]), V[:, i].copy()) for i in range(len(w))]


def spectral_norm(A):
    """Largest absolute eigenvalue of a symmetric matrix (or of each in a stack)."""
    w, _ = jacobi_eigh(A)
    if w.shape[-1] == 0:
        return 0.0
    out = np.max(np.abs(w), axis=-1)
    return float(out) if out.ndim == 0 else out


def orient(v) -> np.ndarray:
    """Sign ``v`` so that its entry mean is nonnegative.

    When the mean is within 1e-14 of zero, the first entry with magnitude
    above 1e-14 is made positive instead.
    """
    v = np.asarray(v, dtype=float)
    if not np.any(v != 0.0):
        raise ValueError("cannot orient the zero vector")
    m = metrics.ave(v)
    if m > ORIENT_ATOL:
        return v
    if m < -ORIENT_ATOL:
        return -v
    big = np.flatnonzero(np.abs(v) > ORIENT_ATOL)
    if big.size == 0:
        big = np.flatnonzero(v)
    return v if v[big[0]] > 0 else -v


def _unit(v):
    return v / metrics.norm(v)


def top_eigenpairs_hdlss(Y, q: int = 1) -> SpectrumSummary:
    """Top-q eigenpairs of S = Y Y^T / n via the smaller of S and L.

    Eigenvalues below 1e-12 times the largest are treated as exact zeros.
    """
    Y = _matrix(Y)
    p, n = Y.shape
    if not 1 <= q < min(n, p):
        raise ValueError(f"q must satisfy 1 <= q < min(n, p) = {min(n, p)}, got {q}")
    trace = math.fsum((Y * Y).ravel()) / n
    if p >= n:
        ell2, U = jacobi_eigh(dual_covariance(Y))
        s2_all = ell2 * p / n
    else:
        s2_all, Vs = jacobi_eigh(sample_covariance(Y))
    top = s2_all[0]
    if not top > 0:
        raise RankDegenerateError("leading eigenvalue is zero")
    nonzero = s2_all[s2_all > ZERO_RANK_RTOL * top]
    if len(nonzero) < q:
        raise RankDegenerateError(f"only {len(nonzero)} nonzero eigenvalues, q={q}")

    pairs = []
    duals = np.empty((n, q))
    for i in range(q):
        s2 = float(s2_all[i])
        s = math.sqrt(s2)
        if p >= n:
            v = Y @ U[:, i] / (math.sqrt(p) * math.sqrt(ell2[i]))
        else:
            v = Vs[:, i]
        v = orient(_unit(v))
        # dual vector consistent with the oriented primal one
        duals[:, i] = _unit(Y.T @ v / (math.sqrt(n) * s))
        pairs.append(EigenPair(s2, v))
    return SpectrumSummary(
        eigenvalues=nonzero.copy(),
        trace=trace,
        pairs=pairs,
        dual_eigenvalues=s2_all * n / p,
        dual_vectors=duals,
    )


def residual_norm(Y, v, s2) -> float:
    """|S v - s^2 v| evaluated as Y (Y^T v) / n, without forming S."""
    Y = _matrix(Y)
    r = Y @ (Y.T @ v) / Y.shape[1] - s2 * v
    return metrics.norm(r)


# ---------------------------------------------------------------------------
# perturbation diagnostics
# ---------------------------------------------------------------------------
# Both checks accept a single (d, d) pair or stacks (..., d, d); fields are
# then arrays over the stack. |Delta| is the spectral norm.

def _pair_stack(A, Delta):
    A = _symmetric(A)
    Delta = _symmetric(Delta)
    if A.shape != Delta.shape:
        raise ValueError(f"A and Delta must have equal shape, got {A.shape} and {Delta.shape}")
    return A, Delta


def _scalar(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


@dataclass
class WeylResult:
    max_deviation: object   # max_j |alpha_j - zeta_j|
    bound: object           # |Delta|
    index: object           # j attaining the maximum
    slack: float

    @property
    def margin(self):
        return self.bound - self.max_deviation

    @property
    def ok(self):
        return bool(np.all(self.max_deviation <= self.bound + self.slack))

    @property
    def violations(self):
        """Stack positions where the inequality fails."""
        bad = np.asarray(self.max_deviation > self.bound + self.slack)
        return np.argwhere(bad)


def weyl_check(A, Delta, slack: float = 1e-9) -> WeylResult:
    """Check max_j |alpha_j - zeta_j| <= |Delta| for the spectra of A and A + Delta."""
    A, Delta = _pair_stack(A, Delta)
    w, _ = jacobi_eigh(np.stack([A, A + Delta, Delta]))
    dev = np.abs(w[0] - w[1])
    j = np.argmax(dev, axis=-1)
    max_dev = np.take_along_axis(dev, j[..., None], axis=-1)[..., 0]
    bound = np.max(np.abs(w[2]), axis=-1)
    return WeylResult(_scalar(max_dev), _scalar(bound), _scalar(j), slack)


@dataclass
class DavisKahanResult:
    status: object          # "ok", "violated" or "gap-degenerate"
    deviation: object       # |a^j - b^j| after sign alignment
    bound: object           # 3 |Delta| / gap_j
    gap: object

    @property
    def ok(self):
        return not np.any(np.asarray(self.status) == "violated")


def davis_kahan_check(A, Delta, j: int, slack: float = 1e-9) -> DavisKahanResult:
    """Check |a^j - b^j| <= 3 |Delta| / gap_j for the j-th eigenvectors (0-based, descending).

    gap_j = min(alpha_{j-1} - alpha_j, alpha_j - alpha_{j+1}) with infinite
    neighbours past either end. The eigenvectors are sign-aligned so that
    <a^j, b^j> >= 0. A zero gap gives status "gap-degenerate".
    """
    A, Delta = _pair_stack(A, Delta)
    d = A.shape[-1]
    if not 0 <= j < d:
        raise ValueError(f"index j={j} out of range for dimension {d}")
    w, V = jacobi_eigh(np.stack([A, A + Delta, Delta]))
    alpha = w[0]
    above = alpha[..., j - 1] - alpha[..., j] if j > 0 else np.full(alpha.shape[:-1], np.inf)
    below = alpha[..., j] - alpha[..., j + 1] if j < d - 1 else np.full(alpha.shape[:-1], np.inf)
    gap = np.minimum(above, below)
    a, b = V[0][..., :, j], V[1][..., :, j]
    sign = np.where(np.sum(a * b, axis=-1) < 0, -1.0, 1.0)
    deviation = np.linalg.norm(a - sign[..., None] * b, axis=-1)
    norm_delta = np.max(np.abs(w[2]), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        # d == 1 has an infinite gap: both eigenvectors are the same +-1
        bound = np.where(np.isinf(gap), 0.0, 3.0 * norm_delta / gap)
    degenerate = ~(gap > 0)
    status = np.where(degenerate, "gap-degenerate",
                      np.where(deviation <= bound + slack, "ok", "violated"))
    deviation = np.where(degenerate, np.nan, deviation)
    bound = np.where(degenerate, np.nan, bound)
    return DavisKahanResult(_scalar(status), _scalar(deviation), _scalar(bound), _scalar(gap))
