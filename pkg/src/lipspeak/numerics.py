"""Dense linear-algebra kernel: covariance, symmetric eigensolver, least squares.

Matrices are plain 2-D ``float64`` numpy arrays. The eigensolver is a cyclic
Jacobi method; rotations within one round of the round-robin ordering touch
disjoint index pairs, so a whole round is applied as one vectorized update.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericError

SYMMETRY_TOL = 1e-10
MAX_SWEEPS = 100
OFF_DIAGONAL_TOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (descending) and matching unit eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0


def as_matrix(a, name="matrix"):
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return m


def covariance(data):
    """Sample mean and unbiased covariance of column samples.

    ``data`` is n x N with one sample per column. Returns ``(mean, cov)``
    with ``cov = (1/(N-1)) sum (x_i - mean)(x_i - mean)^T``.
    """
    x = as_matrix(data, "data")
    n_samples = x.shape[1]
    if n_samples < 2:
        raise InvalidInputError(f"covariance needs at least 2 samples, got {n_samples}")
    mean = x.mean(axis=1)
    xc = x - mean[:, None]
    cov = xc @ xc.T / (n_samples - 1)
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def _round_robin_orders(n):
    """Arrangements for the n-1 rounds of a round-robin over ``n`` indices.

    In each arrangement position ``i`` is paired with position ``i + n/2``;
    every unordered pair of indices meets exactly once across the rounds.
    """
    players = list(range(n))
    half = n // 2
    orders = []
    for _ in range(n - 1):
        orders.append(np.array(players[:half] + players[half:][::-1]))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return orders


def sign_normalize_columns(v):
    """Flip columns so each one's largest-magnitude entry is non-negative."""
    v = np.array(v, dtype=np.float64)
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.where(v[idx, np.arange(v.shape[1])] < 0, -1.0, 1.0)
    return v * signs


def eig_sym(s, max_sweeps=MAX_SWEEPS, tol=OFF_DIAGONAL_TOL, method="jacobi"):
    """Full eigendecomposition of a real symmetric matrix.

    ``method="jacobi"`` runs cyclic Jacobi until the off-diagonal Frobenius
    norm drops below ``tol * ||S||_F``; ``method="lapack"`` defers to
    ``numpy.linalg.eigh``. Either way eigenvalues come back descending and
    each eigenvector's largest-magnitude entry is non-negative.
    """
    a = as_matrix(s, "S")
    n = a.shape[0]
    if a.shape[1] != n:
        raise InvalidInputError(f"S must be square, got shape {a.shape}")
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL:
        raise InvalidInputError("S is not symmetric within 1e-10")
    a = 0.5 * (a + a.T)
    if method == "lapack":
        values, vectors = np.linalg.eigh(a)
        rank = np.argsort(-values, kind="stable")
        return EigenDecomposition(values[rank], sign_normalize_columns(vectors[:, rank]), 0)
    if method != "jacobi":
        raise InvalidInputError(f"unknown eigen method {method!r}")

    # Odd sizes get a decoupled padding index that is dropped afterwards.
    size = n + (n % 2)
    if size != n:
        padded = np.zeros((size, size))
        padded[:n, :n] = a
        a = padded
    v = np.eye(size)

    scale = np.linalg.norm(a)
    threshold = tol * scale
    half = size // 2
    orders = _round_robin_orders(size) if size > 1 else [np.zeros(1, dtype=int)]
    # Work in the first round's arrangement; ``order[k]`` is the original
    # index living at position k.
    order = orders[0]
    a = a[np.ix_(order, order)]
    vt = v[order]
    diag_idx = np.arange(half)
    sweeps = 0
    while True:
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= threshold or scale == 0.0:
            break
        if sweeps >= max_sweeps:
            raise NumericError(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e})"
            )
        sweeps += 1
        for r in range(len(orders)):
            nxt = orders[(r + 1) % len(orders)]
            apq = a[diag_idx, diag_idx + half]
            app = a[diag_idx, diag_idx]
            aqq = a[diag_idx + half, diag_idx + half]
            c, sn = _jacobi_angles(app, aqq, apq)

            # J^T A J == J^T (J^T A)^T for symmetric A, so both sides are
            # contiguous row updates.
            _rotate_rows(a, c, sn, half)
            a = np.ascontiguousarray(a.T)
            _rotate_rows(a, c, sn, half)
            a[diag_idx, diag_idx + half] = 0.0
            a[diag_idx + half, diag_idx] = 0.0
            _rotate_rows(vt, c, sn, half)

            inverse = np.empty(size, dtype=int)
            inverse[order] = np.arange(size)
            pos = inverse[nxt]
            a = a[pos][:, pos]
            vt = vt[pos]
            order = nxt

    keep = order < n
    values = np.diag(a)[keep]
    vectors = vt[keep][:, :n].T
    rank = np.argsort(-values, kind="stable")
    return EigenDecomposition(values[rank], sign_normalize_columns(vectors[:, rank]), sweeps)


def _rotate_rows(m, c, sn, half):
    top = m[:half].copy()
    bot = m[half:]
    m[:half] *= c[:, None]
    m[:half] -= sn[:, None] * bot
    bot *= c[:, None]
    bot += sn[:, None] * top


def _jacobi_angles(app, aqq, apq):
    """Rotation cosines/sines zeroing each ``apq`` (Rutishauser's stable form)."""
    c = np.ones_like(apq)
    sn = np.zeros_like(apq)
    nz = apq != 0.0
    if np.any(nz):
        theta = (aqq[nz] - app[nz]) / (2.0 * apq[nz])
        big = np.abs(theta) > 1e150
        th = np.where(big, 1.0, theta)
        t = np.where(th >= 0.0, 1.0, -1.0) / (np.abs(th) + np.sqrt(th * th + 1.0))
        t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
        c[nz] = 1.0 / np.sqrt(t * t + 1.0)
        sn[nz] = t * c[nz]
    return c, sn


def solve_least_squares(a, b, ridge=0.0):
    """Minimize ``||A X - B||^2 + ridge ||X||^2``.

    Solved through the augmented system ``[A; sqrt(ridge) I] X = [B; 0]``
    with an SVD-based solver so that ill-conditioned ``A`` stays stable.
    """
    a = as_matrix(a, "A")
    b = np.array(b, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    b = as_matrix(b, "B")
    if b.shape[0] != a.shape[0]:
        raise InvalidInputError(f"row mismatch: A has {a.shape[0]}, B has {b.shape[0]}")
    if ridge < 0 or not np.isfinite(ridge):
        raise InvalidInputError(f"ridge must be finite and >= 0, got {ridge}")
    cols = a.shape[1]
    if ridge > 0:
        a = np.vstack([a, np.sqrt(ridge) * np.eye(cols)])
        b = np.vstack([b, np.zeros((cols, b.shape[1]))])
    x, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < cols:
        raise NumericError(
            f"least-squares system is rank deficient (rank {rank} < {cols}); pass ridge > 0"
        )
    return x
