"""Dense complex linear algebra helpers shared by the transform and decoder code.

Everything here is pure and operates on plain numpy arrays.  Frame sizes in
this package are small (at most 16 x 16), so dense storage is used throughout.
"""

import warnings

import numpy as np

# Smallest |R_ii| relative to ||A||_F below which a QR factor is considered
# effectively rank deficient.
RANK_EPS = 1e-12


class RankLossWarning(UserWarning):
    """A QR factor has an effectively vanishing diagonal entry."""


def as_matrix(a):
    """Validate and return ``a`` as a finite complex 2-d array."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix entries must be finite")
    return a


def qr_decompose(a):
    """QR factorization of a square matrix with a unique sign convention.

    Returns ``(q, r)`` with ``a = q @ r``, ``q`` unitary and ``r`` upper
    triangular with a real non-negative diagonal.  The diagonal convention
    makes the factors unique for full-rank input, so repeated runs on the
    same matrix are bit-identical (the underlying Householder factorization
    is deterministic).

    Emits :class:`RankLossWarning` when the smallest ``|r_ii|`` falls below
    ``RANK_EPS * ||a||_F``; callers that cannot tolerate rank loss must check
    the diagonal themselves.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"qr_decompose expects a square matrix, got {n}x{m}")
    q, r = np.linalg.qr(a)
    diag = np.diagonal(r)
    phase = np.where(np.abs(diag) > 0.0, np.exp(-1j * np.angle(diag)), 1.0 + 0j)
    q = q * np.conj(phase)[None, :]
    r = phase[:, None] * r
    # the diagonal is now real non-negative up to rounding; pin it exactly
    idx = np.arange(n)
    r[idx, idx] = np.abs(diag)
    if np.min(np.abs(diag)) < RANK_EPS * np.linalg.norm(a):
        warnings.warn(
            "effective rank loss: smallest |R_ii| below threshold",
            RankLossWarning,
            stacklevel=2,
        )
    return q, r


def dirichlet_sq(x, k):
    """Squared periodic Dirichlet kernel ``sin^2(pi k x) / sin^2(pi x)``.

    Total function of a real argument: the removable singularity at integer
    ``x`` evaluates to ``k**2``.  Even in ``x`` and periodic with period 1.
    """
    if k < 1:
        raise ValueError("k must be a positive count")
    x = np.asarray(x, dtype=float)
    frac = x - np.round(x)
    near_int = np.abs(frac) < 1e-12
    safe = np.where(near_int, 0.5, x)  # dummy value away from the singularity
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(np.pi * k * safe) ** 2 / np.sin(np.pi * safe) ** 2
    out = np.where(near_int, float(k) ** 2, ratio)
    if out.ndim == 0:
        return float(out)
    return out


def matmul(a, b):
    """Matrix product with an explicit dimension check."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def adjoint(a):
    """Conjugate transpose."""
    return as_matrix(a).conj().T


def frobenius_sq(a):
    """Squared Frobenius norm, ``sum |a_ij|^2``."""
    a = np.asarray(a, dtype=complex)
    return float(np.sum(np.abs(a) ** 2))


def scale(a, c):
    """Scalar multiple of a matrix."""
    return as_matrix(a) * complex(c)
