"""
Linear algebra on the moment matrix ``M = -J Phi``: symmetric/antisymmetric
split, eigenvalue signature, and the rank decomposition
``M = sum y y^T - sum z z^T`` linking the two-system to the multivector form.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .model import standard_j

__all__ = [
    "Signature",
    "split_sym_antisym",
    "signature_of",
    "signature_series",
    "decompose_signature",
    "compose",
    "sp_residual",
    "moments_from_phi",
    "phi_from_moments",
    "upper_triangle",
    "from_upper_triangle",
]

SIGNATURE_TOL = 1e-9


class Signature(NamedTuple):
    m_plus: int
    m_minus: int
    m_zero: int

    @property
    def rank(self):
        return self.m_plus + self.m_minus


def _n_of(A):
    d = A.shape[0]
    if A.ndim != 2 or A.shape[1] != d or d % 2:
        raise ValueError(f"expected a square matrix of even order, got {A.shape}")
    return d // 2


def moments_from_phi(phi):
    """``M = -J Phi``."""
    phi = np.asarray(phi, dtype=float)
    return -standard_j(_n_of(phi)) @ phi


def phi_from_moments(M):
    """``Phi = J M``."""
    M = np.asarray(M, dtype=float)
    return standard_j(_n_of(M)) @ M


def upper_triangle(M):
    """Row-major upper-triangle entries ``M_ij, i <= j``."""
    M = np.asarray(M)
    return M[np.triu_indices(M.shape[0])]


def from_upper_triangle(m, dim):
    """Symmetric ``dim x dim`` matrix from its row-major upper triangle."""
    m = np.asarray(m, dtype=float)
    if m.shape != (dim * (dim + 1) // 2,):
        raise ValueError(
            f"expected {dim * (dim + 1) // 2} upper-triangle entries, got {m.shape}"
        )
    M = np.zeros((dim, dim))
    iu = np.triu_indices(dim)
    M[iu] = m
    M.T[iu] = m
    return M


def split_sym_antisym(M):
    """Return ``((M + M^T)/2, (M - M^T)/2)``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got {M.shape}")
    return 0.5 * (M + M.T), 0.5 * (M - M.T)


def _require_symmetric(M, tol):
    scale = max(1.0, float(np.linalg.norm(M)))
    if np.linalg.norm(M - M.T) > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")


def signature_of(M, tol=SIGNATURE_TOL):
    """
    Count positive, negative and zero eigenvalues of a symmetric matrix.

    Eigenvalues with ``|lambda| <= tol * max(1, |M|_F)`` count as zero.
    """
    M = np.asarray(M, dtype=float)
    _require_symmetric(M, tol)
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))
    cut = tol * max(1.0, float(np.linalg.norm(M)))
    plus = int(np.sum(lam > cut))
    minus = int(np.sum(lam < -cut))
    return Signature(plus, minus, M.shape[0] - plus - minus)


def signature_series(Ms, tol=SIGNATURE_TOL):
    """
    :func:`signature_of` applied to a stack of matrices, shape ``(N, d, d)``.

    Returns an integer array of shape ``(N, 3)`` with rows ``(m+, m-, m0)``.
    """
    Ms = np.asarray(Ms, dtype=float)
    norms = np.linalg.norm(Ms, axis=(1, 2))
    scale = tol * np.maximum(1.0, norms)
    if np.any(np.linalg.norm(Ms - Ms.transpose(0, 2, 1), axis=(1, 2)) > scale):
        raise ValueError("matrix is not symmetric within tolerance")
    lam = np.linalg.eigvalsh(0.5 * (Ms + Ms.transpose(0, 2, 1)))
    plus = np.sum(lam > scale[:, None], axis=1)
    minus = np.sum(lam < -scale[:, None], axis=1)
    return np.stack([plus, minus, Ms.shape[1] - plus - minus], axis=1)


def decompose_signature(M, tol=SIGNATURE_TOL):
    """
    Write symmetric ``M`` as ``sum y_i y_i^T - sum z_j z_j^T``.

    Vectors come from the eigendecomposition, ordered by descending
    eigenvalue (``y``) and ascending eigenvalue (``z``). The result is one
    representative of a pseudo-orthogonal family; no canonical orientation
    is imposed.

    Returns
    -------
    ys, zs : ndarray
        Shapes ``(m_plus, 2n)`` and ``(m_minus, 2n)``.
    """
    M = np.asarray(M, dtype=float)
    _require_symmetric(M, tol)
    lam, V = np.linalg.eigh(0.5 * (M + M.T))
    cut = tol * max(1.0, float(np.linalg.norm(M)))
    order = np.argsort(-lam)
    lam, V = lam[order], V[:, order]
    pos = lam > cut
    neg = lam < -cut
    ys = (V[:, pos] * np.sqrt(lam[pos])).T
    zs = (V[:, neg] * np.sqrt(-lam[neg])).T[::-1]
    return ys, zs


def compose(ys, zs, dim=None):
    """``sum y y^T - sum z z^T``; ``dim`` is needed only when both are empty."""
    ys = np.asarray(ys, dtype=float)
    zs = np.asarray(zs, dtype=float)
    if dim is None:
        dim = ys.shape[-1] if ys.size else zs.shape[-1]
    ys = ys.reshape(-1, dim)
    zs = zs.reshape(-1, dim)
    return ys.T @ ys - zs.T @ zs


def sp_residual(phi):
    """Frobenius norm of ``Phi^T J + J Phi``; zero iff ``Phi`` is in sp(2n)."""
    phi = np.asarray(phi, dtype=float)
    J = standard_j(_n_of(phi))
    return float(np.linalg.norm(phi.T @ J + J @ phi))
