"""
Degenerate Poisson structure of the two-system.

The bracket on functions of ``(x, Phi)`` is::

    {U, V} = U_x^T J V_x + 2 tr(Phi^T [grad_Phi U, grad_Phi V])

with ``grad_Phi`` taken entry-wise. Coordinates used throughout are
``(x_1..x_2n, m)`` where ``m`` is the row-major upper triangle of the
symmetric moment matrix ``M = -J Phi``; for ``n = 1`` that is
``(q, p, alpha, beta, gamma)``. Each chart coordinate ``m_ab`` is extended
off the symmetric subspace as ``(M_ab + M_ba) / 2``, which keeps the chart
closed under the bracket.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .dynamics import TwoState
from .model import standard_j
from .structure import from_upper_triangle, upper_triangle

__all__ = [
    "n_moments",
    "grad_phi_det",
    "grad_phi_trace",
    "omega_matrix",
    "bracket",
    "extended_energy",
    "extended_energy_gradient",
    "bracket_rhs",
    "casimirs",
    "casimir_gradients",
    "casimir_kernel_check",
    "jacobi_residual",
    "numerical_rank",
]

RANK_TOL = 1e-10


def n_moments(n):
    return n * (2 * n + 1)


def grad_phi_det(phi):
    """Entry-wise gradient of ``det Phi``: ``det(Phi) * inv(Phi)^T``."""
    phi = np.asarray(phi, dtype=float)
    try:
        inv = np.linalg.inv(phi)
    except np.linalg.LinAlgError:
        raise ValueError("Phi is singular; det gradient formula needs inv(Phi)") from None
    return np.linalg.det(phi) * inv.T


def grad_phi_trace(A):
    """Entry-wise gradient of ``tr(Phi A)`` with respect to ``Phi``: ``A^T``."""
    return np.asarray(A, dtype=float).T.copy()


@lru_cache(maxsize=None)
def _chart(n):
    """
    Gradients (w.r.t. Phi) of the chart coordinates and their pairwise
    commutators. ``C[p, q] = [G_p, G_q]`` so that ``{m_p, m_q} = 2 <Phi, C[p, q]>``.
    """
    d = 2 * n
    J = standard_j(n)
    iu = np.triu_indices(d)
    G = np.empty((len(iu[0]), d, d))
    dphi = np.empty_like(G)  # d Phi / d m_p on the symmetric subspace
    for p, (a, b) in enumerate(zip(*iu)):
        S = np.zeros((d, d))
        S[a, b] += 0.5
        S[b, a] += 0.5
        G[p] = J @ S
        dphi[p] = J @ (2 * S if a != b else S)
    C = np.einsum("pij,qjk->pqik", G, G)
    C = C - C.transpose(1, 0, 2, 3)
    for arr in (G, dphi, C):
        arr.setflags(write=False)
    return G, dphi, C


def _split(n, z):
    z = np.asarray(z, dtype=float)
    d = 2 * n
    if z.shape != (d + n_moments(n),):
        raise ValueError(f"expected {d + n_moments(n)} coordinates, got {z.shape}")
    return z[:d], z[d:]


def omega_matrix(x, m):
    """
    Structure matrix of the bracket in ``(x, m)`` coordinates.

    Block diagonal: ``J`` on the ``x`` block and a matrix linear in ``m`` on
    the moment block. Size ``2n^2 + 3n``.
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    d = x.shape[0]
    n = d // 2
    if d % 2 or m.shape != (n_moments(n),):
        raise ValueError(f"inconsistent shapes x{x.shape}, m{m.shape}")
    _, _, C = _chart(n)
    phi = standard_j(n) @ from_upper_triangle(m, d)
    omega = 2.0 * np.einsum("ik,pqik->pq", phi, C)
    # exact antisymmetry regardless of rounding in the contraction
    omega = 0.5 * (omega - omega.T)
    N = d + len(m)
    out = np.zeros((N, N))
    out[:d, :d] = standard_j(n)
    out[d:, d:] = omega
    return out


def bracket(x, m, grad_u, grad_v):
    """``{U, V}`` from chart gradients of ``U`` and ``V`` at ``(x, m)``."""
    return float(np.asarray(grad_u) @ omega_matrix(x, m) @ np.asarray(grad_v))


def numerical_rank(A, tol=RANK_TOL):
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def extended_energy(model, s):
    """``H(x) + 1/2 tr(H''(x) M)``, equal to ``H(x) - 1/2 tr(A(x) Phi)``."""
    return model.value(s.x) + 0.5 * float(np.sum(model.hessian(s.x) * s.M))


def extended_energy_gradient(model, x, M):
    """Chart gradient of the extended energy at ``(x, M)``."""
    Ms = 0.5 * (M + M.T)
    H2 = model.hessian(x)
    gx = model.gradient(x) + 0.5 * model.third_contract(x, Ms)
    # d/dm_ab of 1/2 sum H''_ij M_ij: 1/2 H''_aa on the diagonal, H''_ab off it
    W = H2.copy()
    np.fill_diagonal(W, 0.5 * np.diag(H2))
    return np.concatenate([gx, upper_triangle(W)])


def bracket_rhs(model, s):
    """
    Two-system vector field written as ``Omega(x, m) grad(extended energy)``.

    Agrees with :func:`twosystem.dynamics.two_system_rhs` for ``Phi`` in
    sp(2n).
    """
    x = np.asarray(s.x, dtype=float)
    d = x.shape[0]
    M = s.M
    m = upper_triangle(0.5 * (M + M.T))
    zdot = omega_matrix(x, m) @ extended_energy_gradient(model, x, M)
    Mdot = from_upper_triangle(zdot[d:], d)
    return TwoState(zdot[:d], standard_j(d // 2) @ Mdot)


def casimirs(phi, n=None):
    """
    Coefficients of ``det(Phi - lambda I)`` at ``lambda^0, lambda^2, ...,
    lambda^(2n-2)``, computed from the eigenvalues of ``Phi``.

    For ``n = 1`` this is ``det Phi = alpha*gamma - beta**2``.
    """
    phi = np.asarray(phi, dtype=float)
    d = phi.shape[0]
    if n is None:
        n = d // 2
    if phi.shape != (2 * n, 2 * n):
        raise ValueError(f"expected a {2 * n}x{2 * n} matrix, got {phi.shape}")
    coeffs = np.poly(phi)  # det(lambda I - Phi), highest power first
    # even degree 2n, so det(Phi - lambda I) has the same coefficients
    return np.real(coeffs[d::-2][:n]).copy()


def _elementary_gradients(phi, kmax):
    """
    ``e_k`` (elementary symmetric functions of the eigenvalues) and their
    entry-wise gradients for ``k = 0..kmax``, via Newton's identities.
    """
    d = phi.shape[0]
    powers = [np.eye(d)]
    for _ in range(kmax):
        powers.append(powers[-1] @ phi)
    p = [float(np.trace(P)) for P in powers]
    # grad tr(Phi^i) = i (Phi^(i-1))^T
    gp = [None] + [i * powers[i - 1].T for i in range(1, kmax + 1)]
    e = [1.0]
    ge = [np.zeros((d, d))]
    for k in range(1, kmax + 1):
        val = 0.0
        grad = np.zeros((d, d))
        for i in range(1, k + 1):
            sgn = (-1.0) ** (i - 1)
            val += sgn * e[k - i] * p[i]
            grad += sgn * (ge[k - i] * p[i] + e[k - i] * gp[i])
        e.append(val / k)
        ge.append(grad / k)
    return e, ge


def casimir_gradients(x, m):
    """
    Chart gradients of the ``n`` Casimirs at ``(x, m)``, rows in the order of
    :func:`casimirs`. The ``x`` components are zero.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    n = d // 2
    _, dphi, _ = _chart(n)
    phi = standard_j(n) @ from_upper_triangle(m, d)
    _, ge = _elementary_gradients(phi, d)
    out = np.zeros((n, d + n_moments(n)))
    for r, k in enumerate(range(d, 0, -2)):
        # coefficient of lambda^(2n-k) is e_k for even k
        out[r, d:] = np.einsum("ij,pij->p", ge[k], dphi)
    return out


def casimir_kernel_check(x, m):
    """Largest ``|Omega grad C|`` over the Casimirs; zero in exact arithmetic."""
    omega = omega_matrix(x, m)
    grads = casimir_gradients(x, m)
    return float(max(np.linalg.norm(omega @ g) for g in grads))


def jacobi_residual(x, m):
    """
    Largest cyclic sum ``{{z_i, z_j}, z_k} + cyclic`` over coordinate
    triples. ``Omega`` is affine in the coordinates, so its derivatives are
    read off from unit moment vectors.
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    d = x.shape[0]
    N = d + len(m)
    omega = omega_matrix(x, m)
    dOmega = np.zeros((N, N, N))  # dOmega[l] = d Omega / d z_l
    base = omega_matrix(x, np.zeros_like(m))
    for l in range(len(m)):
        e = np.zeros_like(m)
        e[l] = 1.0
        dOmega[d + l] = omega_matrix(x, e) - base
    # T[i, j, k] = sum_l Omega_il dOmega_jk / dz_l
    T = np.einsum("il,ljk->ijk", omega, dOmega)
    cyc = T + T.transpose(1, 2, 0) + T.transpose(2, 0, 1)
    return float(np.max(np.abs(cyc)))
