"""
Right-hand sides of the base system, its system in variations, the vector
form, the two-system on R^{2n} x sp(2n) and the multivector form.

Every function is pure: it takes a model and a state and returns a state of
the same kind holding the time derivative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import standard_j
from .structure import sp_residual

__all__ = [
    "SpResidualWarning",
    "TwoState",
    "VectorFormState",
    "MultiVectorState",
    "base_rhs",
    "variational_rhs",
    "vector_form_rhs",
    "lax_matrix",
    "two_system_rhs",
    "multivector_rhs",
    "naive_union_rhs",
    "hamiltonicity_defect",
    "sp_tolerance",
]


class SpResidualWarning(RuntimeWarning):
    """Phi is outside sp(2n) by more than the configured tolerance."""


def sp_tolerance(phi):
    return 1e-9 * max(1.0, float(np.linalg.norm(phi)))


@dataclass(frozen=True)
class TwoState:
    """Phase point ``(x, Phi)`` of the two-system."""

    x: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        d = x.shape[0]
        if x.ndim != 1 or d % 2 or phi.shape != (d, d):
            raise ValueError(f"inconsistent shapes x{x.shape}, phi{phi.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_moments(cls, x, M):
        M = np.asarray(M, dtype=float)
        return cls(x, standard_j(M.shape[0] // 2) @ M)

    @property
    def n(self):
        return self.x.shape[0] // 2

    @property
    def M(self):
        return -standard_j(self.n) @ self.phi


@dataclass(frozen=True)
class VectorFormState:
    """Point ``(x, y)`` of the vector form on R^{4n}."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.shape[0] % 2:
            raise ValueError(f"inconsistent shapes x{x.shape}, y{y.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0] // 2


@dataclass(frozen=True)
class MultiVectorState:
    """Point ``(x, {y_i}, {z_j})`` of the multivector form of signature (m+, m-)."""

    x: np.ndarray
    ys: np.ndarray
    zs: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        d = x.shape[0]
        if x.ndim != 1 or d % 2:
            raise ValueError(f"bad phase vector shape {x.shape}")
        ys = np.asarray(self.ys, dtype=float).reshape(-1, d)
        zs = np.asarray(self.zs, dtype=float).reshape(-1, d)
        if len(ys) + len(zs) > d:
            raise ValueError(f"m_plus + m_minus = {len(ys) + len(zs)} exceeds 2n = {d}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "zs", zs)

    @property
    def n(self):
        return self.x.shape[0] // 2

    @property
    def M(self):
        return self.ys.T @ self.ys - self.zs.T @ self.zs


def _vec(model, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (model.dim,):
        raise ValueError(f"expected shape ({model.dim},), got {v.shape}")
    return v


def base_rhs(model, x):
    """``J H'(x)``."""
    x = _vec(model, x)
    return standard_j(model.n) @ model.gradient(x)


def variational_rhs(model, x, y):
    """``J H''(x) y``, the linearised flow along ``x``."""
    x = _vec(model, x)
    y = _vec(model, y)
    return standard_j(model.n) @ (model.hessian(x) @ y)


def _moment_jet(model, x, M):
    # J (H' + 1/2 grad_x tr(H'' M)) and H''; only the symmetric part of M contributes
    g, H2, third = model.jet(x, 0.5 * (M + M.T))
    return standard_j(model.n) @ (g + 0.5 * third), H2


def _moment_x_rhs(model, x, M):
    return _moment_jet(model, x, M)[0]


def vector_form_rhs(model, s):
    x = _vec(model, s.x)
    y = _vec(model, s.y)
    xdot, H2 = _moment_jet(model, x, np.outer(y, y))
    return VectorFormState(xdot, standard_j(model.n) @ (H2 @ y))


def lax_matrix(model, x):
    """``A(x) = H''(x) J``, an element of sp(2n)."""
    return model.hessian(_vec(model, x)) @ standard_j(model.n)


def two_system_rhs(model, s, check_sp=True):
    """
    Time derivative of ``(x, Phi)``::

        x'   = J (H'(x) + 1/2 grad_x tr(H''(x) M)),   M = -J Phi
        Phi' = A Phi - Phi A,                          A = H''(x) J

    ``Phi`` outside sp(2n) triggers :class:`SpResidualWarning` (unless
    ``check_sp`` is false) but the derivative is still computed; the
    antisymmetric part of ``M`` then evolves under the same commutator and
    does not feed back into ``x``.
    """
    x = _vec(model, s.x)
    phi = np.asarray(s.phi, dtype=float)
    if check_sp:
        res = sp_residual(phi)
        if res > sp_tolerance(phi):
            warnings.warn(
                f"Phi is outside sp(2n): residual {res:.3e}",
                SpResidualWarning,
                stacklevel=2,
            )
    return TwoState(*two_system_arrays(model, x, phi))


def two_system_arrays(model, x, phi):
    """Array-level core of :func:`two_system_rhs`: returns ``(x', Phi')``, no checks."""
    J = standard_j(model.n)
    xdot, H2 = _moment_jet(model, x, -J @ phi)
    A = H2 @ J
    return xdot, A @ phi - phi @ A


def multivector_rhs(model, s):
    x = _vec(model, s.x)
    J = standard_j(model.n)
    xdot, H2 = _moment_jet(model, x, s.M)
    # rows are vectors: (J H'' y)^T = y^T H'' J^T
    lin = H2 @ J.T
    return MultiVectorState(xdot, s.ys @ lin, s.zs @ lin)


def naive_union_rhs(model, s):
    """Base system and system in variations glued with no feedback term."""
    return VectorFormState(base_rhs(model, s.x), variational_rhs(model, s.x, s.y))


def hamiltonicity_defect(model, s, rhs=naive_union_rhs, step=None):
    """
    Norm of the antisymmetric part of the Jacobian of ``(J+J)^{-1} f``.

    ``f`` is ``rhs`` viewed as a vector field on R^{4n}. A field is locally
    Hamiltonian for ``J+J`` exactly when that Jacobian is symmetric, so the
    return value is zero (up to finite-difference error) for Hamiltonian
    fields. The Jacobian uses central differences with step
    ``1e-5 * max(1, |s|)``.
    """
    d = model.dim
    z0 = np.concatenate([_vec(model, s.x), _vec(model, s.y)])
    if step is None:
        step = 1e-5 * max(1.0, float(np.linalg.norm(z0)))
    Jt = standard_j(model.n).T  # J^{-1}

    def g(z):
        out = rhs(model, VectorFormState(z[:d], z[d:]))
        return np.concatenate([Jt @ out.x, Jt @ out.y])

    D = np.empty((2 * d, 2 * d))
    for k in range(2 * d):
        e = np.zeros(2 * d)
        e[k] = step
        D[:, k] = (g(z0 + e) - g(z0 - e)) / (2 * step)
    return float(np.linalg.norm(0.5 * (D - D.T)))
