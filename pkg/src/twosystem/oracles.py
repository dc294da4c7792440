"""
Closed-form solutions of the integrable cases, used as ground truth for the
numerical integrators.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.linalg import expm

from .dynamics import TwoState, lax_matrix
from .integrate import IntegratorConfig, integrate
from .model import PolynomialHamiltonian, standard_j

__all__ = [
    "OraclePreconditionError",
    "QuadraticModel",
    "ActionAngleModel",
    "quadratic_closed_form",
    "conjugate_flow",
    "action_angle_rhs",
    "action_angle_closed_form",
    "action_angle_closed_form_rate",
    "action_angle_hamiltonian",
    "beta_growth",
    "zero_phi_solution",
    "stationary_point_solution",
    "check_stationary",
]


class OraclePreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticModel:
    """``H(x) = x^T S x / 2 + b^T x + c``."""

    S: np.ndarray
    b: np.ndarray | None = None
    c: float = 0.0

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        d = S.shape[0]
        if S.shape != (d, d) or d % 2:
            raise ValueError(f"S must be square of even order, got {S.shape}")
        if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, np.abs(S).max())):
            raise ValueError("S must be symmetric")
        b = np.zeros(d) if self.b is None else np.asarray(self.b, dtype=float)
        object.__setattr__(self, "S", 0.5 * (S + S.T))
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.S.shape[0] // 2

    def to_polynomial(self):
        d = self.S.shape[0]
        terms = [(self.c, (0,) * d)]
        for i in range(d):
            e = [0] * d
            e[i] = 1
            terms.append((self.b[i], tuple(e)))
            e = [0] * d
            e[i] = 2
            terms.append((0.5 * self.S[i, i], tuple(e)))
            for j in range(i + 1, d):
                e = [0] * d
                e[i] = e[j] = 1
                terms.append((self.S[i, j], tuple(e)))
        return PolynomialHamiltonian(self.n, terms)


def conjugate_flow(A, phi0, t):
    """``exp(tA) Phi0 exp(-tA)``, the solution of ``Phi' = [A, Phi]`` for constant ``A``."""
    E = expm(t * np.asarray(A, dtype=float))
    return E @ np.asarray(phi0, dtype=float) @ np.linalg.inv(E)


def quadratic_closed_form(qm, x0, phi0, t):
    """
    Exact two-system solution for a quadratic Hamiltonian at time ``t``.

    The ``x`` equation is ``x' = J(Sx + b)``, independent of ``Phi``; it is
    solved with the exponential of the ``(2n+1)``-dimensional augmented
    matrix so that a singular ``JS`` needs no special case. ``Phi`` follows
    the conjugation flow with the constant matrix ``A = S J``.
    """
    J = standard_j(qm.n)
    d = 2 * qm.n
    aug = np.zeros((d + 1, d + 1))
    aug[:d, :d] = J @ qm.S
    aug[:d, d] = J @ qm.b
    z = expm(t * aug) @ np.append(np.asarray(x0, dtype=float), 1.0)
    return TwoState(z[:d], conjugate_flow(qm.S @ J, phi0, t))


@dataclass(frozen=True)
class ActionAngleModel:
    """
    One degree of freedom in action-angle form, ``H = H(I)``.

    Holds the first three derivatives of ``H`` as callables.
    """

    dH: Callable[[float], float]
    d2H: Callable[[float], float]
    d3H: Callable[[float], float]
    coeffs: tuple | None = None

    @classmethod
    def from_polynomial(cls, coeffs):
        """``H(I) = sum coeffs[k] * I**k``."""
        c = np.asarray(coeffs, dtype=float)
        c1, c2, c3 = P.polyder(c, 1), P.polyder(c, 2), P.polyder(c, 3)
        return cls(
            lambda I: float(P.polyval(I, c1)),
            lambda I: float(P.polyval(I, c2)),
            lambda I: float(P.polyval(I, c3)),
            tuple(c),
        )


def action_angle_rhs(am, state):
    """
    Right-hand side of the action-angle system in the closed form's own
    variables ``(I, theta, alpha, beta, gamma)``::

        I' = 0, theta' = H'(I) + H'''(I) alpha, alpha' = 0,
        beta' = H''(I) beta, gamma' = 2 H''(I) beta
    """
    I, _, alpha, beta, _ = state
    h2 = am.d2H(I)
    return np.array([0.0, am.dH(I) + am.d3H(I) * alpha, 0.0, h2 * beta, 2 * h2 * beta])


def _rates(am, I0, alpha0):
    return am.dH(I0) + am.d3H(I0) * alpha0, am.d2H(I0)


def action_angle_closed_form(am, initial, t):
    """State ``(I, theta, alpha, beta, gamma)`` at time ``t``."""
    I0, th0, a0, b0, g0 = initial
    w1, w2 = _rates(am, I0, a0)
    grow = np.exp(w2 * t)
    return np.array([I0, th0 + w1 * t, a0, b0 * grow, 2 * b0 * (grow - 1) + g0])


def action_angle_closed_form_rate(am, initial, t):
    """Time derivative of :func:`action_angle_closed_form`, differentiated by hand."""
    I0, _, a0, b0, _ = initial
    w1, w2 = _rates(am, I0, a0)
    grow = np.exp(w2 * t)
    return np.array([0.0, w1, 0.0, b0 * w2 * grow, 2 * b0 * w2 * grow])


def action_angle_hamiltonian(am):
    """
    Polynomial model in phase coordinates ``(theta, I)`` for a polynomial
    action-angle model, so the full two-system can be integrated directly.
    """
    if am.coeffs is None:
        raise ValueError("direct integration needs a polynomial action-angle model")
    return PolynomialHamiltonian(1, [(c, (0, k)) for k, c in enumerate(am.coeffs)])


def beta_growth(times, beta):
    """
    Describe how an off-diagonal moment evolves.

    Returns the maximum residuals of a straight-line fit and of an
    exponential fit (line in ``log|beta|``), plus a label naming the better
    description. ``"constant"`` is reported when beta does not move.
    """
    times = np.asarray(times, dtype=float)
    beta = np.asarray(beta, dtype=float)
    scale = max(1.0, float(np.max(np.abs(beta))))
    if np.ptp(beta) <= 1e-12 * scale:
        return {"label": "constant", "linear_residual": 0.0, "exponential_residual": 0.0}
    lin = np.polyfit(times, beta, 1)
    lin_res = float(np.max(np.abs(np.polyval(lin, times) - beta)) / scale)
    if np.all(beta > 0) or np.all(beta < 0):
        sgn = np.sign(beta[0])
        ex = np.polyfit(times, np.log(np.abs(beta)), 1)
        exp_res = float(np.max(np.abs(sgn * np.exp(np.polyval(ex, times)) - beta)) / scale)
    else:
        exp_res = float("inf")
    label = "linear" if lin_res <= exp_res else "exponential"
    return {
        "label": label,
        "linear_residual": lin_res,
        "exponential_residual": exp_res,
        "linear_slope": float(lin[0]),
    }


def zero_phi_solution(model, x0, t, cfg=None):
    """
    Two-system solution from ``Phi(0) = 0``: the base trajectory with
    ``Phi`` identically zero. ``x`` is integrated numerically.
    """
    cfg = cfg or IntegratorConfig(t_end=t, rtol=1e-12, atol=1e-14)
    if cfg.t_end != t:
        cfg = replace(cfg, t_end=t)
    traj = integrate(model, np.asarray(x0, dtype=float), "base", cfg)
    d = model.dim
    return TwoState(traj.x[-1], np.zeros((d, d)))


def check_stationary(model, x0, tol=1e-10):
    """
    Raise :class:`OraclePreconditionError` unless ``H'(x0) = 0`` and all third
    derivatives of ``H`` vanish at ``x0`` (tested on a basis of symmetric
    matrices).
    """
    x0 = np.asarray(x0, dtype=float)
    d = model.dim
    g = model.gradient(x0)
    if np.max(np.abs(g)) > tol:
        raise OraclePreconditionError(
            f"x0 is not a stationary point: |H'(x0)|_max = {np.max(np.abs(g)):.3e}"
        )
    for i in range(d):
        for j in range(i, d):
            E = np.zeros((d, d))
            E[i, j] = E[j, i] = 1.0
            r = model.third_contract(x0, E)
            if np.max(np.abs(r)) > tol:
                raise OraclePreconditionError(
                    f"third derivatives do not vanish at x0 (basis ({i},{j}): "
                    f"{np.max(np.abs(r)):.3e})"
                )


def stationary_point_solution(model, x0, phi0, t):
    """``(x0, exp(tA) Phi0 exp(-tA))`` with ``A = A(x0)``; preconditions checked."""
    check_stationary(model, x0)
    x0 = np.asarray(x0, dtype=float)
    return TwoState(x0.copy(), conjugate_flow(lax_matrix(model, x0), phi0, t))
