"""
Hamilton's function and its derivatives.

Two flavours of model are provided. :class:`PolynomialHamiltonian` stores a
list of monomials and differentiates them term by term, so gradient, Hessian
and the third-derivative contraction are exact. :class:`BlackBoxHamiltonian`
wraps an arbitrary scalar callable and falls back to central differences.

Phase vectors are ordered ``(x_1..x_n, x_{n+1}..x_{2n})`` = (positions,
momenta), so ``(x_i, x_{i+n})`` are conjugate pairs and the symplectic matrix
is the block matrix returned by :func:`standard_j`.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "MonomialTerm",
    "HamiltonianModel",
    "PolynomialHamiltonian",
    "BlackBoxHamiltonian",
    "standard_j",
    "eval_h",
    "grad_h",
    "hess_h",
    "third_contract",
    "quartic",
    "harmonic",
    "load_polynomial",
    "format_polynomial",
]

_EPS = np.finfo(float).eps


@lru_cache(maxsize=None)
def standard_j(n):
    """
    Standard symplectic matrix ``[[0, I_n], [-I_n, 0]]`` of order ``2n``.

    The result is cached and read-only.

    >>> standard_j(1)
    array([[ 0.,  1.],
           [-1.,  0.]])
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    J.setflags(write=False)
    return J


@dataclass(frozen=True)
class MonomialTerm:
    """One term ``coeff * prod(x_k ** exponents[k])``."""

    coeff: float
    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coeff", float(self.coeff))


def _symmetry_tol(M):
    return 1e-9 * max(1.0, float(np.linalg.norm(M)))


def _check_symmetric(M):
    if np.linalg.norm(M - M.T) > _symmetry_tol(M):
        raise ValueError("moment matrix M must be symmetric")


class HamiltonianModel:
    """
    Base class. Subclasses implement ``value``, ``gradient``, ``hessian`` and
    ``third_contract``; everything here only validates dimensions.
    """

    n: int

    @property
    def dim(self):
        return 2 * self.n

    def _vec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"phase vector must have shape ({self.dim},), got {x.shape}"
            )
        return x

    def _mat(self, M):
        M = np.asarray(M, dtype=float)
        if M.shape != (self.dim, self.dim):
            raise ValueError(
                f"matrix must have shape ({self.dim}, {self.dim}), got {M.shape}"
            )
        return M

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def hessian(self, x):
        raise NotImplementedError

    def third_contract(self, x, M):
        raise NotImplementedError

    def jet(self, x, M):
        """
        ``(H'(x), H''(x), grad_x tr(H''(x) M))`` in one call.

        ``M`` must already be symmetric; it is not checked here. Subclasses
        may override this with a fused evaluation.
        """
        return self.gradient(x), self.hessian(x), self.third_contract(x, M)


class PolynomialHamiltonian(HamiltonianModel):
    """
    Polynomial Hamilton's function in ``2n`` variables.

    Derivative term lists are built once at construction time; evaluation is
    vectorised over terms with numpy.

    Parameters
    ----------
    n : int
        Degrees of freedom.
    terms : iterable of MonomialTerm or (coeff, exponents) pairs
        ``exponents`` must have length ``2n``.
    """

    def __init__(self, n, terms):
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        self.n = int(n)
        parsed = []
        for t in terms:
            if not isinstance(t, MonomialTerm):
                t = MonomialTerm(t[0], tuple(t[1]))
            if len(t.exponents) != 2 * self.n:
                raise ValueError(
                    f"term {t} has {len(t.exponents)} exponents, expected {2 * self.n}"
                )
            parsed.append(t)
        self.terms = tuple(parsed)

        d = self.dim
        if parsed:
            c = np.array([t.coeff for t in parsed])
            E = np.array([t.exponents for t in parsed], dtype=np.int64)
        else:
            c = np.zeros(0)
            E = np.zeros((0, d), dtype=np.int64)
        self._maxexp = int(E.max()) if E.size else 0
        self._exp_range = np.arange(self._maxexp + 1)[:, None]
        self._cols = np.arange(d)
        # sparse derivative tables: (flat output index, coefficient, exponents)
        self._tables = [(np.zeros(len(c), dtype=np.int64), c, E)]
        for _ in range(3):
            self._tables.append(self._differentiate(*self._tables[-1]))
        # jet(): orders 1-3 as one dense map from distinct monomial values
        idx = np.concatenate([t[0] + off for t, off
                              in zip(self._tables[1:], (0, d, d + d * d))])
        allc = np.concatenate([t[1] for t in self._tables[1:]])
        allE = np.concatenate([t[2] for t in self._tables[1:]])
        if len(allc):
            self._jet_monomials, inv = np.unique(allE, axis=0, return_inverse=True)
            inv = inv.ravel()
        else:
            self._jet_monomials, inv = np.zeros((0, d), dtype=np.int64), allE[:, 0]
        self._jet_matrix = np.zeros((d + d * d + d ** 3, len(self._jet_monomials)))
        np.add.at(self._jet_matrix, (idx, inv), allc)

    def _differentiate(self, idx, c, E):
        d = self.dim
        out_i, out_c, out_e = [], [], []
        for k in range(d):
            live = E[:, k] > 0
            ek = E[live].copy()
            out_c.append(c[live] * ek[:, k])
            ek[:, k] -= 1
            out_e.append(ek)
            out_i.append(idx[live] * d + k)
        return np.concatenate(out_i), np.concatenate(out_c), np.concatenate(out_e)

    def _sum_terms(self, table, x, size):
        idx, c, E = table
        powers = x ** self._exp_range
        vals = c * powers[E, self._cols].prod(axis=1)
        return np.bincount(idx, weights=vals, minlength=size)

    def _evaluate(self, order, x):
        out = self._sum_terms(self._tables[order], x, self.dim ** order)
        return out.reshape((self.dim,) * order) if order else out[0]

    def jet(self, x, M):
        x = self._vec(x)
        d = self.dim
        mono = (x ** self._exp_range)[self._jet_monomials, self._cols].prod(axis=1)
        out = self._jet_matrix @ mono
        g = out[:d]
        H2 = out[d:d + d * d].reshape(d, d)
        third = out[d + d * d:].reshape(d, d * d) @ np.ravel(M)
        return g, H2, third

    @property
    def degree(self):
        _, c, E = self._tables[0]
        live = c != 0
        return int(E[live].sum(axis=1).max()) if live.any() else 0

    def value(self, x):
        return float(self._evaluate(0, self._vec(x)))

    def gradient(self, x):
        return self._evaluate(1, self._vec(x))

    def hessian(self, x):
        return self._evaluate(2, self._vec(x))

    def third_derivative(self, x):
        """Full tensor ``H'''_{ijk}`` (symmetric in all indices)."""
        return self._evaluate(3, self._vec(x))

    def third_contract(self, x, M):
        M = self._mat(M)
        _check_symmetric(M)
        T = self.third_derivative(x)
        return np.einsum("kji,ij->k", T, M)

    def __repr__(self):
        return f"PolynomialHamiltonian(n={self.n}, terms={len(self.terms)})"


class BlackBoxHamiltonian(HamiltonianModel):
    """
    Hamilton's function given only as a scalar callable.

    Derivatives use central differences. When ``h_fd`` is ``None`` the step
    for derivative order ``k`` is ``eps**(1/(k+2)) * max(1, |x|)``, the usual
    roundoff/truncation balance for central differences; an explicit
    ``h_fd`` is used for every order.
    """

    def __init__(self, n, func, h_fd=None):
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        self.n = int(n)
        self.func = func
        self.h_fd = h_fd

    def _step(self, x, order):
        if self.h_fd is not None:
            return float(self.h_fd)
        return _EPS ** (1.0 / (order + 2)) * max(1.0, float(np.linalg.norm(x)))

    def value(self, x):
        return float(self.func(self._vec(x)))

    def gradient(self, x, h=None):
        x = self._vec(x)
        h = self._step(x, 1) if h is None else h
        g = np.empty(self.dim)
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            g[k] = (self.func(x + e) - self.func(x - e)) / (2 * h)
        return g

    def hessian(self, x, h=None):
        x = self._vec(x)
        h = self._step(x, 2) if h is None else h
        H = np.empty((self.dim, self.dim))
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            H[k] = (self.gradient(x + e, h) - self.gradient(x - e, h)) / (2 * h)
        return 0.5 * (H + H.T)

    def third_contract(self, x, M):
        x = self._vec(x)
        M = self._mat(M)
        _check_symmetric(M)
        h = self._step(x, 3)
        out = np.empty(self.dim)
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            hp = self.hessian(x + e, h)
            hm = self.hessian(x - e, h)
            out[k] = np.sum((hp - hm) * M) / (2 * h)
        return out


def eval_h(model, x):
    """Value of Hamilton's function at ``x``."""
    return model.value(x)


def grad_h(model, x):
    """Gradient ``H'(x)``."""
    return model.gradient(x)


def hess_h(model, x):
    """Hessian ``H''(x)``, a symmetric ``2n x 2n`` array."""
    return model.hessian(x)


def third_contract(model, x, M):
    """
    Gradient in ``x`` of ``tr(H''(x) M)`` for symmetric ``M``.

    Component ``k`` is ``sum_ij H'''_ijk(x) M_ij``. Raises ``ValueError`` if
    ``M`` is not symmetric.
    """
    return model.third_contract(x, M)


def quartic(epsilon):
    """``H(q, p) = (q**2 + p**2)/2 + epsilon * q**4 / 4`` with ``n = 1``."""
    return PolynomialHamiltonian(
        1, [(0.5, (2, 0)), (0.5, (0, 2)), (epsilon / 4.0, (4, 0))]
    )


def harmonic(n=1):
    """Isotropic oscillator ``|x|**2 / 2`` in ``2n`` variables."""
    terms = []
    for k in range(2 * n):
        e = [0] * (2 * n)
        e[k] = 2
        terms.append((0.5, tuple(e)))
    return PolynomialHamiltonian(n, terms)


def load_polynomial(source, n=None):
    """
    Read a polynomial model from a path or a text stream.

    One term per line: ``coeff e1 e2 ... e2n``; ``#`` starts a comment.
    ``n`` is inferred from the first term unless given.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            text = fh.read()
    else:
        text = source.read()
    terms = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            coeff = float(fields[0])
            exps = tuple(int(f) for f in fields[1:])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if len(exps) % 2 or not exps:
            raise ValueError(f"line {lineno}: expected an even number of exponents")
        terms.append((coeff, exps))
    if n is None:
        if not terms:
            raise ValueError("empty polynomial; pass n explicitly")
        n = len(terms[0][1]) // 2
    return PolynomialHamiltonian(n, terms)


def format_polynomial(model):
    buf = io.StringIO()
    for t in model.terms:
        buf.write(" ".join([repr(t.coeff)] + [str(e) for e in t.exponents]) + "\n")
    return buf.getvalue()
