"""
The Poisson structure behind the two-system
===========================================

In coordinates ``(x, m)``, with ``m`` the upper triangle of ``M``, the
two-system is ``z' = Omega(z) grad E(z)`` for the extended energy ``E``.
``Omega`` is antisymmetric and satisfies the Jacobi identity. It is
degenerate: the Casimirs ``tr Phi^(2k)`` lie in its kernel, and its rank
drops further on special ``Phi``.

Run with ``python demos/05_poisson_structure.py``.
"""

import numpy as np

from twosystem import TwoState, bracket_rhs, harmonic, two_system_rhs
from twosystem.poisson import casimir_kernel_check, jacobi_residual, numerical_rank, omega_matrix
from twosystem.structure import upper_triangle

rng = np.random.default_rng(1)
for n in (1, 2):
    d = 2 * n
    x = rng.normal(size=d)
    B = rng.normal(size=(d, d))
    m = upper_triangle(B + B.T)
    omega = omega_matrix(x, m)
    print(f"n = {n}: Omega is {omega.shape[0]}x{omega.shape[0]}, rank {numerical_rank(omega)}, "
          f"|Omega + Omega^T| {np.max(np.abs(omega + omega.T)):.1e}, "
          f"Jacobi residual {jacobi_residual(x, m):.1e}, "
          f"|Omega grad C| {casimir_kernel_check(x, m):.1e}")
    print(f"        at m = 0 the rank drops to {numerical_rank(omega_matrix(x, np.zeros_like(m)))}")

# The bracket form reproduces the two-system vector field.
model = harmonic(2)
s = TwoState.from_moments(rng.normal(size=4), np.eye(4) + 0.1 * np.ones((4, 4)))
a, b = two_system_rhs(model, s), bracket_rhs(model, s)
print(f"\nbracket vs direct right-hand side: |dx| {np.max(np.abs(a.x - b.x)):.1e}, "
      f"|dPhi| {np.max(np.abs(a.phi - b.phi)):.1e}")
