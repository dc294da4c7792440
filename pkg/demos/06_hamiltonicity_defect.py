"""
Why the feedback term is needed
===============================

Putting a Hamiltonian system next to its system in variations, with no
coupling back into ``x``, gives a vector field on ``R^(4n)`` that is not
Hamiltonian for ``J + J``. The vector form of the two-system adds the
term ``J grad_x (y^T H'' y)/2`` to the ``x`` equation and is Hamiltonian.
The defect measured here is the antisymmetric part of the Jacobian of
``(J + J)^(-1) f``, which vanishes exactly for Hamiltonian fields.

Run with ``python demos/06_hamiltonicity_defect.py``.
"""

import numpy as np

from twosystem import VectorFormState, hamiltonicity_defect, harmonic, quartic, vector_form_rhs

rng = np.random.default_rng(2)
for name, model in (("quartic", quartic(0.1)), ("harmonic", harmonic(1))):
    for _ in range(3):
        s = VectorFormState(rng.normal(size=2), rng.normal(size=2))
        naive = hamiltonicity_defect(model, s)
        coupled = hamiltonicity_defect(model, s, rhs=vector_form_rhs)
        print(f"{name:8s} x={np.round(s.x, 2)} y={np.round(s.y, 2)}: "
              f"naive union {naive:.2e}, vector form {coupled:.2e}")
print("\nfor the harmonic oscillator H'' is constant, so the naive union is already Hamiltonian")
