"""
Two-system of a Hamiltonian system: the coupled flow of ``x`` and
``Phi in sp(2n)`` combining a Hamiltonian system with its system in
variations, its vector/multivector/Poisson formulations, conserved
quantities, and closed-form integrable cases.
"""

from .dynamics import (
    MultiVectorState,
    TwoState,
    VectorFormState,
    base_rhs,
    hamiltonicity_defect,
    lax_matrix,
    multivector_rhs,
    naive_union_rhs,
    two_system_rhs,
    variational_rhs,
    vector_form_rhs,
)
from .integrate import IntegratorConfig, Trajectory, integrate, invariant_report
from .model import (
    BlackBoxHamiltonian,
    PolynomialHamiltonian,
    eval_h,
    grad_h,
    harmonic,
    hess_h,
    quartic,
    standard_j,
    third_contract,
)
from .poisson import (
    bracket_rhs,
    casimir_kernel_check,
    casimirs,
    extended_energy,
    omega_matrix,
)
from .structure import (
    Signature,
    compose,
    decompose_signature,
    signature_of,
    sp_residual,
    split_sym_antisym,
)

__version__ = "0.1.0"
