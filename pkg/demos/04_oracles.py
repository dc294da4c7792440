"""
Integrable cases with closed-form answers
=========================================

Four situations where the two-system is solved exactly, each compared
against the adaptive integrator:

* quadratic ``H``: ``x`` moves linearly and ``Phi`` is conjugated by a
  fixed matrix exponential;
* ``Phi(0) = 0``: ``Phi`` stays zero and ``x`` follows the base system;
* a stationary point with vanishing third derivatives: ``x`` stays put;
* a Hamiltonian of the action alone, ``H = H(I)``.

Run with ``python demos/04_oracles.py``.
"""

import numpy as np

from twosystem import IntegratorConfig, PolynomialHamiltonian, TwoState, integrate, quartic
from twosystem.oracles import (
    ActionAngleModel,
    QuadraticModel,
    action_angle_closed_form,
    action_angle_hamiltonian,
    beta_growth,
    quadratic_closed_form,
    stationary_point_solution,
)

cfg = IntegratorConfig(t_end=5.0, rtol=1e-12, atol=1e-14)

# Quadratic: H = x^T S x / 2 + b^T x with S positive definite.
S = np.array([[2.0, 0.3, 0.0, 0.1], [0.3, 1.0, 0.2, 0.0],
              [0.0, 0.2, 1.5, 0.4], [0.1, 0.0, 0.4, 1.2]])
qm = QuadraticModel(S, b=np.array([0.1, -0.2, 0.0, 0.3]))
s0 = TwoState.from_moments([0.5, -0.3, 0.2, 0.1], np.diag([1.0, 0.5, -0.2, 0.3]))
num = integrate(qm.to_polynomial(), s0, "two", cfg).states[-1]
ref = quadratic_closed_form(qm, s0.x, s0.phi, 5.0)
print(f"quadratic: |x - exact| {np.max(np.abs(num.x - ref.x)):.1e}, "
      f"|Phi - exact| {np.max(np.abs(num.phi - ref.phi)):.1e}")

# Phi(0) = 0 on the quartic oscillator.
model = quartic(0.1)
two = integrate(model, TwoState([1.0, 0.0], np.zeros((2, 2))), "two", cfg)
base = integrate(model, np.array([1.0, 0.0]), "base", cfg)
print(f"zero Phi: max |Phi| {np.max(np.abs(two.states[-1].phi)):.1e}, "
      f"|x - base| {np.max(np.abs(two.x[-1] - base.x[-1])):.1e}")

# Stationary point: H = (q^2 + p^2)/2 + q^4 p^4 at the origin.
flat = PolynomialHamiltonian(1, [(0.5, (2, 0)), (0.5, (0, 2)), (1.0, (4, 4))])
s0 = TwoState.from_moments([0.0, 0.0], [[1.0, 0.2], [0.2, 0.4]])
num = integrate(flat, s0, "two", cfg).states[-1]
ref = stationary_point_solution(flat, s0.x, s0.phi, 5.0)
print(f"stationary: |x| {np.max(np.abs(num.x)):.1e}, |Phi - exact| {np.max(np.abs(num.phi - ref.phi)):.1e}")

# Action-angle: H = I + I^2/2 + I^3/6. The closed form lives in
# (I, theta, alpha, beta, gamma); the direct run uses coordinates (theta, I)
# with alpha the I-I moment. Its off-diagonal moment grows linearly.
am = ActionAngleModel.from_polynomial([0.0, 1.0, 0.5, 1 / 6])
init = np.array([0.8, 0.0, 0.3, 0.1, 0.2])
print(f"action-angle closed form at t = 5: {np.round(action_angle_closed_form(am, init, 5.0), 5)}")
I0, th0, a0, b0, g0 = init
times = np.linspace(0.0, 5.0, 51)
direct = integrate(action_angle_hamiltonian(am), TwoState.from_moments([th0, I0], [[g0, b0], [b0, a0]]),
                   "two", cfg, sample_times=times)
growth = beta_growth(times, direct.moments()[:, 0, 1])
print(f"direct run: beta looks {growth['label']}, slope {growth['linear_slope']:.6f}, "
      f"H''(I0) alpha0 = {am.d2H(I0) * a0:.6f}")
