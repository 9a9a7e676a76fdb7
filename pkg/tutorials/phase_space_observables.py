"""
Expectation values as phase-space functions
===========================================

A state with coefficients lam_n = sqrt(I_n) exp(-i theta_n) turns every
operator G into the function f(theta, I) = <psi|G|psi>.  Brackets of such
functions are again of that form, with coefficient -i [F, G].
"""
import numpy as np

from vvhori import oracle
from vvhori.classical import (
    PhaseSpaceState,
    QuadraticObservable,
    angle_average,
    evaluate,
    poisson_bracket,
    random_state,
)

rng = np.random.default_rng(1)

# coordinates: q = sqrt(2 I) cos(theta), p = -sqrt(2 I) sin(theta)
s = PhaseSpaceState.from_cartesian([np.sqrt(2), 0.0], [0.0, -np.sqrt(2)])
print("theta =", s.theta, " I =", s.action)

sx = QuadraticObservable([[0, 1], [1, 0]])
sy = QuadraticObservable([[0, -1j], [1j, 0]])
half = PhaseSpaceState([0.0, 0.0], [0.5, 0.5])
print("<sigma_x> at I = (1/2, 1/2):", evaluate(sx, half))

# closed-form bracket vs central differences in (q, p)
b = poisson_bracket(sx, sy)
print("{sigma_x, sigma_y} coefficient:\n", b.coeff.real)
s = PhaseSpaceState([0.3, 1.1], [1.0, 0.25])
print("closed form:", b(s), " finite differences:", oracle.fd_poisson_bracket(sx, sy, s))

# averaging over the angles keeps only the diagonal
g = QuadraticObservable([[1.0, 0.4 - 0.2j], [0.4 + 0.2j, -1.0]])
action = np.array([0.3, 0.7])
print("angle average:", evaluate(angle_average(g), PhaseSpaceState([0, 0], action)))
print("torus quadrature:", oracle.torus_average(g, action))
s = random_state(2, rng)
print("time average along the H0 flow:",
      oracle.time_average(g, s, [1.0, 2.0], horizon=1e4), "vs", evaluate(angle_average(g), s))
