"""
A two-level system, solved three ways
=====================================

The unperturbed levels are 1 and 2 and the coupling is eps * sigma_x.
The exact energies are (3 -+ sqrt(1 + 4 eps^2)) / 2, which makes this
the smallest problem with a closed-form check.
"""
import numpy as np

from vvhori import HermitianOperator, PerturbationProblem, validate_problem
from vvhori import classical, oracle, vvp

sx = np.array([[0, 1], [1, 0]])
p = validate_problem(PerturbationProblem(
    e0=[1.0, 2.0], perturbations={1: HermitianOperator(sx)}, max_order=4))

# operator engine: generators W_n and diagonal shifts K_n, order by order
sol = vvp.vvp_expand(p)
print("W_1 =\n", sol.w(1).round(12))
print("K_n diagonals (rows are orders 1..4):\n", sol.k_diagonals())

# odd orders vanish and the even ones follow the Taylor series of the closed form
eps = 0.1
exact = (3 + np.array([-1, 1]) * np.sqrt(1 + 4 * eps**2)) / 2
for m in range(5):
    e = vvp.energies(sol.truncated(m), eps)
    print(f"order {m}: {e}  error {np.abs(e - exact).max():.2e}")

# eigenvectors are the columns of exp(-i W(eps))
print("series eigenvectors:\n", vvp.eigenvectors(sol, eps).real.round(6))
print("exact eigenvectors:\n", oracle.exact_spectrum(p, eps).eigenvectors.real.round(6))

# the phase-space engine reproduces the same normal form
hori = classical.hori_expand(p)
print("normal form - K:", np.abs(hori.normal_form - sol.k_diagonals()).max())

# truncation error against eps: slope 2 for orders 0 and 1, 4 for orders 2 and 3
grid = np.geomspace(1e-1, 1e-3, 5)
for m in (1, 2, 3):
    errs = [np.abs(vvp.energies(sol.truncated(m), e) - oracle.exact_spectrum(p, e).eigenvalues).max()
            for e in grid]
    print(f"order {m}: log-log slope {np.polyfit(np.log(grid), np.log(errs), 1)[0]:.2f}")
