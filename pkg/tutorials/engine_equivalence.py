"""
Operator series and Lie series agree term by term
=================================================

The two engines share no code past the problem definition: one works with
commutators of matrices, the other with Poisson brackets of phase-space
functions.  Their generators and energy shifts coincide on random problems.
"""
import numpy as np

from vvhori import classical, oracle, vvp
from vvhori.verification import random_problem, run_suite

rng = np.random.default_rng(7)
p = random_problem(rng, n=5, max_order=4)
print("e0 =", p.e0.round(3), " zero_shift =", p.zero_shift)

q = vvp.vvp_expand(p)
c = classical.hori_expand(p)
for n in range(1, p.max_order + 1):
    dw = np.abs(c.w_star_series[n - 1].coeff - q.w(n)).max()
    dk = np.abs(c.normal_form[n - 1] - q.k_diagonals()[n - 1]).max()
    print(f"order {n}: |W*_n - W_n| = {dw:.1e}   |normal form - K_n| = {dk:.1e}")

# both against exact diagonalization
eps = 0.05
exact = oracle.exact_spectrum(p, eps)
m = oracle.match_eigenpairs(vvp.energies(q, eps), vvp.eigenvectors(q, eps), exact)
print("energy errors:", m.energy_errors)
print("eigenvector errors:", m.vector_errors)
r = vvp.residuals(q, eps)
print(f"conjugation residual {r.conjugation:.2e}, [H0, K] {r.commutator_h0_k:.1e}")

# the whole property suite, as run by `vvhori verify`
for res in run_suite(p, seed=0, cases=5):
    print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.worst:.2e}")
