"""Property checks shared by the ``verify`` command and the test-suite.

Each check returns the worst deviation it saw; :func:`run_suite` compares
those against fixed tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import classical, oracle, vvp
from .core import HermitianOperator, PerturbationProblem, commutator, max_norm, validate_problem

__all__ = [
    "PropertyResult",
    "random_hermitian",
    "random_problem",
    "second_order_oracle",
    "loglog_slope",
    "truncation_errors",
    "convergence_slopes",
    "check_problem",
    "check_random_algebra",
    "run_suite",
]


@dataclass(frozen=True)
class PropertyResult:
    name: str
    worst: float
    tol: float
    # "le": worst <= tol;  "ge": worst >= tol (used for slopes)
    sense: str = "le"

    @property
    def passed(self) -> bool:
        if math.isnan(self.worst):
            return False
        return self.worst <= self.tol if self.sense == "le" else self.worst >= self.tol


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_problem(rng: np.random.Generator, n: int | None = None, max_order: int | None = None,
                   ratio: float = 1.0, n_perts: int | None = None) -> PerturbationProblem:
    """Random well-gapped problem.

    Level spacings are drawn from [1, 2] and the spectrum is centred on 0;
    every ``V_m`` is rescaled so its spectral norm is ``ratio`` times the
    smallest spacing.
    """
    n = int(rng.integers(2, 7)) if n is None else n
    max_order = int(rng.integers(1, 5)) if max_order is None else max_order
    gaps = rng.uniform(1.0, 2.0, n - 1)
    e0 = np.concatenate([[0.0], np.cumsum(gaps)])
    e0 = e0 - e0.mean()
    rng.shuffle(e0)
    if n_perts is None:
        n_perts = int(rng.integers(1, max_order + 1)) if max_order >= 1 else 1
    min_gap = gaps.min() if n > 1 else 1.0
    perts = {}
    for m in range(1, n_perts + 1):
        v = random_hermitian(n, rng)
        norm = float(np.max(np.abs(np.linalg.eigvalsh(v))))
        perts[m] = HermitianOperator(v * (ratio * min_gap / norm))
    return validate_problem(PerturbationProblem(e0=e0, perturbations=perts, max_order=max_order))


def second_order_oracle(p: PerturbationProblem) -> np.ndarray:
    """Textbook second-order level shifts ``(V2)_nn + sum_m |V1_nm|^2 / (E_n - E_m)``."""
    v1, v2 = p.v(1), p.v(2)
    e = np.asarray(p.e0, dtype=float)
    out = np.diag(v2).real.copy()
    for a in range(e.size):
        for b in range(e.size):
            if a != b:
                out[a] += abs(v1[a, b]) ** 2 / (e[a] - e[b])
    return out


def loglog_slope(eps, err) -> float:
    """Least-squares slope of ``log err`` against ``log eps``."""
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.asarray(err, dtype=float))
    x = x - x.mean()
    return float(np.sum(x * (y - y.mean())) / np.sum(x * x))


def _worst(results: dict, name: str, value: float):
    results[name] = max(results.get(name, 0.0), float(value))


def check_problem(p: PerturbationProblem, rng: np.random.Generator, eps_values=(0.1, 0.01),
                  n_states: int = 100, results: dict | None = None) -> dict:
    """Run the per-problem invariants; returns ``{property: worst deviation}``."""
    results = {} if results is None else results
    n = p.dim
    sol = vvp.vvp_expand(p)
    hori = classical.hori_expand(p)
    h0 = np.diag(np.asarray(p.e0, dtype=complex))

    for m in range(1, p.max_order + 1):
        _worst(results, "vvp homological residual", max_norm(
            1j * commutator(h0, sol.w(m)) - sol.psi_log[m - 1] + sol.k(m)))
        _worst(results, "K_n diagonal", max_norm(sol.k(m) - np.diag(np.diag(sol.k(m)))))
        _worst(results, "W_n Hermitian, zero diagonal",
               max(max_norm(sol.w(m) - sol.w(m).conj().T), max_norm(np.diag(sol.w(m)))))
        _worst(results, "engine equivalence: W*_n vs W_n",
               max_norm(hori.w_star_series[m - 1].coeff - sol.w(m)))
        _worst(results, "engine equivalence: normal form vs K_n",
               max_norm(hori.normal_form[m - 1] - np.diag(sol.k(m)).real))

    states = [classical.random_state(n, rng) for _ in range(n_states)]
    for m in range(1, p.max_order + 1):
        _worst(results, "classical homological residual",
               classical.homological_residual(hori, m, states))

    if p.max_order >= 2:
        _worst(results, "second-order textbook shifts",
               max_norm(np.diag(sol.k(2)).real - second_order_oracle(p)))

    for eps in eps_values:
        r = vvp.residuals(sol, eps)
        _worst(results, "[H0, K(eps)]", r.commutator_h0_k)
        u = vvp.eigenvectors(sol, eps)
        _worst(results, "eigenvector unitarity", max_norm(u.conj().T @ u - np.eye(n)))
        ex = oracle.exact_spectrum(p, eps)
        h = p.hamiltonian(eps)
        _worst(results, "eigensolver reconstruction / |H|",
               max_norm(ex.reconstruct() - h) / max(max_norm(h), 1e-300))
        for s in states[:10]:
            s2 = classical.canonical_map(u, s)
            _worst(results, "total action conservation", abs(s2.total_action - s.total_action))

    # identity shift: generators and gaps must not move
    c = 3.0
    shifted = validate_problem(p.with_shift(c))
    sol_c = vvp.vvp_expand(shifted)
    dev = 0.0
    for m in range(1, p.max_order + 1):
        dev = max(dev, max_norm(sol_c.w(m) - sol.w(m)), max_norm(sol_c.k(m) - sol.k(m)))
    for eps in eps_values:
        e_a, e_b = vvp.energies(sol, eps), vvp.energies(sol_c, eps)
        dev = max(dev, max_norm(e_b - e_a - c))
        dev = max(dev, max_norm(vvp.eigenvectors(sol_c, eps) - vvp.eigenvectors(sol, eps)))
    _worst(results, "identity-shift inertness", dev)
    return results


def check_random_algebra(rng: np.random.Generator, n: int, results: dict | None = None,
                         n_states: int = 20) -> dict:
    """Bracket and projection laws on random matrices of size ``n``."""
    results = {} if results is None else results
    f = classical.QuadraticObservable(random_hermitian(n, rng))
    g = classical.QuadraticObservable(random_hermitian(n, rng))
    k = classical.QuadraticObservable(random_hermitian(n, rng))
    fg = classical.poisson_bracket(f, g)
    for _ in range(n_states):
        s = classical.random_state(n, rng, min_action=0.05)
        lam = s.amplitudes
        quantum = (-1j * (lam.conj() @ commutator(f.coeff, g.coeff) @ lam)).real
        _worst(results, "bracket vs -i<[F,G]>", abs(fg(s) - quantum))
        _worst(results, "bracket vs finite differences", abs(fg(s) - oracle.fd_poisson_bracket(f, g, s)))
    pb = classical.poisson_bracket
    jac = pb(f, pb(g, k)) + pb(g, pb(k, f)) + pb(k, pb(f, g))
    _worst(results, "Jacobi identity", max_norm(jac.coeff))

    e0 = np.sort(rng.uniform(-3, 3, n)) + np.arange(n)
    x = random_hermitian(n, rng) + 0.3j * rng.normal(size=(n, n))
    px = vvp.pi_projection(x)
    _worst(results, "pi idempotent", max_norm(vvp.pi_projection(px) - px))
    h0 = np.diag(e0.astype(complex))
    _worst(results, "pi([H0, X]) = 0", max_norm(vvp.pi_projection(commutator(h0, x))))
    return results


TOLERANCES = {
    "vvp homological residual": 1e-10,
    "classical homological residual": 1e-10,
    "K_n diagonal": 1e-10,
    "W_n Hermitian, zero diagonal": 1e-10,
    "engine equivalence: W*_n vs W_n": 1e-10,
    "engine equivalence: normal form vs K_n": 1e-10,
    "second-order textbook shifts": 1e-10,
    "[H0, K(eps)]": 1e-10,
    "eigenvector unitarity": 1e-12,
    "eigensolver reconstruction / |H|": 1e-11,
    "total action conservation": 1e-12,
    "identity-shift inertness": 1e-12,
    "bracket vs -i<[F,G]>": 1e-10,
    "bracket vs finite differences": 1e-6,
    "Jacobi identity": 1e-12,
    "pi idempotent": 1e-12,
    "pi([H0, X]) = 0": 1e-12,
}


EPS_GRID = (1e-1, 1e-2, 1e-3)


def truncation_errors(p: PerturbationProblem, orders=(1, 2, 3), eps_grid=EPS_GRID) -> dict:
    """``{M: array (len(eps_grid), N)}`` of |E_n(eps; M) - exact| per level."""
    sol = vvp.vvp_expand(p)
    out = {m: [] for m in orders}
    for e in eps_grid:
        ex = oracle.exact_spectrum(p, e)
        match = oracle.match_eigenpairs(vvp.energies(sol, e), vvp.eigenvectors(sol, e), ex)
        for m in orders:
            out[m].append(np.abs(vvp.energies(sol.truncated(m), e) - ex.eigenvalues[match.perm]))
    return {m: np.array(v) for m, v in out.items()}


def convergence_slopes(p: PerturbationProblem, orders=(1, 2, 3), eps_grid=EPS_GRID) -> dict:
    """Log-log slope of the worst-level truncation error for each order."""
    errs = truncation_errors(p, orders, eps_grid)
    return {m: loglog_slope(eps_grid, e.max(axis=1)) for m, e in errs.items()}


def _slopes(rng: np.random.Generator, cases: int) -> float:
    worst = math.inf
    for _ in range(cases):
        p = random_problem(rng, max_order=3)
        for order, slope in convergence_slopes(p).items():
            worst = min(worst, slope - (order + 1))
    return worst


def run_suite(problem: PerturbationProblem | None, seed: int = 0, cases: int = 20) -> list[PropertyResult]:
    """Check the given problem plus ``cases`` seeded random problems."""
    rng = np.random.default_rng(seed)
    worst: dict = {}
    if problem is not None:
        check_problem(problem, rng, results=worst)
        check_random_algebra(rng, problem.dim, results=worst)
    for _ in range(cases):
        p = random_problem(rng)
        check_problem(p, rng, results=worst)
        check_random_algebra(rng, p.dim, results=worst)
    out = [PropertyResult(name, worst[name], TOLERANCES[name]) for name in TOLERANCES if name in worst]
    if cases > 0:
        # slope minus the expected order + 1; must stay above -0.2
        out.append(PropertyResult("convergence slope - (M + 1)", _slopes(rng, cases), -0.2, "ge"))
    return out
