import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import SX, SY, SZ, two_level
from vvhori import oracle
from vvhori.classical import (
    NegativeAction,
    PhaseSpaceState,
    QuadraticObservable,
    angle_average,
    canonical_map,
    evaluate,
    from_action_angle,
    hori_expand,
    homological_residual,
    poisson_bracket,
    random_state,
    resonance_scan,
    solve_homological_classical,
    to_action_angle,
)
from vvhori.core import DegenerateSpectrum, HermitianOperator, PerturbationProblem, commutator, validate_problem
from vvhori.verification import random_hermitian, random_problem
from vvhori.vvp import eigenvectors, energies, vvp_expand

seeds = st.integers(0, 2**32 - 1)


# -- coordinates

def test_action_angle_examples():
    theta, action = to_action_angle([math.sqrt(2)], [0.0])
    np.testing.assert_allclose(theta, [0.0])
    np.testing.assert_allclose(action, [1.0])
    theta, action = to_action_angle([0.0], [-math.sqrt(2)])
    np.testing.assert_allclose(theta, [math.pi / 2])
    np.testing.assert_allclose(action, [1.0])
    theta, action = to_action_angle([0.0], [0.0])
    assert theta[0] == 0.0 and action[0] == 0.0


def test_negative_action():
    with pytest.raises(NegativeAction):
        from_action_angle([0.0], [-1.0])


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 6))
def test_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    q, p = rng.normal(size=n), rng.normal(size=n)
    theta, action = to_action_angle(q, p)
    np.testing.assert_allclose(action, 0.5 * (q * q + p * p), rtol=0, atol=1e-14)
    q2, p2 = from_action_angle(theta, action)
    np.testing.assert_allclose(q2, q, atol=1e-13)
    np.testing.assert_allclose(p2, p, atol=1e-13)


def test_total_action_is_norm(rng):
    lam = rng.normal(size=4) + 1j * rng.normal(size=4)
    lam /= np.linalg.norm(lam)
    s = PhaseSpaceState.from_amplitudes(lam)
    assert s.total_action == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(s.amplitudes, lam, atol=1e-14)


def test_canonical_pairs(rng):
    n, h = 3, 1e-5
    for _ in range(5):
        s = random_state(n, rng, normalized=False, min_action=0.1)
        q, p = s.cartesian

        def angle(k):
            base = s.theta[k]
            return lambda a, b: (to_action_angle(a, b)[0][k] - base + math.pi) % (2 * math.pi) - math.pi

        def act(l):
            return lambda a, b: 0.5 * (a[l] ** 2 + b[l] ** 2)

        for k in range(n):
            for l in range(n):
                val = oracle.fd_bracket(angle(k), act(l), q, p, h)
                assert abs(val - (k == l)) <= 1e-6


# -- observables

def test_evaluate_examples(rng):
    e0 = np.array([0.5, 1.5, 4.0])
    s = random_state(3, rng)
    assert evaluate(QuadraticObservable.actions(e0), s) == pytest.approx(np.dot(e0, s.action), abs=1e-14)
    half = PhaseSpaceState([0.0, 0.0], [0.5, 0.5])
    assert evaluate(QuadraticObservable(SX), half) == pytest.approx(1.0, abs=1e-15)
    assert evaluate(QuadraticObservable(np.eye(3)), s) == pytest.approx(1.0, abs=1e-14)


def test_evaluate_is_expectation(rng):
    g = random_hermitian(4, rng)
    f = QuadraticObservable(g)
    for _ in range(20):
        s = random_state(4, rng)
        psi = s.amplitudes
        assert evaluate(f, s) == pytest.approx((psi.conj() @ g @ psi).real, abs=1e-13)
        a = np.sqrt(s.action) * np.exp(1j * s.theta)
        assert abs((a @ g @ a.conj()).imag) <= 1e-12


def test_non_hermitian_observable():
    with pytest.raises(ValueError):
        QuadraticObservable([[0, 1], [0, 0]])


def test_bracket_examples():
    f = QuadraticObservable(SX)
    np.testing.assert_allclose(poisson_bracket(f, f).coeff, 0)
    b = poisson_bracket(f, QuadraticObservable(SY))
    np.testing.assert_allclose(b.coeff, 2 * SZ)
    assert evaluate(b, PhaseSpaceState([0.0, 0.0], [1.0, 0.0])) == pytest.approx(2.0)


def test_bracket_with_h0(rng):
    e = np.array([1.0, 2.0, 3.5])
    g = random_hermitian(3, rng)
    np.fill_diagonal(g, 0)
    b = poisson_bracket(QuadraticObservable.actions(e), QuadraticObservable(g)).coeff
    np.testing.assert_allclose(b, -1j * (e[:, None] - e[None, :]) * g, atol=1e-14)
    np.testing.assert_allclose(np.diag(b), 0)


def test_bracket_vs_commutator_and_fd(rng):
    for _ in range(30):
        n = int(rng.integers(2, 6))
        fc, gc = random_hermitian(n, rng), random_hermitian(n, rng)
        b = poisson_bracket(QuadraticObservable(fc), QuadraticObservable(gc))
        s = random_state(n, rng, min_action=0.05)
        psi = s.amplitudes
        assert abs(b(s) - (-1j * psi.conj() @ commutator(fc, gc) @ psi).real) <= 1e-10
        assert abs(b(s) - oracle.fd_poisson_bracket(QuadraticObservable(fc), QuadraticObservable(gc), s)) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 6))
def test_jacobi_identity(seed, n):
    rng = np.random.default_rng(seed)
    f, g, h = (QuadraticObservable(random_hermitian(n, rng)) for _ in range(3))
    pb = poisson_bracket
    jac = pb(f, pb(g, h)) + pb(g, pb(h, f)) + pb(h, pb(f, g))
    assert np.abs(jac.coeff).max() <= 1e-12


# -- averaging

def test_angle_average_examples():
    np.testing.assert_array_equal(angle_average(QuadraticObservable(SX)).coeff, 0)
    avg = angle_average(QuadraticObservable([[1, 2], [2, 4]]))
    np.testing.assert_array_equal(avg.coeff, np.diag([1, 4]))
    f = QuadraticObservable(SZ)
    action = np.array([0.3, 0.7])
    assert oracle.torus_average(f, action, points=64) == pytest.approx(-0.4, abs=1e-10)
    assert evaluate(angle_average(f), PhaseSpaceState([1.0, 2.0], action)) == pytest.approx(-0.4, abs=1e-14)


def test_angle_average_matches_quadratures(rng):
    e0 = np.array([0.7, 1.9, 3.2])
    f = QuadraticObservable(random_hermitian(3, rng))
    for _ in range(5):
        s = random_state(3, rng)
        exact = evaluate(angle_average(f), s)
        assert oracle.torus_average(f, s.action, points=16) == pytest.approx(exact, abs=1e-10)
        assert oracle.time_average(f, s, e0, horizon=1e4, samples=200_000) == pytest.approx(exact, abs=1e-3)


def test_secular_elimination(rng):
    f = QuadraticObservable(random_hermitian(4, rng))
    assert np.all(angle_average(f - angle_average(f)).coeff == 0)


# -- classical homological equation and Hori recursion

def test_classical_homological_examples():
    avg, w = solve_homological_classical(QuadraticObservable(SX), [1.0, 2.0])
    np.testing.assert_allclose(avg.coeff, 0)
    np.testing.assert_allclose(w.coeff, -SY)
    d = QuadraticObservable(np.diag([0.4, -1.0]))
    avg, w = solve_homological_classical(d, [1.0, 2.0])
    np.testing.assert_allclose(w.coeff, 0)
    np.testing.assert_allclose(avg.coeff, d.coeff)
    _, w = solve_homological_classical(QuadraticObservable(SX), [2.0, 1.0])
    np.testing.assert_allclose(w.coeff, SY)


def test_classical_homological_identity(rng):
    e0 = np.array([0.5, 1.7, -2.2, 3.0])
    psi = QuadraticObservable(random_hermitian(4, rng))
    avg, w = solve_homological_classical(psi, e0)
    lhs = poisson_bracket(w, QuadraticObservable.actions(e0))
    np.testing.assert_allclose(lhs.coeff, (psi - avg).coeff, atol=1e-14)


def test_classical_homological_rejects_zero_frequency():
    with pytest.raises(DegenerateSpectrum):
        solve_homological_classical(QuadraticObservable(SX), [0.0, 1.0])


def test_hori_two_level():
    sol = hori_expand(two_level())
    np.testing.assert_allclose(sol.energies(0.1), [0.99, 2.01], atol=1e-15)
    np.testing.assert_allclose(sol.w_star_series[0].coeff, -SY, atol=1e-15)
    np.testing.assert_allclose(sol.normal_form, [[0, 0], [-1, 1]], atol=1e-14)


def test_hori_unperturbed_and_diagonal():
    sol = hori_expand(validate_problem(PerturbationProblem(e0=[1.0, 3.0], max_order=2)))
    assert all(np.all(w.coeff == 0) for w in sol.w_star_series)
    np.testing.assert_array_equal(sol.hamiltonian_star(0.3).coeff, np.diag([1.0, 3.0]))
    p = validate_problem(PerturbationProblem(
        e0=[1.0, 3.0], perturbations={1: HermitianOperator(np.diag([0.2, 0.5]))}, max_order=1))
    sol = hori_expand(p)
    assert np.all(sol.w_star_series[0].coeff == 0)
    np.testing.assert_allclose(sol.energies(0.1), [1.02, 3.05], atol=1e-15)


def test_hori_psi_matches_closed_forms(rng):
    # the first three classical Psi functions written with brackets
    p = random_problem(rng, n=3, max_order=3, n_perts=3)
    sol = hori_expand(p)
    pb = poisson_bracket
    h0 = QuadraticObservable.actions(sol.frequencies)
    v1, v2, v3 = (QuadraticObservable(p.v(m)) for m in (1, 2, 3))
    w1, w2 = sol.w_star_series[:2]
    psi2 = v2 + pb(v1, w1) + 0.5 * pb(pb(h0, w1), w1)
    psi3 = (v3 + pb(v2, w1) + pb(v1, w2) + 0.5 * pb(pb(v1, w1), w1)
            + 0.5 * (pb(pb(h0, w1), w2) + pb(pb(h0, w2), w1)) + (1 / 6) * pb(pb(pb(h0, w1), w1), w1))
    np.testing.assert_allclose(sol.psi_log[1].coeff, psi2.coeff, atol=1e-13)
    np.testing.assert_allclose(sol.psi_log[2].coeff, psi3.coeff, atol=1e-13)


def test_engine_equivalence(rng):
    for _ in range(15):
        p = random_problem(rng)
        q, c = vvp_expand(p), hori_expand(p)
        for n in range(1, p.max_order + 1):
            assert np.abs(c.w_star_series[n - 1].coeff - q.w(n)).max() <= 1e-10
        assert np.abs(c.normal_form - q.k_diagonals()).max() <= 1e-10
        np.testing.assert_allclose(c.energies(0.05), energies(q, 0.05), atol=1e-13)


def test_hori_residuals(rng):
    p = random_problem(rng, n=5, max_order=4)
    sol = hori_expand(p)
    states = [random_state(5, rng) for _ in range(100)]
    for m in range(1, 5):
        assert homological_residual(sol, m, states) <= 1e-10


def test_hori_zero_shift_problem():
    p = validate_problem(PerturbationProblem(e0=[0.0, 1.0], perturbations={1: HermitianOperator(SX)}, max_order=3))
    sol = hori_expand(p)
    np.testing.assert_array_equal(sol.frequencies, [1.0, 2.0])
    unshifted = hori_expand(validate_problem(p.with_shift(1.0)))
    np.testing.assert_allclose(sol.energies(0.1), unshifted.energies(0.1) - 1.0, atol=1e-15)
    np.testing.assert_allclose(sol.energies(0.1), energies(vvp_expand(p), 0.1), atol=1e-15)


def test_action_conservation(rng):
    p = random_problem(rng, n=4, max_order=3)
    u = eigenvectors(vvp_expand(p), 0.2)
    for _ in range(20):
        s = random_state(4, rng)
        assert abs(canonical_map(u, s).total_action - s.total_action) <= 1e-12


# -- resonances

def test_resonance_examples():
    scan = resonance_scan([1, 2, 3], 3)
    ks = [r.k for r in scan]
    assert (1, 1, -1) in ks and (-1, -1, 1) in ks
    assert all(r.order == 3 for r in scan if r.k in {(1, 1, -1), (-1, -1, 1)})
    assert not scan.mode_difference
    scan = resonance_scan([1, 2], 3)
    assert [r.k for r in scan] == [(2, -1), (-2, 1)]
    assert {r.order for r in scan} == {3}
    assert not scan.mode_difference
    assert len(resonance_scan([1, math.sqrt(2)], 6)) == 0


def test_resonance_brute_force(rng):
    # independent count by itertools over the full box
    import itertools
    e0 = [1.0, 2.0, 3.0]
    expected = {k for k in itertools.product(range(-4, 5), repeat=3)
                if 0 < sum(map(abs, k)) <= 4 and abs(np.dot(k, e0)) < 1e-9 * 3}
    assert {r.k for r in resonance_scan(e0, 4)} == expected


def test_resonance_kbound_and_order_check():
    assert {r.k for r in resonance_scan([1, 2], 3, k_bound=1)} == set()
    with pytest.raises(ValueError, match="minimum"):
        resonance_scan([1, 2], 1)


def test_mode_difference_only_when_degenerate(rng):
    for _ in range(20):
        p = random_problem(rng)
        assert not resonance_scan(p.e0, 2).mode_difference
    assert resonance_scan([1.0, 1.0, 2.0], 2).mode_difference
