"""Phase-space engine: expectation values as classical observables.

A state ``psi = sum_n sqrt(I_n) exp(-i theta_n) |n>`` is a point of a
2N-dimensional phase space, and every Hermitian matrix ``G`` defines the
real function

    f(theta, I) = sum_{n,m} sqrt(I_n I_m) G_mn exp(i (theta_m - theta_n)).

This class of functions is closed under the Poisson bracket, so the whole
Lie-series (Hori) recursion runs exactly on coefficient matrices.  Nothing
here calls into :mod:`vvhori.vvp`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DegenerateSpectrum,
    DimensionMismatch,
    NonHermitianInput,
    PerturbationProblem,
    hermiticity_error,
)

__all__ = [
    "NegativeAction",
    "PhaseSpaceState",
    "QuadraticObservable",
    "HoriSolution",
    "Resonance",
    "ResonanceScan",
    "to_action_angle",
    "from_action_angle",
    "evaluate",
    "evaluate_qp",
    "poisson_bracket",
    "angle_average",
    "solve_homological_classical",
    "hori_expand",
    "homological_residual",
    "canonical_map",
    "resonance_scan",
    "random_state",
]

TWO_PI = 2.0 * math.pi


class NegativeAction(ValueError):
    pass


def to_action_angle(q, p) -> tuple[np.ndarray, np.ndarray]:
    """Map ``(q, p)`` to ``(theta, I)``; the angle of an empty mode is 0."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    action = 0.5 * (q * q + p * p)
    theta = np.mod(np.arctan2(-p, q), TWO_PI)
    theta = np.where(action == 0.0, 0.0, theta)
    return theta, action


def from_action_angle(theta, action) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    action = np.asarray(action, dtype=float)
    if np.any(action < 0):
        raise NegativeAction("actions must be non-negative")
    r = np.sqrt(2.0 * action)
    return r * np.cos(theta), -r * np.sin(theta)


@dataclass(frozen=True, eq=False)
class PhaseSpaceState:
    """A point of phase space stored in action-angle form."""

    theta: np.ndarray
    action: np.ndarray

    def __post_init__(self):
        theta = np.mod(np.asarray(self.theta, dtype=float), TWO_PI)
        action = np.asarray(self.action, dtype=float)
        if theta.shape != action.shape or theta.ndim != 1:
            raise DimensionMismatch("theta and action must be 1-d arrays of equal length")
        if np.any(action < 0):
            raise NegativeAction("actions must be non-negative")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "action", action)

    @classmethod
    def from_cartesian(cls, q, p) -> "PhaseSpaceState":
        return cls(*to_action_angle(q, p))

    @classmethod
    def from_amplitudes(cls, lam) -> "PhaseSpaceState":
        """State with expansion coefficients ``lam_n = sqrt(I_n) exp(-i theta_n)``."""
        lam = np.asarray(lam, dtype=complex)
        return cls.from_cartesian(math.sqrt(2.0) * lam.real, math.sqrt(2.0) * lam.imag)

    @property
    def dim(self) -> int:
        return self.theta.size

    @property
    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        return from_action_angle(self.theta, self.action)

    @property
    def amplitudes(self) -> np.ndarray:
        """Quantum expansion coefficients of the state."""
        return np.sqrt(self.action) * np.exp(-1j * self.theta)

    @property
    def total_action(self) -> float:
        return float(np.sum(self.action))


def random_state(n: int, rng: np.random.Generator, normalized: bool = True,
                 min_action: float = 0.0) -> PhaseSpaceState:
    theta = rng.uniform(0.0, TWO_PI, n)
    action = rng.uniform(min_action, 1.0, n)
    if normalized:
        action = action / action.sum()
    return PhaseSpaceState(theta, action)


class QuadraticObservable:
    """Phase-space function defined by a Hermitian coefficient matrix."""

    __slots__ = ("_coeff",)

    def __init__(self, coeff, tol: float = 1e-10):
        g = np.asarray(coeff, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DimensionMismatch(f"coefficient must be square, got {g.shape}")
        if hermiticity_error(g) > tol:
            raise NonHermitianInput("observable coefficient must be Hermitian")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "_coeff", g)

    @classmethod
    def _wrap(cls, g) -> "QuadraticObservable":
        obj = object.__new__(cls)
        g = np.asarray(g, dtype=complex)
        g.setflags(write=False)
        object.__setattr__(obj, "_coeff", g)
        return obj

    @classmethod
    def zero(cls, n: int) -> "QuadraticObservable":
        return cls._wrap(np.zeros((n, n), dtype=complex))

    @classmethod
    def actions(cls, weights) -> "QuadraticObservable":
        """``sum_n weights[n] * I_n``."""
        return cls._wrap(np.diag(np.asarray(weights, dtype=complex)))

    def __setattr__(self, name, value):
        raise AttributeError("QuadraticObservable is immutable")

    @property
    def coeff(self) -> np.ndarray:
        return self._coeff

    @property
    def dim(self) -> int:
        return self._coeff.shape[0]

    def __add__(self, other):
        return QuadraticObservable._wrap(self._coeff + other.coeff)

    def __sub__(self, other):
        return QuadraticObservable._wrap(self._coeff - other.coeff)

    def __neg__(self):
        return QuadraticObservable._wrap(-self._coeff)

    def __mul__(self, s: float):
        return QuadraticObservable._wrap(s * self._coeff)

    __rmul__ = __mul__

    def __call__(self, state: PhaseSpaceState) -> float:
        return evaluate(self, state)

    def __repr__(self):
        return f"QuadraticObservable(dim={self.dim})"


def evaluate(f: QuadraticObservable, s: PhaseSpaceState) -> float:
    """Value of ``f`` at ``s`` in action-angle form."""
    if f.dim != s.dim:
        raise DimensionMismatch(f"observable dim {f.dim} vs state dim {s.dim}")
    a = np.sqrt(s.action) * np.exp(1j * s.theta)
    val = a @ f.coeff @ a.conj()
    return float(val.real)


def evaluate_qp(g, q, p) -> float:
    """Value of the observable with coefficient ``g`` at Cartesian ``(q, p)``.

    ``sum_kl g_kl / 2 * [(q_k q_l + p_k p_l) + i (q_k p_l - p_k q_l)]``.
    """
    g = np.asarray(g, dtype=complex)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    sym = np.outer(q, q) + np.outer(p, p)
    anti = np.outer(q, p) - np.outer(p, q)
    return float(np.sum(0.5 * g * (sym + 1j * anti)).real)


def poisson_bracket(f: QuadraticObservable, g: QuadraticObservable) -> QuadraticObservable:
    """Closed-form bracket ``{f, g}``: coefficient ``-i (FG - GF)``."""
    if f.dim != g.dim:
        raise DimensionMismatch(f"observable dims differ: {f.dim} vs {g.dim}")
    a, b = f.coeff, g.coeff
    return QuadraticObservable._wrap(-1j * (a @ b - b @ a))


def angle_average(f: QuadraticObservable) -> QuadraticObservable:
    """Average over the angle torus; only the ``sum_n G_nn I_n`` part survives."""
    return QuadraticObservable._wrap(np.diag(np.diag(f.coeff)))


def solve_homological_classical(psi: QuadraticObservable, e0) -> tuple[QuadraticObservable, QuadraticObservable]:
    """Solve ``{w, H0} = psi - <psi>`` with ``H0 = sum_n E_n I_n``.

    Each non-secular Fourier mode ``exp(i (theta_m - theta_n))`` of ``psi``
    is divided by ``i (E_m - E_n)``, the action of ``{., H0}`` on that mode.
    Only energy differences appear as divisors.

    Returns
    -------
    avg, w_star : QuadraticObservable
    """
    e0 = np.asarray(e0, dtype=float)
    n = e0.size
    if psi.dim != n:
        raise DimensionMismatch(f"psi dim {psi.dim} vs {n} energies")
    if np.any(e0 == 0.0):
        raise DegenerateSpectrum("classical frequencies must be nonzero")
    avg = angle_average(psi)
    w = np.zeros((n, n), dtype=complex)
    for m in range(n):
        for k in range(n):
            if m == k:
                continue
            divisor = e0[m] - e0[k]  # k . E for the mode e_m - e_k
            if divisor == 0.0:
                raise DegenerateSpectrum(f"vanishing divisor for mode ({m}, {k})")
            w[m, k] = psi.coeff[m, k] / (1j * divisor)
    return avg, QuadraticObservable._wrap(w)


def _bracket_series(fs: Sequence[QuadraticObservable], ws: Sequence[QuadraticObservable],
                    order: int) -> list[QuadraticObservable]:
    # {sum_i eps^i f_i, sum_j eps^j w_j}, truncated at `order`; ws[0] is zero.
    dim = fs[0].dim
    out = [QuadraticObservable.zero(dim) for _ in range(order + 1)]
    for i, f in enumerate(fs):
        for j in range(1, order + 1 - i):
            if j < len(ws):
                out[i + j] = out[i + j] + poisson_bracket(f, ws[j])
    return out


def _lie_series(h: Sequence[QuadraticObservable], ws: Sequence[QuadraticObservable],
                order: int) -> list[QuadraticObservable]:
    # sum_k 1/k! {., W}^k (h)
    total = list(h)
    term = list(h)
    for k in range(1, order + 1):
        term = [t * (1.0 / k) for t in _bracket_series(term, ws, order)]
        total = [a + b for a, b in zip(total, term)]
    return total


@dataclass(frozen=True, eq=False)
class HoriSolution:
    """Generators and Birkhoff normal form of a quasiharmonic Hamiltonian.

    ``normal_form[m - 1, n]`` is the eps**m correction to the frequency of
    mode ``n``.  ``frequencies`` are the (shifted) energies the engine used.
    """

    problem: PerturbationProblem
    frequencies: np.ndarray
    w_star_series: tuple
    normal_form: np.ndarray
    psi_log: tuple
    avg_log: tuple

    @property
    def order(self) -> int:
        return len(self.w_star_series)

    def energies(self, eps: float, order: int | None = None) -> np.ndarray:
        """Perturbed energies, truncated at ``order``, with the zero shift removed."""
        order = self.order if order is None else order
        corr = np.zeros(self.frequencies.size)
        for m in range(order, 0, -1):
            corr = (corr + self.normal_form[m - 1]) * eps
        return np.asarray(self.problem.e0, dtype=float) + corr

    def hamiltonian_star(self, eps: float) -> QuadraticObservable:
        """``H* = sum_n E_n I_n`` in the shifted frequencies."""
        shift = self.problem.zero_shift or 0.0
        return QuadraticObservable.actions(self.energies(eps) + shift)


def hori_expand(p: PerturbationProblem) -> HoriSolution:
    """Lie-series normalization of ``<psi|H|psi>`` to order ``p.max_order``."""
    freqs = p.shifted_e0
    if np.any(np.abs(freqs) < p.gap_tolerance):
        raise DegenerateSpectrum("a shifted energy vanishes; choose a zero_shift")
    n, order = p.dim, p.max_order
    h = [QuadraticObservable.actions(freqs)]
    h += [QuadraticObservable._wrap(p.v(m)) for m in range(1, order + 1)]
    ws = [QuadraticObservable.zero(n)]
    psis, avgs = [], []
    normal_form = np.zeros((order, n))
    for m in range(1, order + 1):
        # W_m is still absent from ws, so its only contribution {H0, W_m}
        # is exactly what the homological equation supplies.
        psi = _lie_series(h[: m + 1], ws, m)[m]
        avg, w = solve_homological_classical(psi, freqs)
        psis.append(psi)
        avgs.append(avg)
        ws.append(w)
        normal_form[m - 1] = np.diag(avg.coeff).real
    return HoriSolution(
        problem=p,
        frequencies=freqs,
        w_star_series=tuple(ws[1:]),
        normal_form=normal_form,
        psi_log=tuple(psis),
        avg_log=tuple(avgs),
    )


def homological_residual(sol: HoriSolution, m: int, states: Iterable[PhaseSpaceState]) -> float:
    """Worst ``|{W_m, H0} - Psi_m + <Psi_m>|`` over ``states``."""
    h0 = QuadraticObservable.actions(sol.frequencies)
    r = poisson_bracket(sol.w_star_series[m - 1], h0) - sol.psi_log[m - 1] + sol.avg_log[m - 1]
    return max((abs(evaluate(r, s)) for s in states), default=0.0)


def canonical_map(u, s: PhaseSpaceState) -> PhaseSpaceState:
    """Coordinates of ``s`` in the rotated basis ``{U|n>}``."""
    u = np.asarray(u, dtype=complex)
    return PhaseSpaceState.from_amplitudes(u.conj().T @ s.amplitudes)


@dataclass(frozen=True)
class Resonance:
    k: tuple
    order: int

    @property
    def mode_difference(self) -> bool:
        """True for ``k = e_m - e_n``, the only resonance visible to quadratic observables."""
        nz = sorted(x for x in self.k if x != 0)
        return nz == [-1, 1]


@dataclass(frozen=True)
class ResonanceScan:
    resonances: tuple
    max_order: int
    k_bound: int
    tol: float

    @property
    def mode_difference(self) -> bool:
        return any(r.mode_difference for r in self.resonances)

    def __len__(self):
        return len(self.resonances)

    def __iter__(self):
        return iter(self.resonances)


def _lattice(n: int, budget: int, bound: int):
    # integer vectors of length n with sum |k_i| <= budget and |k_i| <= bound
    if n == 0:
        yield ()
        return
    top = min(budget, bound)
    for first in range(-top, top + 1):
        for rest in _lattice(n - 1, budget - abs(first), bound):
            yield (first,) + rest


def resonance_scan(e0, max_order: int, k_bound: int | None = None,
                   tol: float | None = None) -> ResonanceScan:
    """Brute-force search for ``k . E = 0`` with ``0 < sum|k_n| <= max_order``."""
    if max_order < 2:
        raise ValueError("minimum resonance order is 2")
    e0 = np.asarray(e0, dtype=float)
    k_bound = max_order if k_bound is None else int(k_bound)
    if k_bound < 1:
        raise ValueError("k_bound must be >= 1")
    if tol is None:
        tol = 1e-9 * float(np.max(np.abs(e0)))
    found = []
    for k in _lattice(e0.size, max_order, k_bound):
        order = sum(abs(x) for x in k)
        if order == 0:
            continue
        if abs(float(np.dot(k, e0))) < tol:
            found.append(Resonance(k, order))
    found.sort(key=lambda r: (r.order, tuple(-x for x in r.k)))
    return ResonanceScan(tuple(found), max_order, k_bound, tol)
