"""Operator engine: order-by-order unitary diagonalization of ``H0 + sum eps^m V_m``.

At each order the generator ``W_n`` and the diagonal shift ``K_n`` solve

    i [H0, W_n] = Psi_n - K_n,

where ``Psi_n`` collects everything at power ``n`` of the conjugated
Hamiltonian ``exp(iW) H exp(-iW)`` that does not involve ``W_n`` itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DegenerateSpectrum,
    DimensionMismatch,
    OperatorSeries,
    PerturbationProblem,
    commutator,
    lie_transform,
    max_norm,
)

__all__ = [
    "MissingLowerOrder",
    "VvpSolution",
    "Residuals",
    "pi_projection",
    "compute_psi",
    "solve_homological_operator",
    "vvp_expand",
    "energies",
    "unitary",
    "eigenvectors",
    "residuals",
    "fix_column_phases",
]


class MissingLowerOrder(ValueError):
    pass


def pi_projection(x) -> np.ndarray:
    """Diagonal part of ``x`` in the unperturbed eigenbasis."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"pi_projection needs a square matrix, got {x.shape}")
    return np.diag(np.diag(x))


def compute_psi(n: int, p: PerturbationProblem, w_partial: Sequence) -> np.ndarray:
    """Known part of the order-``n`` coefficient of the conjugated Hamiltonian.

    Parameters
    ----------
    n : int
        Order, ``n >= 1``.
    p : PerturbationProblem
        Validated problem.
    w_partial : sequence of arrays
        Generators ``W_1 ... W_{n-1}`` (extra entries are ignored).

    Returns
    -------
    ndarray
        ``Psi_n``: the eps**n coefficient of ``exp(iW) H exp(-iW)`` with
        ``W_n`` and all higher generators set to zero.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    if len(w_partial) < n - 1:
        raise MissingLowerOrder(f"Psi_{n} needs W_1..W_{n - 1}, got {len(w_partial)} generators")
    dim = p.dim
    w = OperatorSeries(
        [np.zeros((dim, dim), dtype=complex)] + [np.asarray(w_partial[k]) for k in range(n - 1)],
        truncation_order=n,
    )
    h = p.hamiltonian_series(order=n)
    return np.array(lie_transform(w, h, n)[n])


def solve_homological_operator(psi, e0) -> tuple[np.ndarray, np.ndarray]:
    """Split ``psi`` into its diagonal ``k`` and a zero-diagonal generator ``w``.

    ``w[j, k] = -i psi[j, k] / (E_j - E_k)`` for ``j != k``, the zero-diagonal
    solution of ``i [H0, w] = psi - k``.
    """
    psi = np.asarray(psi, dtype=complex)
    e0 = np.asarray(e0, dtype=float)
    if psi.shape != (e0.size, e0.size):
        raise DimensionMismatch(f"psi has shape {psi.shape}, expected {(e0.size, e0.size)}")
    gaps = e0[:, None] - e0[None, :]
    off = ~np.eye(e0.size, dtype=bool)
    if np.any(gaps[off] == 0.0):
        raise DegenerateSpectrum("degenerate unperturbed energies in homological equation")
    k = pi_projection(psi)
    w = np.zeros_like(psi)
    w[off] = -1j * psi[off] / gaps[off]
    return k, w


@dataclass(frozen=True, eq=False)
class VvpSolution:
    problem: PerturbationProblem
    w_series: OperatorSeries
    k_series: OperatorSeries
    psi_log: tuple

    @property
    def order(self) -> int:
        return self.w_series.truncation_order

    def w(self, n: int) -> np.ndarray:
        return self.w_series[n]

    def k(self, n: int) -> np.ndarray:
        return self.k_series[n]

    def k_diagonals(self) -> np.ndarray:
        """Real diagonals of ``K_1 ... K_M`` as an ``(M, N)`` array."""
        return np.array([np.diag(self.k_series[m]).real for m in range(1, self.order + 1)])

    def truncated(self, order: int) -> "VvpSolution":
        if order > self.order:
            raise ValueError(f"solution only has {self.order} orders")
        return VvpSolution(
            self.problem,
            self.w_series.truncate(order),
            self.k_series.truncate(order),
            self.psi_log[:order],
        )


def vvp_expand(p: PerturbationProblem) -> VvpSolution:
    """Run the operator recursion up to ``p.max_order``."""
    dim, order = p.dim, p.max_order
    zero = np.zeros((dim, dim), dtype=complex)
    ws, ks, psis = [], [], []
    for n in range(1, order + 1):
        psi = compute_psi(n, p, ws)
        k, w = solve_homological_operator(psi, p.e0)
        psis.append(psi)
        ks.append(k)
        ws.append(w)
    return VvpSolution(
        problem=p,
        w_series=OperatorSeries([zero] + ws, truncation_order=order),
        k_series=OperatorSeries([zero] + ks, truncation_order=order),
        psi_log=tuple(psis),
    )


def energies(sol: VvpSolution, eps: float) -> np.ndarray:
    """Truncated perturbed energies ``E_n^0 + sum_m eps^m (K_m)_nn``."""
    kdiag = np.diag(sol.k_series.evaluate(eps)).real
    return np.asarray(sol.problem.e0, dtype=float) + kdiag


def _exp_i_hermitian(w: np.ndarray) -> np.ndarray:
    # exp(i w) through the spectral decomposition keeps the result unitary to
    # machine precision for any size of w.
    w = 0.5 * (w + w.conj().T)
    lam, v = np.linalg.eigh(w)
    return (v * np.exp(1j * lam)) @ v.conj().T


def fix_column_phases(u: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and positive."""
    u = np.array(u, dtype=complex)
    idx = np.argmax(np.abs(u), axis=0)
    pivots = u[idx, np.arange(u.shape[1])]
    with np.errstate(invalid="ignore", divide="ignore"):
        phases = np.where(np.abs(pivots) > 0, pivots / np.abs(pivots), 1.0)
    return u / phases


def unitary(sol: VvpSolution, eps: float) -> np.ndarray:
    """``exp(i W(eps))`` with the generator series summed at ``eps``."""
    return _exp_i_hermitian(sol.w_series.evaluate(eps))


def eigenvectors(sol: VvpSolution, eps: float) -> np.ndarray:
    """Approximate eigenvectors of ``H(eps)`` as the columns of a unitary matrix.

    Since ``U H U^dagger`` is diagonal, the eigenvectors are the columns of
    ``U^dagger = exp(-i W(eps))``. Column ``n`` belongs to level ``n`` of ``e0``.
    """
    return fix_column_phases(unitary(sol, eps).conj().T)


@dataclass(frozen=True)
class Residuals:
    conjugation: float
    commutator_h0_k: float
    homological: tuple


def residuals(sol: VvpSolution, eps: float) -> Residuals:
    """Diagnose a solution at ``eps``.

    ``conjugation`` is ``|U H U^dagger - H0 - K(eps)|_max`` and scales as
    ``eps**(order + 1)``; ``commutator_h0_k`` is ``|[H0, K(eps)]|_max``;
    ``homological[n-1]`` is ``|i[H0, W_n] - Psi_n + K_n|_max``.
    """
    p = sol.problem
    h0 = np.diag(np.asarray(p.e0, dtype=complex))
    u = unitary(sol, eps)
    k = sol.k_series.evaluate(eps)
    conj = u @ p.hamiltonian(eps) @ u.conj().T - h0 - k
    homological = tuple(
        max_norm(1j * commutator(h0, sol.w(n)) - sol.psi_log[n - 1] + sol.k(n))
        for n in range(1, sol.order + 1)
    )
    return Residuals(max_norm(conj), max_norm(commutator(h0, k)), homological)
