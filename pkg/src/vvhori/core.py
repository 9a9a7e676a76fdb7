"""Shared data types, Hermitian-matrix helpers and truncated operator series.

The unperturbed eigenbasis is always the computational basis, so the
unperturbed Hamiltonian is carried around as its vector of energies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "PerturbationError",
    "DegenerateSpectrum",
    "NonHermitianInput",
    "DimensionMismatch",
    "HermitianOperator",
    "OperatorSeries",
    "PerturbationProblem",
    "validate_problem",
    "commutator",
    "lie_transform",
    "max_norm",
    "hermiticity_error",
]

HERMITICITY_TOL = 1e-12


class PerturbationError(ValueError):
    """Base class for invalid perturbation input."""


class DegenerateSpectrum(PerturbationError):
    pass


class NonHermitianInput(PerturbationError):
    pass


class DimensionMismatch(PerturbationError):
    pass


def max_norm(x) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


def hermiticity_error(x) -> float:
    """Max-norm of ``x - x^H`` relative to the max-norm of ``x``."""
    x = np.asarray(x)
    scale = max(max_norm(x), 1.0)
    return max_norm(x - x.conj().T) / scale


def _as_square(x, name="matrix") -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


class HermitianOperator:
    """An N x N complex matrix checked for Hermiticity on construction.

    Parameters
    ----------
    entries : array_like
        Square complex matrix.
    tol : float
        Relative Hermiticity tolerance (w.r.t. the max-norm of the entries).
    """

    __slots__ = ("_entries",)

    def __init__(self, entries, tol: float = HERMITICITY_TOL):
        a = _as_square(entries, "HermitianOperator")
        if a.shape[0] < 1:
            raise DimensionMismatch("HermitianOperator needs dim >= 1")
        err = hermiticity_error(a)
        if err > tol:
            raise NonHermitianInput(
                f"matrix is not Hermitian (relative deviation {err:.3e} > {tol:.1e})"
            )
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "_entries", a)

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOperator is immutable")

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries.copy()
        return self._entries.astype(dtype)

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


def commutator(a, b) -> np.ndarray:
    """Return ``a @ b - b @ a``."""
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot commute shapes {a.shape} and {b.shape}")
    return a @ b - b @ a


class OperatorSeries:
    """Truncated power series ``sum_m eps**m * c_m`` with matrix coefficients.

    Every operation keeps the result truncated at ``truncation_order``;
    when two series of different orders are combined the smaller order wins.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Sequence, truncation_order: int | None = None):
        mats = [_as_square(c, "series coefficient") for c in coeffs]
        if not mats:
            raise ValueError("OperatorSeries needs at least one coefficient")
        dim = mats[0].shape[0]
        if any(m.shape != (dim, dim) for m in mats):
            raise DimensionMismatch("all series coefficients must share one dimension")
        order = len(mats) - 1 if truncation_order is None else int(truncation_order)
        if order < 0:
            raise ValueError("truncation_order must be >= 0")
        mats = mats[: order + 1]
        mats += [np.zeros((dim, dim), dtype=complex)] * (order + 1 - len(mats))
        stack = np.array(mats, dtype=complex)
        stack.setflags(write=False)
        object.__setattr__(self, "_coeffs", stack)

    def __setattr__(self, name, value):
        raise AttributeError("OperatorSeries is immutable")

    @classmethod
    def zeros(cls, dim: int, order: int) -> "OperatorSeries":
        return cls(np.zeros((order + 1, dim, dim), dtype=complex))

    @classmethod
    def constant(cls, c, order: int) -> "OperatorSeries":
        c = _as_square(c)
        return cls([c], truncation_order=order)

    @property
    def coeffs(self) -> np.ndarray:
        """Read-only array of shape ``(order + 1, N, N)``."""
        return self._coeffs

    @property
    def truncation_order(self) -> int:
        return self._coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self._coeffs.shape[1]

    def __getitem__(self, m: int) -> np.ndarray:
        return self._coeffs[m]

    def __len__(self):
        return self._coeffs.shape[0]

    def _check(self, other: "OperatorSeries") -> int:
        if not isinstance(other, OperatorSeries):
            raise TypeError("expected an OperatorSeries")
        if other.dim != self.dim:
            raise DimensionMismatch(f"series dims differ: {self.dim} vs {other.dim}")
        return min(self.truncation_order, other.truncation_order)

    def truncate(self, order: int) -> "OperatorSeries":
        return OperatorSeries(self._coeffs[: order + 1], truncation_order=order)

    def __add__(self, other: "OperatorSeries") -> "OperatorSeries":
        m = self._check(other)
        return OperatorSeries(self._coeffs[: m + 1] + other._coeffs[: m + 1])

    def __sub__(self, other: "OperatorSeries") -> "OperatorSeries":
        m = self._check(other)
        return OperatorSeries(self._coeffs[: m + 1] - other._coeffs[: m + 1])

    def __neg__(self) -> "OperatorSeries":
        return OperatorSeries(-self._coeffs)

    def scale(self, s: complex) -> "OperatorSeries":
        return OperatorSeries(s * self._coeffs)

    def __mul__(self, s):
        if isinstance(s, OperatorSeries):
            return self @ s
        return self.scale(s)

    __rmul__ = scale

    def __matmul__(self, other: "OperatorSeries") -> "OperatorSeries":
        """Cauchy product, truncated."""
        m = self._check(other)
        out = np.zeros((m + 1, self.dim, self.dim), dtype=complex)
        for i in range(m + 1):
            for j in range(m + 1 - i):
                out[i + j] += self._coeffs[i] @ other._coeffs[j]
        return OperatorSeries(out)

    def commutator(self, other: "OperatorSeries") -> "OperatorSeries":
        return (self @ other) - (other @ self)

    def min_order(self, tol: float = 0.0) -> int | None:
        """Lowest power with a coefficient above ``tol``; None for the zero series."""
        for m, c in enumerate(self._coeffs):
            if max_norm(c) > tol:
                return m
        return None

    def evaluate(self, eps: float) -> np.ndarray:
        """Sum the truncated series at a numeric ``eps`` (Horner)."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c in self._coeffs[::-1]:
            out = out * eps + c
        return out

    def __repr__(self):
        return f"OperatorSeries(dim={self.dim}, truncation_order={self.truncation_order})"


def lie_transform(w: OperatorSeries, x: OperatorSeries, order: int) -> OperatorSeries:
    """Conjugate a series by ``exp(i w)``: ``sum_k i**k / k! * [w, .]**k (x)``.

    ``w`` must have a vanishing constant term, so every application of the
    commutator raises the lowest power by one and the sum stops at
    ``k = order``.
    """
    if w.dim != x.dim:
        raise DimensionMismatch(f"series dims differ: {w.dim} vs {x.dim}")
    if max_norm(w[0]) != 0.0:
        raise ValueError("generator series must have a zero constant term")
    w = OperatorSeries(w.coeffs, truncation_order=order)
    x = OperatorSeries(x.coeffs, truncation_order=order)
    total = x
    term = x
    for k in range(1, order + 1):
        term = w.commutator(term).scale(1j / k)
        total = total + term
    return total


@dataclass(frozen=True, eq=False)
class PerturbationProblem:
    """Unperturbed energies plus a finite set of perturbation matrices.

    ``perturbations`` maps the power of eps to the matrix multiplying it.
    ``zero_shift`` is the constant added to the energies before the
    classical engine sees them; ``None`` lets :func:`validate_problem`
    choose one.
    """

    e0: np.ndarray
    perturbations: Mapping[int, HermitianOperator] = field(default_factory=dict)
    max_order: int = 2
    gap_tol: float | None = None
    herm_tol: float = HERMITICITY_TOL
    zero_shift: float | None = None

    @property
    def dim(self) -> int:
        return len(self.e0)

    @property
    def gap_tolerance(self) -> float:
        if self.gap_tol is not None:
            return self.gap_tol
        return 1e-9 * max(1.0, float(np.max(np.abs(self.e0))))

    @property
    def shifted_e0(self) -> np.ndarray:
        return np.asarray(self.e0, dtype=float) + (self.zero_shift or 0.0)

    def v(self, m: int) -> np.ndarray:
        """Perturbation matrix at power ``m`` (zero when absent)."""
        op = self.perturbations.get(m)
        if op is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return op.entries

    def hamiltonian_series(self, order: int | None = None, shift: float = 0.0) -> OperatorSeries:
        order = self.max_order if order is None else order
        coeffs = [np.diag(np.asarray(self.e0, dtype=complex) + shift)]
        coeffs += [self.v(m) for m in range(1, order + 1)]
        return OperatorSeries(coeffs, truncation_order=order)

    def hamiltonian(self, eps: float) -> np.ndarray:
        """Full matrix ``diag(e0) + sum_m eps**m V_m`` over all stored orders."""
        h = np.diag(np.asarray(self.e0, dtype=complex))
        for m, op in self.perturbations.items():
            h = h + eps**m * op.entries
        return h

    def with_shift(self, c: float) -> "PerturbationProblem":
        """Same problem with ``c`` added to every unperturbed energy."""
        return replace(self, e0=np.asarray(self.e0, dtype=float) + c)


def _choose_zero_shift(e0: np.ndarray, tol: float) -> float:
    if np.all(np.abs(e0) >= tol):
        return 0.0
    if len(e0) > 1:
        spacing = (e0.max() - e0.min()) / (len(e0) - 1)
    else:
        spacing = 1.0
    for k in range(1, 4 * len(e0) + 4):
        for mult in (k, -k):
            c = mult * spacing
            if np.all(np.abs(e0 + c) >= tol):
                return float(c)
    raise DegenerateSpectrum("could not find a zero shift")  # pragma: no cover


def validate_problem(p: PerturbationProblem) -> PerturbationProblem:
    """Check a problem and return it with all defaults resolved.

    Raises
    ------
    DimensionMismatch
        A perturbation matrix does not match ``len(e0)``.
    NonHermitianInput
        A perturbation matrix is not Hermitian within ``herm_tol``.
    DegenerateSpectrum
        Two unperturbed energies are closer than the gap tolerance, or the
        requested zero shift makes an energy vanish.
    """
    e0 = np.asarray(p.e0, dtype=float)
    if e0.ndim != 1 or e0.size < 1:
        raise DimensionMismatch("e0 must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(e0)):
        raise PerturbationError("e0 must be finite")
    n = e0.size
    if p.max_order < 0:
        raise PerturbationError("max_order must be >= 0")
    tol = p.gap_tol if p.gap_tol is not None else 1e-9 * max(1.0, float(np.max(np.abs(e0))))
    if tol <= 0:
        raise PerturbationError("gap_tol must be positive")

    gaps = np.abs(e0[:, None] - e0[None, :]) + np.diag(np.full(n, np.inf))
    if gaps.min() <= tol:
        i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
        raise DegenerateSpectrum(
            f"degenerate spectrum: levels {i} and {j} are closer than gap_tol={tol:.3e} "
            f"(|{float(e0[i])!r} - {float(e0[j])!r}| = {gaps[i, j]:.3e})"
        )

    perts = {}
    for m, v in dict(p.perturbations).items():
        m = int(m)
        if m < 1:
            raise PerturbationError(f"perturbation order must be >= 1, got {m}")
        mat = v.entries if isinstance(v, HermitianOperator) else np.asarray(v, dtype=complex)
        if mat.shape != (n, n):
            raise DimensionMismatch(f"V_{m} has shape {mat.shape}, expected {(n, n)}")
        perts[m] = v if isinstance(v, HermitianOperator) else HermitianOperator(mat, tol=p.herm_tol)
        err = hermiticity_error(mat)
        if err > p.herm_tol:
            raise NonHermitianInput(f"V_{m} is not Hermitian (relative deviation {err:.3e})")

    if p.zero_shift is None:
        shift = _choose_zero_shift(e0, tol)
    else:
        shift = float(p.zero_shift)
        if not math.isfinite(shift):
            raise PerturbationError("zero_shift must be finite")
        if np.any(np.abs(e0 + shift) < tol):
            raise DegenerateSpectrum(f"zero_shift={shift!r} leaves a vanishing energy")

    return replace(p, e0=e0, perturbations=perts, gap_tol=tol, zero_shift=shift)
