"""Independent reference computations used to validate both engines.

The eigensolver is a cyclic complex Jacobi iteration written out with
elementwise updates; it does not touch ``numpy.linalg``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "NoConvergence",
    "AmbiguousMatch",
    "SingularRegion",
    "SpectralDecomposition",
    "EigenpairMatch",
    "jacobi_eigh",
    "exact_spectrum",
    "match_eigenpairs",
    "fd_bracket",
    "fd_poisson_bracket",
    "numeric_pi",
    "torus_average",
    "time_average",
]


class NoConvergence(RuntimeError):
    pass


class AmbiguousMatch(RuntimeError):
    pass


class SingularRegion(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _phase_fix(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        z = v[i, j]
        if z != 0:
            v[:, j] *= abs(z) / z
    return v


def jacobi_eigh(h, tol: float = 1e-15, max_sweeps: int = 100) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation first removes the phase of ``a[p, q]`` and then applies a
    real plane rotation that annihilates it.  Sweeps stop once the
    off-diagonal Frobenius norm falls below ``tol * |H|_F``.

    Raises
    ------
    NoConvergence
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    scale = math.sqrt(float(np.sum(np.abs(a) ** 2)))
    if scale == 0.0:
        return SpectralDecomposition(np.zeros(n), v)
    threshold = tol * scale

    mask = ~np.eye(n, dtype=bool)

    def off_norm():
        return math.sqrt(float(np.sum(np.abs(a[mask]) ** 2)))

    for _ in range(max_sweeps):
        if off_norm() <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # columns p, q of G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g_pp, g_pq = c, s
                g_qp, g_qq = -s * phase.conjugate(), c * phase.conjugate()
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = col_p * g_pp + col_q * g_qp
                a[:, q] = col_p * g_pq + col_q * g_qq
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = row_p * np.conj(g_pp) + row_q * np.conj(g_qp)
                a[q, :] = row_p * np.conj(g_pq) + row_q * np.conj(g_qq)
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp * g_pp + vq * g_qp
                v[:, q] = vp * g_pq + vq * g_qq
    else:
        if off_norm() > threshold:
            raise NoConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(w[order], _phase_fix(v[:, order]))


def exact_spectrum(p, eps: float) -> SpectralDecomposition:
    """Eigen-decomposition of ``diag(e0) + sum_m eps**m V_m``."""
    return jacobi_eigh(p.hamiltonian(eps))


@dataclass(frozen=True, eq=False)
class EigenpairMatch:
    """``perm[j]`` is the exact level matched to series level ``j``."""

    perm: np.ndarray
    energy_errors: np.ndarray
    vector_errors: np.ndarray


def match_eigenpairs(series_energies, series_vectors, exact: SpectralDecomposition,
                     tie_tol: float = 1e-6) -> EigenpairMatch:
    """Pair series levels with exact levels by maximal eigenvector overlap."""
    es = np.asarray(series_energies, dtype=float)
    vs = np.asarray(series_vectors, dtype=complex)
    ve = exact.eigenvectors
    if vs.shape != ve.shape or es.size != exact.eigenvalues.size:
        raise ValueError("series and exact decompositions have different sizes")
    overlaps = np.abs(ve.conj().T @ vs)
    n = es.size
    perm = np.empty(n, dtype=int)
    for j in range(n):
        col = overlaps[:, j]
        best = col.max()
        candidates = np.flatnonzero(col >= best - tie_tol)
        if candidates.size > 1:
            gaps = np.abs(exact.eigenvalues[candidates] - es[j])
            perm[j] = candidates[int(np.argmin(gaps))]
        else:
            perm[j] = candidates[0]
    if len(set(perm.tolist())) != n:
        raise AmbiguousMatch(f"overlap matching is not a permutation: {perm.tolist()}")
    de = np.abs(es - exact.eigenvalues[perm])
    dv = np.empty(n)
    for j in range(n):
        e = ve[:, perm[j]]
        z = np.vdot(e, vs[:, j])
        ph = z / abs(z) if abs(z) > 0 else 1.0
        dv[j] = math.sqrt(float(np.sum(np.abs(vs[:, j] * np.conj(ph) - e) ** 2)))
    return EigenpairMatch(perm, de, dv)


def fd_bracket(f: Callable, g: Callable, q, p, h: float = 1e-5) -> float:
    """Central-difference ``sum_k (df/dq_k dg/dp_k - df/dp_k dg/dq_k)``.

    ``f`` and ``g`` take ``(q, p)`` arrays.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    total = 0.0
    for k in range(q.size):
        dq = np.zeros_like(q)
        dq[k] = h
        dfq = (f(q + dq, p) - f(q - dq, p)) / (2 * h)
        dgq = (g(q + dq, p) - g(q - dq, p)) / (2 * h)
        dfp = (f(q, p + dq) - f(q, p - dq)) / (2 * h)
        dgp = (g(q, p + dq) - g(q, p - dq)) / (2 * h)
        total += dfq * dgp - dfp * dgq
    return float(total)


def _quadratic_value(g, q, p) -> float:
    lam = (q + 1j * p) / math.sqrt(2.0)
    return float((lam.conj() @ g @ lam).real)


def fd_poisson_bracket(f, g, s, h: float = 1e-5) -> float:
    """Finite-difference bracket of two quadratic observables at state ``s``."""
    if np.any(s.action < 10 * h):
        raise SingularRegion("finite-difference bracket needs every action >= 10 h")
    q, p = s.cartesian
    fc, gc = np.asarray(f.coeff), np.asarray(g.coeff)
    return fd_bracket(lambda a, b: _quadratic_value(fc, a, b),
                      lambda a, b: _quadratic_value(gc, a, b), q, p, h)


def numeric_pi(x, e0, horizon: float, samples: int = 10**6, chunk: int = 200_000) -> np.ndarray:
    """Midpoint-rule ``(1/T) int_0^T exp(-i H0 t) x exp(i H0 t) dt``."""
    if samples < 1000:
        raise ValueError("numeric_pi needs at least 1000 samples")
    x = np.asarray(x, dtype=complex)
    e0 = np.asarray(e0, dtype=float)
    dt = horizon / samples
    acc = np.zeros_like(x)
    for start in range(0, samples, chunk):
        t = (np.arange(start, min(start + chunk, samples)) + 0.5) * dt
        left = np.exp(-1j * np.outer(t, e0))    # (T, N)
        right = np.exp(1j * np.outer(t, e0))
        acc += np.einsum("ta,ab,tb->ab", left, x, right)
    return acc / samples


def _observable_on_grid(g, theta, action) -> np.ndarray:
    # theta: (S, N) -> values (S,)
    amp = np.sqrt(action)[None, :] * np.exp(1j * theta)
    return np.einsum("sm,mn,sn->s", amp, g, amp.conj()).real


def torus_average(f, action, points: int = 64) -> float:
    """Tensor-product rectangle rule for the average over all angles."""
    g = np.asarray(f.coeff)
    action = np.asarray(action, dtype=float)
    n = action.size
    axis = 2 * math.pi * np.arange(points) / points
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    theta = np.stack([gr.ravel() for gr in grids], axis=1)
    return float(_observable_on_grid(g, theta, action).mean())


def time_average(f, s, e0, horizon: float, samples: int = 10**5) -> float:
    """Average of ``f(theta - t E, I)`` over ``t`` in ``[0, horizon]``."""
    g = np.asarray(f.coeff)
    e0 = np.asarray(e0, dtype=float)
    t = (np.arange(samples) + 0.5) * (horizon / samples)
    theta = s.theta[None, :] - np.outer(t, e0)
    return float(_observable_on_grid(g, theta, s.action).mean())
