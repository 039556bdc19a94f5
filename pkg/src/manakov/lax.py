"""Lax matrix of the complex Toda chain and asymptotic-regime classification.

``L`` is complex symmetric tridiagonal with

    b_k = (mu_k + i nu_k) / 2,   a_k = sqrt(m_k) exp((q_{k+1} - q_k) / 2) / 2.

Its eigenvalues ``zeta_k = kappa_k + i eta_k`` are conserved by the
unperturbed chain; equal real parts mean solitons sharing an asymptotic
velocity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ctc import CtcState


@dataclass(frozen=True)
class LaxMatrix:
    diag: np.ndarray
    offdiag: np.ndarray

    @property
    def n(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        return (np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)).astype(complex)


def build_lax(state: CtcState) -> LaxMatrix:
    b = 0.5 * state.lam
    m = state.scalar_products()
    # any branch of the root works: only a_k^2 enters the spectrum
    a = 0.5 * np.sqrt(m.astype(complex)) * np.exp(0.5 * (state.q[1:] - state.q[:-1]))
    return LaxMatrix(np.asarray(b, complex), np.asarray(a, complex))


def sort_roots(z, rel: float = 1e-10) -> np.ndarray:
    """Sort by real part; real parts closer than ``rel`` times the spread of
    the roots count as equal and are ordered by imaginary part."""
    z = np.asarray(z, dtype=complex)
    if len(z) < 2:
        return z.copy()
    scale = max(float(np.max(np.abs(z - np.mean(z)))), float(np.max(np.abs(z)))) or 1.0
    order = sorted(range(len(z)), key=lambda i: z[i].real)
    # walk the real-sorted list and merge runs of near-equal real parts
    out, run = [], [order[0]]
    for i in order[1:]:
        if z[i].real - z[run[-1]].real <= rel * scale:
            run.append(i)
        else:
            out += sorted(run, key=lambda j: z[j].imag)
            run = [i]
    out += sorted(run, key=lambda j: z[j].imag)
    return z[out]


class EigenvalueError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def char_poly(diag, a2, z):
    """``det(L - z)`` and its z-derivative by the three-term recurrence."""
    z = np.asarray(z, dtype=complex)
    p_prev, p = np.ones_like(z), diag[0] - z
    dp_prev, dp = np.zeros_like(z), -np.ones_like(z)
    for k in range(1, len(diag)):
        p_new = (diag[k] - z) * p - a2[k - 1] * p_prev
        dp_new = -p + (diag[k] - z) * dp - a2[k - 1] * dp_prev
        p_prev, p = p, p_new
        dp_prev, dp = dp, dp_new
    return p, dp


def eigenvalues(m: LaxMatrix, tol: float = 1e-12, max_iter: int = 500) -> np.ndarray:
    """Eigenvalues of ``L`` by Aberth-Ehrlich iteration on the characteristic
    polynomial, ordered by :func:`sort_roots`.

    The matrix is shifted by its mean diagonal and scaled to unit size first
    so the residual test ``|p(z)| < tol`` is scale free.
    """
    n = m.n
    if n == 1:
        return m.diag.copy()
    center = np.mean(m.diag)
    b = m.diag - center
    a2 = m.offdiag ** 2
    scale = max(np.max(np.abs(b)), np.max(np.sqrt(np.abs(a2))))
    if scale == 0.0:
        return np.full(n, center)
    b = b / scale
    a2 = a2 / scale ** 2

    z = 1.5 * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(max_iter):
        p, dp = char_poly(b, a2, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(p == 0, 0, p / dp)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            step = ratio / (1.0 - ratio * s)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(z))):
            break
    residual = float(np.max(np.abs(char_poly(b, a2, z)[0])))
    if not residual < tol:
        raise EigenvalueError(f"root finder stopped with residual {residual:.3e}", residual)
    return sort_roots(center + scale * z)


@dataclass
class RegimeReport:
    eigenvalues: np.ndarray
    kappa: np.ndarray
    eta: np.ndarray
    groups: list
    label: str
    tol: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "kappa": [float(k) for k in self.kappa],
            "eta": [float(e) for e in self.eta],
            "groups": [list(map(int, g)) for g in self.groups],
            "tol": float(self.tol),
            "degenerate": bool(self.degenerate),
        }


def default_tolerance(kappa) -> float:
    kappa = np.asarray(kappa, dtype=float)
    spread = float(np.ptp(kappa)) if len(kappa) else 0.0
    return max(1e-4, 0.02 * spread)


def classify_regime(zetas, tol: float | None = None) -> RegimeReport:
    """Cluster eigenvalues by real part.

    All clusters singletons -> ``AFR``; one cluster holding every soliton ->
    ``BSR``; anything else -> ``MAR``.  Indices in ``groups`` refer to the
    eigenvalues sorted by real part.
    """
    z = sort_roots(np.asarray(zetas, dtype=complex))
    # mean-free so that only relative velocities matter
    kappa = z.real - np.mean(z.real)
    if tol is None:
        tol = default_tolerance(kappa)
    if not tol > 0:
        raise ValueError("tol must be positive")
    groups = [[0]]
    for i in range(1, len(z)):
        if kappa[i] - kappa[i - 1] < tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    if all(len(g) == 1 for g in groups):
        label = "AFR"
    elif len(groups) == 1:
        label = "BSR"
    else:
        label = "MAR"
    degenerate = any(abs(z[i] - z[j]) < tol
                     for i in range(len(z)) for j in range(i + 1, len(z)))
    return RegimeReport(z, z.real.copy(), z.imag.copy(), groups, label, float(tol), degenerate)


def critical_delta_nu(nu0: float, r0: float, cos_angle: float) -> float:
    """Amplitude spread at which the symmetric three-soliton train stops being
    asymptotically free: ``2 sqrt(2 cos) nu0 exp(-nu0 r0)``."""
    if not cos_angle > 0:
        raise ValueError("cos_angle must be positive")
    return 2.0 * math.sqrt(2.0 * cos_angle) * nu0 * math.exp(-nu0 * r0)
