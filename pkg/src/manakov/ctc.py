"""Perturbed complex Toda chain (PCTC): the reduced model of a soliton train.

Each soliton is represented by its eigen-parameter ``lambda_k = mu_k + i nu_k``
and a complex coordinate

    q_k = -2 nu0 xi_k + k ln(4 nu0^2) - i (delta_k + delta0 + k pi - 2 mu0 xi_k),

with ``nu0, mu0, delta0`` the train averages frozen at t = 0.  The flow is

    dlambda_k/dt = -4 nu0 (m_k e^{q_{k+1}-q_k} - m_{k-1} e^{q_k-q_{k-1}}) + M_k + i N_k
    dq_k/dt      = -4 nu0 lambda_k + 2i (mu0 + i nu0) Xi_k - i X_k,   X_k = 2 mu_k Xi_k + D_k

where ``m_k = (n_{k+1}^dagger, n_k)`` and the free ends carry no coupling.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import solve_ivp

from .potential import PotentialSpec, kernel_p, kernel_r, offsets
from .soliton import SolitonParams, TrainConfig, PolarizationVector

PolMode = Literal["frozen", "evolving"]

# neighbours closer than this in Re q have collided and the model is meaningless
COLLISION_GAP = 0.5


@dataclass
class CtcState:
    lam: np.ndarray
    q: np.ndarray
    pol: np.ndarray  # (N, 2) complex
    nu0: float
    mu0: float
    delta0: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=complex)
        self.q = np.asarray(self.q, dtype=complex)
        self.pol = np.asarray(self.pol, dtype=complex).reshape(-1, 2)
        if self.lam.ndim != 1 or len(self.lam) < 1:
            raise ValueError("state needs at least one soliton")
        if self.q.shape != self.lam.shape or len(self.pol) != len(self.lam):
            raise ValueError("lam, q and pol must describe the same number of solitons")

    @property
    def n(self) -> int:
        return len(self.lam)

    def scalar_products(self) -> np.ndarray:
        """``(n_{k+1}^dagger, n_k)`` for k = 1..N-1."""
        return np.sum(np.conj(self.pol[1:]) * self.pol[:-1], axis=1)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.lam, self.q, self.pol.ravel()])

    def unpacked(self, y, t) -> "CtcState":
        n = self.n
        return CtcState(y[:n], y[n:2 * n], y[2 * n:].reshape(n, 2), self.nu0, self.mu0,
                        self.delta0, t)


@dataclass(frozen=True)
class PerturbationForces:
    M: np.ndarray
    N: np.ndarray
    Xi: np.ndarray
    D: np.ndarray
    X: np.ndarray


def init_ctc_state(config: TrainConfig) -> CtcState:
    nu0, mu0, delta0 = config.nu0, config.mu0, config.delta0
    k = np.arange(1, config.n + 1)
    xi = config.xi
    q = (-2.0 * nu0 * xi + k * math.log(4.0 * nu0 ** 2)
         - 1j * (config.delta + delta0 + k * math.pi - 2.0 * mu0 * xi))
    lam = config.mu + 1j * config.nu
    pol = np.array([s.pol.components for s in config.solitons])
    return CtcState(lam, q, pol, nu0, mu0, delta0, 0.0)


def positions_from_state(state: CtcState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(xi, nu, mu)`` for every soliton."""
    return _xi(state.q, state.nu0), state.lam.imag.copy(), state.lam.real.copy()


def _xi(q, nu0):
    k = np.arange(1, q.shape[-1] + 1)
    return (k * math.log(4.0 * nu0 ** 2) - q.real) / (2.0 * nu0)


def _delta(q, nu0, mu0, delta0):
    k = np.arange(1, q.shape[-1] + 1)
    return -q.imag - delta0 - k * math.pi + 2.0 * mu0 * _xi(q, nu0)


def state_to_config(state: CtcState) -> TrainConfig:
    """Rebuild soliton parameters (phases carry the frozen-reference offset)."""
    xi, nu, mu = positions_from_state(state)
    delta = _delta(state.q, state.nu0, state.mu0, state.delta0)
    sol = []
    for k in range(state.n):
        pol, phase = PolarizationVector.from_components(*state.pol[k])
        sol.append(SolitonParams(float(nu[k]), float(mu[k]), float(xi[k]),
                                 float(delta[k] + phase), pol))
    return TrainConfig(tuple(sol))


def perturbation_forces(state: CtcState, spec: PotentialSpec) -> PerturbationForces:
    """Potential-induced forcing for a real sech^2 potential.

    ``M_k = 2 nu_k sum_s c_s P(Delta_ks)`` pushes the velocity and
    ``D_k = -2 sum_s c_s R(Delta_ks)`` shifts the phase rate; ``N`` and ``Xi``
    vanish because the potential is real.
    """
    n = state.n
    zero = np.zeros(n)
    if len(spec) == 0:
        return PerturbationForces(zero, zero, zero, zero, zero)
    xi = _xi(state.q, state.nu0)
    d = offsets(xi, spec, state.nu0)
    c = spec.c[None, :]
    M = 2.0 * state.lam.imag * np.sum(c * kernel_p(d), axis=1)
    D = -2.0 * np.sum(c * kernel_r(d), axis=1)
    Xi = np.zeros(n)
    X = 2.0 * state.lam.real * Xi + D
    return PerturbationForces(M, np.zeros(n), Xi, D, X)


@dataclass
class CtcDerivative:
    lam: np.ndarray
    q: np.ndarray
    pol: np.ndarray


def _couplings(q, pol):
    """``e^{q_{k+1}-q_k}`` and ``m_k`` for k = 1..N-1."""
    e = np.exp(q[1:] - q[:-1])
    m = np.sum(np.conj(pol[1:]) * pol[:-1], axis=1)
    return e, m


def pctc_rhs(state: CtcState, spec: PotentialSpec = PotentialSpec(),
             pol_mode: PolMode = "frozen") -> CtcDerivative:
    nu0, mu0 = state.nu0, state.mu0
    lam, q, pol = state.lam, state.q, state.pol
    e, m = _couplings(q, pol)
    em = e * m
    flux = np.zeros(state.n + 1, dtype=complex)
    flux[1:-1] = em
    f = perturbation_forces(state, spec)
    dlam = -4.0 * nu0 * (flux[1:] - flux[:-1]) + f.M + 1j * f.N
    dq = -4.0 * nu0 * lam + 2j * (mu0 + 1j * nu0) * f.Xi - 1j * f.X
    if pol_mode == "frozen":
        dpol = np.zeros_like(pol)
    elif pol_mode == "evolving":
        dpol = _polarization_flow(e, pol)
    else:
        raise ValueError(f"pol_mode must be 'frozen' or 'evolving', got {pol_mode!r}")
    return CtcDerivative(dlam, dq, dpol)


def _polarization_flow(e, pol):
    """Nearest-neighbour polarization rotation of the unperturbed chain.

    With ``W_kn = 4 nu0^2 exp(-2 nu0 |xi_n - xi_k|) exp(i(d_n - d_k))`` (``d`` the
    reduced phases) the flow is
    ``dn_k/dt = i sum_n [2 W_kn n_n - 2i Im(W_kn (n_k^dagger, n_n)) n_k]``,
    which preserves |n_k|.  In terms of ``q``: ``W_{k,k+1} = -conj(e_k)``,
    ``W_{k,k-1} = -e_{k-1}``.
    """
    dpol = np.zeros_like(pol)
    n = len(pol)
    for k in range(n):
        for nb, w in ((k + 1, -np.conj(e[k]) if k < n - 1 else None),
                      (k - 1, -e[k - 1] if k > 0 else None)):
            if w is None:
                continue
            r = w * np.vdot(pol[k], pol[nb])
            dpol[k] += 1j * (2.0 * w * pol[nb] - 2j * r.imag * pol[k])
    return dpol


@dataclass
class CtcTrajectory:
    times: np.ndarray
    lam: np.ndarray   # (M, N)
    q: np.ndarray     # (M, N)
    pol: np.ndarray   # (M, N, 2)
    nu0: float
    mu0: float
    delta0: float
    status: str = "ok"
    message: str = ""

    @property
    def xi(self) -> np.ndarray:
        return _xi(self.q, self.nu0)

    @property
    def nu(self) -> np.ndarray:
        return self.lam.imag

    @property
    def mu(self) -> np.ndarray:
        return self.lam.real

    @property
    def delta_proxy(self) -> np.ndarray:
        """Phases reconstructed from ``Im q``; their rate includes the constant
        ``4 nu0 nu_k - 2 nu_k^2`` offset of the frozen reference frame."""
        return _delta(self.q, self.nu0, self.mu0, self.delta0)

    def state(self, i: int) -> CtcState:
        return CtcState(self.lam[i], self.q[i], self.pol[i], self.nu0, self.mu0,
                        self.delta0, float(self.times[i]))

    def to_csv(self, path) -> None:
        n = self.lam.shape[1]
        header = ["t"]
        for k in range(1, n + 1):
            header += [f"xi_{k}", f"nu_{k}", f"mu_{k}", f"delta_proxy_{k}"]
        xi, nu, mu, dp = self.xi, self.nu, self.mu, self.delta_proxy
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, t in enumerate(self.times):
                row = [repr(float(t))]
                for k in range(n):
                    row += [repr(float(v)) for v in (xi[i, k], nu[i, k], mu[i, k], dp[i, k])]
                w.writerow(row)


@dataclass(frozen=True)
class IntegrationOptions:
    dt: float = 0.05
    sample_every: float = 1.0
    method: Literal["rk4", "adaptive"] = "rk4"
    rtol: float = 1e-9
    atol: float = 1e-12
    pol_mode: PolMode = "frozen"


def _collided(q) -> bool:
    return bool(len(q) > 1 and np.any(np.abs(np.diff(q.real)) < COLLISION_GAP))


def integrate_ctc(state0: CtcState, spec: PotentialSpec = PotentialSpec(),
                  t_end: float = 100.0, options: IntegrationOptions = IntegrationOptions()
                  ) -> CtcTrajectory:
    """Integrate the PCTC from ``state0.t`` to ``t_end``, sampling every
    ``options.sample_every``.

    A collision (neighbouring ``Re q`` closer than ``COLLISION_GAP``) or a
    non-finite state ends the run early with ``status`` set accordingly; the
    samples gathered so far are kept.
    """
    if not t_end > state0.t:
        raise ValueError("t_end must be after the initial time")
    opts = options
    n = state0.n

    def f(t, y):
        d = pctc_rhs(state0.unpacked(y, t), spec, opts.pol_mode)
        return np.concatenate([d.lam, d.q, d.pol.ravel()])

    n_samples = int(math.floor((t_end - state0.t) / opts.sample_every + 1e-9))
    sample_t = state0.t + opts.sample_every * np.arange(n_samples + 1)
    if sample_t[-1] < t_end - 1e-12:
        sample_t = np.append(sample_t, t_end)

    ys = [state0.pack()]
    times = [state0.t]
    status, message = "ok", ""
    if opts.method == "rk4":
        y, t = state0.pack(), state0.t
        for t_next in sample_t[1:]:
            m = max(1, int(round((t_next - t) / opts.dt)))
            h = (t_next - t) / m
            for _ in range(m):
                k1 = f(t, y)
                k2 = f(t + h / 2, y + h / 2 * k1)
                k3 = f(t + h / 2, y + h / 2 * k2)
                k4 = f(t + h, y + h * k3)
                y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                t = t + h
                if not np.all(np.isfinite(y)):
                    status, message = "blowup", f"non-finite state at t={t:g}"
                    break
                if _collided(y[n:2 * n]):
                    status, message = "collision", f"solitons collided at t={t:g}"
                    break
            if status != "ok":
                if np.all(np.isfinite(y)):
                    ys.append(y)
                    times.append(t)
                break
            t = float(t_next)
            ys.append(y)
            times.append(t)
    elif opts.method == "adaptive":
        def collision(t, y):
            if n < 2:
                return 1.0
            return float(np.min(np.abs(np.diff(y[n:2 * n].real))) - COLLISION_GAP)
        collision.terminal = True

        sol = solve_ivp(f, (state0.t, sample_t[-1]), state0.pack(), method="DOP853",
                        t_eval=sample_t, rtol=opts.rtol, atol=opts.atol, events=collision)
        ys = list(sol.y.T)
        times = list(sol.t)
        if sol.status == 1:
            status, message = "collision", f"solitons collided at t={sol.t_events[0][0]:g}"
            # keep the state at the collision itself, as the fixed-step path does
            if not times or sol.t_events[0][0] > times[-1]:
                ys.append(sol.y_events[0][0])
                times.append(float(sol.t_events[0][0]))
        elif sol.status < 0:
            status, message = "blowup", sol.message
    else:
        raise ValueError(f"unknown integration method {opts.method!r}")

    y = np.array(ys)
    return CtcTrajectory(np.array(times, dtype=float), y[:, :n], y[:, n:2 * n],
                         y[:, 2 * n:].reshape(len(y), n, 2), state0.nu0, state0.mu0,
                         state0.delta0, status, message)
