"""Soliton parameters, N-soliton train initial data and adiabaticity checks.

A Manakov soliton is described by its amplitude ``nu``, velocity ``mu``,
center ``xi``, phase ``delta`` and a unit polarization 2-vector.  The envelope
of soliton ``k`` is

    u_k = 2 nu_k exp(i phi_k) / cosh(z_k),  z_k = 2 nu_k (x - xi_k),
    phi_k = (mu_k / nu_k) z_k + delta_k,

and the vector field is ``u_k * n_k``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

# sech tails below this value at the grid ends are considered negligible
TAIL_THRESHOLD = 1e-8


class TailTruncationWarning(UserWarning):
    """The grid cuts off soliton tails above ``TAIL_THRESHOLD``."""


@dataclass(frozen=True)
class PolarizationVector:
    """Unit complex 2-vector ``(n1, n2)``."""

    n1: complex
    n2: complex

    def __post_init__(self):
        norm = abs(self.n1) ** 2 + abs(self.n2) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"polarization vector must have unit norm, got {norm!r}")

    @classmethod
    def from_angles(cls, theta: float, gamma: float = 0.0) -> "PolarizationVector":
        return build_polarization(theta, gamma)

    @classmethod
    def from_components(cls, c1: complex, c2: complex) -> tuple["PolarizationVector", float]:
        """Normalize arbitrary components.

        Returns the unit vector whose component phases sum to zero, together
        with the common phase that was divided out.  Multiplying the returned
        vector by ``exp(1j * phase)`` gives back the direction of the input.
        """
        c = np.array([complex(c1), complex(c2)])
        norm = np.sqrt(np.sum(np.abs(c) ** 2))
        if norm == 0.0:
            raise ValueError("polarization vector cannot be zero")
        c = c / norm
        nonzero = np.abs(c) > 0.0
        if nonzero.all():
            phase = float(np.angle(c[0]) + np.angle(c[1])) / 2.0
        else:
            # a vanishing component can absorb any phase, so nothing is removed
            phase = 0.0
        c = c * np.exp(-1j * phase)
        # renormalize to kill the last ulp of drift
        c = c / np.sqrt(np.sum(np.abs(c) ** 2))
        return cls(complex(c[0]), complex(c[1])), phase

    @property
    def components(self) -> np.ndarray:
        return np.array([self.n1, self.n2], dtype=complex)

    def angles(self) -> tuple[float, float]:
        """Return ``(theta, gamma)`` such that ``from_angles`` rebuilds the vector.

        Only exact for vectors whose component phases sum to zero.
        """
        theta = math.atan2(abs(self.n2), abs(self.n1))
        if abs(self.n1) > 0.0:
            gamma = float(np.angle(self.n1))
        else:
            gamma = -float(np.angle(self.n2))
        return theta, gamma

    def inner(self, other: "PolarizationVector") -> complex:
        """Conjugate-bilinear product ``(self^dagger, other)``."""
        return complex(np.vdot(self.components, other.components))

    def transformed(self, g: np.ndarray) -> "PolarizationVector":
        """Apply a 2x2 unitary matrix without any phase normalization."""
        c = np.asarray(g, dtype=complex) @ self.components
        c = c / np.sqrt(np.sum(np.abs(c) ** 2))
        return PolarizationVector(complex(c[0]), complex(c[1]))


def build_polarization(theta: float, gamma: float) -> PolarizationVector:
    """``(exp(i gamma) cos theta, exp(-i gamma) sin theta)``."""
    return PolarizationVector(
        complex(np.exp(1j * gamma) * math.cos(theta)),
        complex(np.exp(-1j * gamma) * math.sin(theta)),
    )


@dataclass(frozen=True)
class SolitonParams:
    nu: float
    mu: float
    xi: float
    delta: float
    pol: PolarizationVector = field(default_factory=lambda: PolarizationVector(1.0, 0.0))

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"soliton amplitude must be positive, got nu={self.nu!r}")

    @classmethod
    def from_angles(cls, nu, mu, xi, delta, theta=0.0, gamma=0.0) -> "SolitonParams":
        return cls(float(nu), float(mu), float(xi), float(delta), build_polarization(theta, gamma))

    def to_dict(self) -> dict:
        theta, gamma = self.pol.angles()
        return {"nu": self.nu, "mu": self.mu, "xi": self.xi, "delta": self.delta,
                "theta": theta, "gamma": gamma}

    @classmethod
    def from_dict(cls, d: dict) -> "SolitonParams":
        return cls.from_angles(d["nu"], d.get("mu", 0.0), d["xi"], d.get("delta", 0.0),
                               d.get("theta", 0.0), d.get("gamma", 0.0))


@dataclass(frozen=True)
class TrainConfig:
    """Ordered soliton train with ``xi`` strictly increasing."""

    solitons: tuple[SolitonParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "solitons", tuple(self.solitons))
        if not self.solitons:
            raise ValueError("a train needs at least one soliton")
        xs = [s.xi for s in self.solitons]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError(f"soliton centers must be strictly increasing, got {xs}")

    def __len__(self):
        return len(self.solitons)

    @property
    def n(self) -> int:
        return len(self.solitons)

    @property
    def nu(self) -> np.ndarray:
        return np.array([s.nu for s in self.solitons])

    @property
    def mu(self) -> np.ndarray:
        return np.array([s.mu for s in self.solitons])

    @property
    def xi(self) -> np.ndarray:
        return np.array([s.xi for s in self.solitons])

    @property
    def delta(self) -> np.ndarray:
        return np.array([s.delta for s in self.solitons])

    @property
    def nu0(self) -> float:
        return float(np.mean(self.nu))

    @property
    def mu0(self) -> float:
        return float(np.mean(self.mu))

    @property
    def delta0(self) -> float:
        return float(np.mean(self.delta))

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.xi)

    @property
    def r0(self) -> float:
        """Smallest initial neighbor separation (inf for a single soliton)."""
        return float(self.gaps.min()) if self.n > 1 else math.inf

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.solitons]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "TrainConfig":
        return cls(tuple(SolitonParams.from_dict(d) for d in items))


def apply_gauge(config: TrainConfig, g: np.ndarray) -> TrainConfig:
    """Multiply every polarization vector by the unitary ``g``.

    The common phase removed when re-normalizing each vector is moved into
    the soliton phase, so the sampled field is exactly ``g @ u``.
    """
    out = []
    for s in config.solitons:
        c = np.asarray(g, dtype=complex) @ s.pol.components
        pol, phase = PolarizationVector.from_components(c[0], c[1])
        out.append(replace(s, pol=pol, delta=s.delta + phase))
    return TrainConfig(tuple(out))


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def scalar_products(config: TrainConfig) -> list[complex]:
    """Neighbour products ``(n_{k+1}^dagger, n_k)`` for k = 1..N-1."""
    s = config.solitons
    return [s[k + 1].pol.inner(s[k].pol) for k in range(len(s) - 1)]


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError("grid needs at least 3 points")
        if not self.x_max > self.x_min:
            raise ValueError("grid needs x_max > x_min")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, h: float) -> "Grid":
        n = int(round((x_max - x_min) / h)) + 1
        return cls(float(x_min), float(x_max), n)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


@dataclass
class Field:
    grid: Grid
    u1: np.ndarray
    u2: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u1 = np.asarray(self.u1, dtype=complex)
        self.u2 = np.asarray(self.u2, dtype=complex)
        if self.u1.shape != (self.grid.n_points,) or self.u2.shape != (self.grid.n_points,):
            raise ValueError("field arrays must match the grid size")

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.u1) ** 2 + np.abs(self.u2) ** 2

    def copy(self) -> "Field":
        return Field(self.grid, self.u1.copy(), self.u2.copy(), self.t)

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "Field":
        return cls(grid, np.zeros(grid.n_points, complex), np.zeros(grid.n_points, complex), t)


def sample_train(config: TrainConfig, grid: Grid, t: float = 0.0) -> Field:
    """Superpose the freely evolving one-soliton profiles on ``grid`` at time ``t``.

    Emits :class:`TailTruncationWarning` if any soliton's tail at a grid end
    exceeds ``TAIL_THRESHOLD``.
    """
    x = grid.x
    u = np.zeros((2, grid.n_points), dtype=complex)
    for s in config.solitons:
        xi = 2.0 * s.mu * t + s.xi
        delta = 2.0 * (s.mu ** 2 + s.nu ** 2) * t + s.delta
        z = 2.0 * s.nu * (x - xi)
        phi = (s.mu / s.nu) * z + delta
        # 1/cosh overflows politely to 0 for |z| > 710
        with np.errstate(over="ignore"):
            env = 2.0 * s.nu * np.exp(1j * phi) / np.cosh(z)
        u += np.outer(s.pol.components, env)
        tail = 2.0 * s.nu / math.cosh(min(abs(z[0]), abs(z[-1]), 700.0))
        if tail > TAIL_THRESHOLD:
            warnings.warn(
                f"soliton at xi={xi:g} has tail {tail:.2e} at the grid boundary",
                TailTruncationWarning, stacklevel=2)
    return Field(grid, u[0], u[1], t)


@dataclass(frozen=True)
class AdiabaticityReport:
    amplitude_spread: float  # max |nu_k - nu0| / nu0
    velocity_spread: float   # max |mu_k - mu0|
    r_min: float
    eps0: float              # exp(-nu0 * r_min)
    literal_condition: float  # min_k |nu_k - nu0| * gap_k, the textbook "much greater than 1" form
    violated: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def adiabaticity_report(config: TrainConfig, eps_max: float = 0.1,
                        spread_max: float = 0.2) -> AdiabaticityReport:
    nu, mu = config.nu, config.mu
    nu0, mu0 = config.nu0, config.mu0
    amp = float(np.max(np.abs(nu - nu0)) / nu0)
    vel = float(np.max(np.abs(mu - mu0)))
    if config.n > 1:
        gaps = config.gaps
        r_min = float(gaps.min())
        eps0 = math.exp(-nu0 * r_min)
        dnu = np.abs(nu - nu0)
        literal = float(np.min(dnu[:-1] * gaps))
    else:
        r_min, eps0, literal = math.inf, 0.0, math.inf
    return AdiabaticityReport(amp, vel, r_min, eps0, literal,
                              violated=bool(eps0 > eps_max or amp > spread_max))
