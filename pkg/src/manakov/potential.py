"""Superposed sech^2 wells and humps and their soliton interaction kernels.

A potential is ``V(x) = sum_s c_s / cosh^2(w_s (x - x_s))``.  For a soliton of
width ``1/(2 nu0)`` sitting at ``xi`` inside a term with ``w_s = 2 nu0`` the
overlap integrals depend only on the offset ``Delta = 2 nu0 xi - w_s x_s`` and
reduce to four closed-form kernels:

    P(Delta) = 1/2 int tanh z sech^2 z sech^2(z - Delta) dz         (odd)
    R(Delta) = 1/2 int (1 - z tanh z) sech^2 z sech^2(z - Delta) dz  (even)
    N(Delta) = 1/2 int sech^2 z sech^2(z - Delta) dz                 (even)
    Q(Delta) = 1/2 int z sech^2 z sech^2(z - Delta) dz               (odd)

``P`` drives the velocity, ``R`` the phase; ``N`` and ``Q`` are kept for
completeness and as cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import integrate

# below this |Delta| the closed forms are replaced by their Taylor series
SERIES_SWITCH = 0.05
QUAD_WINDOW = 40.0
QUAD_TOL = 1e-12


@dataclass(frozen=True)
class PotentialTerm:
    c: float
    center: float
    inv_width: float = 1.0

    def __post_init__(self):
        if not self.inv_width > 0:
            raise ValueError(f"inv_width must be positive, got {self.inv_width!r}")

    def to_dict(self) -> dict:
        return {"c": self.c, "center": self.center, "inv_width": self.inv_width}


@dataclass(frozen=True)
class PotentialSpec:
    terms: tuple[PotentialTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def __len__(self):
        return len(self.terms)

    def __call__(self, x):
        return eval_potential(self, x)

    @classmethod
    def uniform(cls, c: float, x0: float, spacing: float, count: int,
                inv_width: float = 1.0) -> "PotentialSpec":
        """``count`` equal terms at ``x0 + s * spacing``, s = 0..count-1."""
        return cls(tuple(PotentialTerm(float(c), float(x0 + s * spacing), float(inv_width))
                         for s in range(int(count))))

    @property
    def c(self) -> np.ndarray:
        return np.array([t.c for t in self.terms])

    @property
    def centers(self) -> np.ndarray:
        return np.array([t.center for t in self.terms])

    @property
    def inv_widths(self) -> np.ndarray:
        return np.array([t.inv_width for t in self.terms])

    def to_list(self) -> list[dict]:
        return [t.to_dict() for t in self.terms]

    @classmethod
    def from_list(cls, items: Iterable[dict]) -> "PotentialSpec":
        return cls(tuple(PotentialTerm(float(d["c"]), float(d["center"]),
                                       float(d.get("inv_width", 1.0))) for d in items))


def eval_potential(spec: PotentialSpec, x):
    """Exact sum of the sech^2 terms; scalar in, scalar out."""
    xa = np.asarray(x, dtype=float)
    v = np.zeros_like(xa)
    for t in spec.terms:
        arg = np.abs(t.inv_width * (xa - t.center))
        # sech^2 = 4 e^{-2a} / (1 + e^{-2a})^2 never overflows
        e = np.exp(-2.0 * arg)
        v = v + t.c * 4.0 * e / (1.0 + e) ** 2
    return float(v) if np.ndim(x) == 0 else v


def half_width(term: PotentialTerm) -> float:
    """Full width of a sech^2 term at half of its extremum."""
    return 2.0 * math.acosh(math.sqrt(2.0)) / term.inv_width


@dataclass(frozen=True)
class KernelValues:
    P: float
    R: float
    N: float
    Q: float


# Taylor coefficients about Delta = 0 (odd powers for P, even for R and N)
_P_SERIES = (4 / 15, -8 / 63, 8 / 225, -16 / 2079, 5528 / 3869775)
_R_SERIES = (1 / 2, -1 / 3, 1 / 9, -2 / 75, 1 / 189)
_N_SERIES = (2 / 3, -4 / 15, 4 / 63, -8 / 675, 4 / 2079)
# x / sinh(x)
_XSINH_SERIES = (1.0, -1 / 6, 7 / 360, -31 / 15120, 127 / 604800)


def _even_series(coefs, d2):
    out = np.zeros_like(d2)
    for c in reversed(coefs):
        out = out * d2 + c
    return out


def _split(delta):
    d = np.asarray(delta, dtype=float)
    small = np.abs(d) < SERIES_SWITCH
    # keep the closed-form branch away from 0/0
    safe = np.where(small, 1.0, d)
    # divided through by cosh^4 so nothing overflows at large |Delta|
    return d, small, safe, np.tanh(safe), _sech2(safe)


def _out(d, val):
    return float(val) if np.ndim(d) == 0 else val


def kernel_p(delta):
    d, small, x, t, s2 = _split(delta)
    closed = (x * s2 ** 2 + 2 * x * s2 - 3 * t * s2) / t ** 4
    series = d * _even_series(_P_SERIES, d * d)
    return _out(d, np.where(small, series, closed))


def kernel_r(delta):
    d, small, x, t, s2 = _split(delta)
    closed = (6 * x * t * s2 - (2 * x ** 2 + 3) * t ** 2 * s2 - 3 * x ** 2 * s2 ** 2) / (2 * t ** 4)
    series = _even_series(_R_SERIES, d * d)
    return _out(d, np.where(small, series, closed))


def kernel_n(delta):
    d, small, x, t, s2 = _split(delta)
    closed = 2 * s2 * (x - t) / t ** 3
    series = _even_series(_N_SERIES, d * d)
    return _out(d, np.where(small, series, closed))


def kernel_q(delta):
    # the shift z -> z + Delta/2 makes the integrand odd around the midpoint,
    # leaving Q = (Delta / 2) N exactly
    d = np.asarray(delta, dtype=float)
    return _out(d, 0.5 * d * kernel_n(d))


def kernels(delta: float) -> KernelValues:
    return KernelValues(kernel_p(delta), kernel_r(delta), kernel_n(delta), kernel_q(delta))


def _x_over_sinh(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_SWITCH
    safe = np.where(small, 1.0, np.clip(x, -700.0, 700.0))
    return np.where(small, _even_series(_XSINH_SERIES, x * x), safe / np.sinh(safe))


def k_integral(a, delta):
    """``int exp(i a z) / (2 cosh z cosh(z + Delta)) dz`` in closed form.

    Written as a product of ``x/sinh x`` and ``sin x / x`` factors so both
    removable singularities (a = 0, Delta = 0) are handled by series.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(delta, dtype=float)
    val = (_x_over_sinh(d) * _x_over_sinh(np.pi * a / 2.0)
           * np.sinc(a * d / (2.0 * np.pi)) * np.exp(-0.5j * a * d))
    return complex(val) if val.ndim == 0 else val


def _sech2(z):
    e = np.exp(-2.0 * np.abs(z))
    return 4.0 * e / (1.0 + e) ** 2


_INTEGRANDS = {
    "P": lambda z: 0.5 * np.tanh(z) * _sech2(z),
    "R": lambda z: 0.5 * (1.0 - z * np.tanh(z)) * _sech2(z),
    "N": lambda z: 0.5 * _sech2(z),
    "Q": lambda z: 0.5 * z * _sech2(z),
}


class QuadratureError(RuntimeError):
    pass


def quadrature_oracle(kernel_id: str, delta: float, window: float = QUAD_WINDOW,
                      tol: float = QUAD_TOL, max_doublings: int = 3) -> float:
    """Adaptive quadrature of a kernel's defining integral.

    The window ``|z| <= window`` is doubled until two successive windows agree
    to ``tol``; the interval is split at 0 and ``Delta`` where both sech^2
    factors peak.
    """
    try:
        f = _INTEGRANDS[kernel_id]
    except KeyError:
        raise ValueError(f"kernel_id must be one of {sorted(_INTEGRANDS)}") from None
    delta = float(delta)

    def integrand(z):
        return f(z) * _sech2(z - delta)

    def run(w):
        lo, hi = min(0.0, delta), max(0.0, delta)
        pts = sorted({-w, lo, hi, w})
        total, err = 0.0, 0.0
        for a, b in zip(pts, pts[1:]):
            if b > a:
                v, e = integrate.quad(integrand, a, b, epsabs=tol * 1e-2, epsrel=1e-13, limit=400)
                total += v
                err += e
        return total, err

    w = window + abs(delta)
    prev, err = run(w)
    for _ in range(max_doublings):
        w *= 2.0
        cur, err = run(w)
        if abs(cur - prev) <= tol and err <= tol:
            return cur
        prev = cur
    raise QuadratureError(
        f"quadrature for {kernel_id}({delta}) did not converge (last error {err:.2e})")


def k_integral_quadrature(a: float, delta: float, window: float = QUAD_WINDOW) -> complex:
    """Numerical check of :func:`k_integral`."""
    w = window + abs(delta)

    def base(z):
        return 0.5 * _sech(z) * _sech(z + delta)

    re = integrate.quad(lambda z: base(z) * np.cos(a * z), -w, w, epsabs=1e-14, limit=400)[0]
    im = integrate.quad(lambda z: base(z) * np.sin(a * z), -w, w, epsabs=1e-14, limit=400)[0]
    return complex(re, im)


def _sech(z):
    e = np.exp(-np.abs(z))
    return 2.0 * e / (1.0 + e * e)


def offsets(xi, spec: PotentialSpec, nu0: float) -> np.ndarray:
    """Kernel arguments ``Delta[k, s] = 2 nu0 xi_k - w_s x_s``.

    The closed-form kernels assume each term has the soliton's own width,
    i.e. ``inv_width == 2 nu0``.
    """
    w = spec.inv_widths
    if len(w) and np.any(np.abs(w - 2.0 * nu0) > 1e-9 * max(1.0, 2.0 * nu0)):
        raise ValueError("closed-form kernels need every term to have inv_width == 2*nu0; "
                         f"got {sorted(set(w.tolist()))} with nu0={nu0}")
    xi = np.asarray(xi, dtype=float)
    return 2.0 * nu0 * xi[:, None] - (w * spec.centers)[None, :]
