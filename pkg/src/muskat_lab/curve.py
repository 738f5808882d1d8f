"""Interface representation, the Muskat kernel and pointwise geometry.

The interface is a curve ``f(alpha) = (f1, f2)`` with ``f1 - alpha`` and
``f2`` both 2*pi-periodic, sampled on ``alpha_j = -pi + 2*pi*j/n``.
Everything here is a pure function of immutable inputs.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial
from typing import Callable, List

import numpy as np
from scipy.optimize import brentq

from . import fourier
from .errors import (DegenerateArgumentError, DegenerateTangentError, DiffeomorphismError,
                     InsufficientSmoothnessError, SupportViolationError, ValidationError)
from .jets import Jet

DENOM_FLOOR = 1e-300
TANGENT_FLOOR = 1e-14
ROOT_TOL = 1e-10
TAYLOR_GUARD = 1e100
STEP_SHARPNESS = 2.0


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------
def kernel_denominator(x1, x2):
    """``cosh(x2) - cos(x1)`` written without cancellation."""
    return 2.0 * np.sinh(0.5 * x2) ** 2 + 2.0 * np.sin(0.5 * x1) ** 2


def kernel(x1, x2):
    """Unchecked ``K(x) = sin(x1) / (cosh(x2) - cos(x1))``; accepts complex input."""
    return np.sin(x1) / kernel_denominator(x1, x2)


def kernel_grad(x1, x2):
    """Partial derivatives ``(K_1, K_2)`` of the kernel."""
    den = kernel_denominator(x1, x2)
    k1 = (np.cos(x1) * np.cosh(x2) - 1.0) / den**2
    k2 = -np.sin(x1) * np.sinh(x2) / den**2
    return k1, k2


def kernel_jet(x1: Jet, x2: Jet) -> Jet:
    s1, _ = x1.sincos()
    h = (x2 * 0.5).sinh()
    s = (x1 * 0.5).sin()
    return s1 / (h * h * 2.0 + s * s * 2.0)


def eval_kernel(x1, x2, denom_floor: float = DENOM_FLOOR):
    """Evaluate the Muskat kernel ``sin(x1) / (cosh(x2) - cos(x1))``.

    Parameters
    ----------
    x1, x2 : float or array_like
        Components of the chord ``f(alpha) - f(beta)``.
    denom_floor : float
        Smallest admissible denominator.

    Raises
    ------
    DegenerateArgumentError
        If the denominator falls below ``denom_floor`` anywhere.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    den = kernel_denominator(x1, x2)
    if np.any(den < denom_floor):
        raise DegenerateArgumentError("kernel evaluated at a zero of cosh(x2) - cos(x1)")
    out = np.sin(x1) / den
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# curve
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PeriodicInterface:
    """Sampled interface with its Fourier representation.

    Attributes
    ----------
    n : int
        Grid size, even and at least 32.
    f1, f2 : ndarray
        Samples at ``alpha``; ``f1 - alpha`` and ``f2`` are periodic.
    rho_bar : float
        Half the density jump.
    """

    n: int
    f1: np.ndarray
    f2: np.ndarray
    rho_bar: float = 1.0

    def __post_init__(self):
        if self.n < 32 or self.n % 2:
            raise ValidationError(f"grid size must be even and >= 32, got {self.n}")
        f1 = np.array(self.f1, dtype=float)
        f2 = np.array(self.f2, dtype=float)
        if f1.shape != (self.n,) or f2.shape != (self.n,):
            raise ValidationError("f1 and f2 must have length n")
        if not (np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
            raise ValidationError("curve samples must be finite")
        f1.setflags(write=False)
        f2.setflags(write=False)
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "f2", f2)
        object.__setattr__(self, "rho_bar", float(self.rho_bar))

    @classmethod
    def from_functions(cls, n: int, f1: Callable, f2: Callable, rho_bar: float = 1.0):
        a = fourier.grid(n)
        return cls(n, f1(a), f2(a), rho_bar)

    @classmethod
    def flat(cls, n: int, rho_bar: float = 1.0):
        a = fourier.grid(n)
        return cls(n, a, np.zeros(n), rho_bar)

    @cached_property
    def alpha(self) -> np.ndarray:
        return fourier.grid(self.n)

    @property
    def dalpha(self) -> float:
        return 2.0 * np.pi / self.n

    @cached_property
    def periodic(self) -> np.ndarray:
        """``(f1 - alpha, f2)`` stacked, shape (2, n)."""
        return np.stack([self.f1 - self.alpha, self.f2])

    @cached_property
    def coeffs(self) -> np.ndarray:
        return fourier.coefficients(self.periodic)

    def d(self, order: int = 1) -> np.ndarray:
        """Grid values of the ``order``-th derivative of ``(f1, f2)``, shape (2, n)."""
        if order == 0:
            return np.stack([self.f1, self.f2])
        out = fourier.derivative(self.periodic, order)
        if order == 1:
            out[0] += 1.0
        return out

    def at(self, z, order: int = 0) -> np.ndarray:
        """Values of ``f^(order)`` at arbitrary (possibly complex) points, shape (2,) + z.shape."""
        z = np.asarray(z)
        out = fourier.evaluate(self.coeffs, z, order)
        if order == 0:
            out[0] += z
        elif order == 1:
            out[0] += 1.0
        if not np.iscomplexobj(z):
            out = out.real
        return out

    def with_samples(self, f1, f2) -> "PeriodicInterface":
        return PeriodicInterface(self.n, f1, f2, self.rho_bar)

    def flipped(self) -> "PeriodicInterface":
        """Mirror image ``(f1, -f2)``."""
        return PeriodicInterface(self.n, self.f1, -self.f2, self.rho_bar)

    # io --------------------------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "f1", "f2"])
            for row in zip(self.alpha, self.f1, self.f2):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, rho_bar: float = 1.0) -> "PeriodicInterface":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data.shape[0], data[:, 1], data[:, 2], rho_bar)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "rho_bar": self.rho_bar,
                           "f1": self.f1.tolist(), "f2": self.f2.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "PeriodicInterface":
        d = json.loads(text)
        return cls(int(d["n"]), d["f1"], d["f2"], d.get("rho_bar", 1.0))

    def spectrum_to_csv(self, path) -> None:
        """Write ``k, re, im, abs`` per mode for both periodic components."""
        k = fourier.wavenumbers(self.n)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["component", "k", "re", "im", "abs"])
            for name, c in zip(("f1_periodic", "f2"), self.coeffs):
                for kk, cc in sorted(zip(k, c), key=lambda p: p[0]):
                    w.writerow([name, int(kk), repr(cc.real), repr(cc.imag), repr(abs(cc))])


# ---------------------------------------------------------------------------
# cutoffs and contour height
# ---------------------------------------------------------------------------
def smooth_step(x, order: int = 0) -> np.ndarray:
    """Derivatives ``0..order`` of the C-infinity step that is 0 for x <= 0 and 1 for x >= 1.

    ``psi(x) = 1 / (1 + exp(b (1/x - 1/(1-x))))`` on (0, 1) with
    ``b = STEP_SHARPNESS``; larger ``b`` gives a gentler profile with
    smaller high derivatives.  Returns shape
    ``(order+1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    out = np.zeros((order + 1,) + x.shape)
    out[0][x >= 1.0] = 1.0
    inner = (x > 0.0) & (x < 1.0)
    if not np.any(inner):
        return out.reshape((order + 1,) + shape)
    xi = x[inner]
    g0 = STEP_SHARPNESS * (1.0 / xi - 1.0 / (1.0 - xi))
    # beyond |g| ~ 700 the step is flat to double precision
    low = g0 > 700.0
    high = g0 < -700.0
    mid = ~(low | high)
    vals = np.zeros((order + 1, xi.size))
    vals[0][high] = 1.0
    if np.any(mid):
        xm = xi[mid]
        pos = g0[mid] > 0
        for sel, sign in ((pos, -1.0), (~pos, 1.0)):
            if not np.any(sel):
                continue
            v = Jet.variable(xm[sel], order)
            e = ((1.0 / v - 1.0 / (1.0 - v)) * (sign * STEP_SHARPNESS)).exp()
            # logistic written so that the exponential never overflows
            psi = e / (e + 1.0) if sign < 0 else 1.0 / (e + 1.0)
            idx = np.nonzero(mid)[0][sel]
            vals[:, idx] = psi.derivatives()
    out[:, inner] = vals
    return out.reshape((order + 1,) + shape)


@dataclass(frozen=True)
class ProfileSet:
    """Cutoffs ``lambda0``, ``lambda`` and the contour height ``c``.

    ``c(a) = delta_c * a**2 * S(a)`` where ``S`` is 1 below ``delta/32`` and
    0 above ``delta/8``; ``lambda0`` is 1 on ``|a| <= delta`` and 0 on
    ``|a| >= 2 delta``; ``lambda(a) = lambda0(a / 10)``.
    """

    delta: float = 0.5
    delta_c: float = 0.05
    taper_kind: str = "exp-bump"

    def __post_init__(self):
        if not (self.delta > 0 and self.delta_c > 0):
            raise ValidationError("delta and delta_c must be positive")
        if self.taper_kind != "exp-bump":
            raise ValidationError(f"unknown taper {self.taper_kind!r}")

    @property
    def c_core(self) -> float:
        return self.delta / 32.0

    @property
    def c_support(self) -> float:
        return self.delta / 8.0

    def _taper(self, a, lo, hi, order):
        # derivatives of psi((hi - a)/(hi - lo)) in a
        w = hi - lo
        s = smooth_step((hi - np.asarray(a, dtype=float)) / w, order)
        scale = (-1.0 / w) ** np.arange(order + 1)
        return s * scale.reshape((-1,) + (1,) * (s.ndim - 1))

    def c_derivs(self, a, order: int = 0) -> np.ndarray:
        """Derivatives ``0..order`` of ``c`` at real points, shape ``(order+1,) + a.shape``."""
        a = np.asarray(a, dtype=float)
        s = self._taper(a, self.c_core, self.c_support, order)
        q = np.zeros_like(s)
        q[0] = self.delta_c * a**2
        if order >= 1:
            q[1] = 2.0 * self.delta_c * a
        if order >= 2:
            q[2] = 2.0 * self.delta_c
        out = np.zeros_like(s)
        for k in range(order + 1):
            for j in range(k + 1):
                out[k] += comb(k, j) * q[j] * s[k - j]
        return np.where(a > 0.0, out, 0.0)

    def c(self, a, order: int = 0):
        return self.c_derivs(a, order)[order]

    def lam0_derivs(self, a, order: int = 0) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        d = self.delta
        s = self._taper(np.abs(a), d, 2.0 * d, order)
        sign = np.where(a < 0, -1.0, 1.0)
        return s * sign ** np.arange(order + 1).reshape((-1,) + (1,) * a.ndim)

    def lam0(self, a, order: int = 0):
        return self.lam0_derivs(a, order)[order]

    def lam(self, a, order: int = 0):
        a = np.asarray(a, dtype=float)
        return self.lam0_derivs(a / 10.0, order)[order] / 10.0**order


# ---------------------------------------------------------------------------
# geometric diagnostics
# ---------------------------------------------------------------------------
def chord_shifts(curve: PeriodicInterface):
    """Chord components ``f(alpha_i) - f(alpha_i - beta_j)`` for ``beta_j = j*dalpha``, shape (n, n).

    Row index ``i`` is the node, column ``j`` the shift, ``0 <= j < n``.
    """
    n = curve.n
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    beta = curve.dalpha * np.arange(n)
    p1 = curve.f1 - curve.alpha
    d1 = beta[None, :] + p1[:, None] - p1[idx]
    d2 = curve.f2[:, None] - curve.f2[idx]
    return d1, d2, idx, beta


def arc_chord_sup(curve: PeriodicInterface, denom_floor: float = DENOM_FLOOR) -> float:
    """Discrete sup of ``beta**2 / (cosh(df2) - cos(df1))`` over node pairs.

    ``beta`` is taken in ``(-pi, pi]``.  Returns ``inf`` if a denominator
    drops to ``denom_floor`` away from the diagonal.
    """
    d1, d2, _, beta = chord_shifts(curve)
    beta = np.where(beta > np.pi, beta - 2 * np.pi, beta)
    den = kernel_denominator(d1[:, 1:], d2[:, 1:])
    if np.any(den <= denom_floor):
        return float("inf")
    return float(np.max(beta[None, 1:] ** 2 / den))


def arc_chord_diagonal(curve: PeriodicInterface) -> np.ndarray:
    """The ``beta -> 0`` limit ``2 / |f'|^2`` per node."""
    d = curve.d(1)
    return 2.0 / (d[0] ** 2 + d[1] ** 2)


def _tangent_norm2(d1, d2):
    d1, d2 = np.asarray(d1, dtype=float), np.asarray(d2, dtype=float)
    q = d1 * d1 + d2 * d2
    if np.any(q < TANGENT_FLOOR):
        raise DegenerateTangentError("|f'|^2 below tangent floor")
    return q


def rt_from_tangent(d1, d2, rho_bar: float = 1.0) -> np.ndarray:
    """``rho_bar * d1 / (d1^2 + d2^2)`` for tangent components ``(d1, d2)``."""
    return rho_bar * np.asarray(d1, dtype=float) / _tangent_norm2(d1, d2)


def l2_from_tangent(d1, d2) -> np.ndarray:
    """``2 d1 / (d1^2 + d2^2)`` for tangent components ``(d1, d2)``."""
    return 2.0 * np.asarray(d1, dtype=float) / _tangent_norm2(d1, d2)


def rt_coefficient(curve: PeriodicInterface) -> np.ndarray:
    """Rayleigh-Taylor coefficient ``rho_bar * f1' / |f'|^2`` per node."""
    d = curve.d(1)
    return rt_from_tangent(d[0], d[1], curve.rho_bar)


def l2_coefficient(curve: PeriodicInterface) -> np.ndarray:
    """Diagonal limit ``2 f1' / |f'|^2`` of ``d/dbeta K(f(a)-f(b)) * (a-b)^2``."""
    d = curve.d(1)
    return l2_from_tangent(d[0], d[1])


@dataclass(frozen=True)
class TurnoverSet:
    """Zeros of ``f1'`` with the value of ``f1''`` there, plus the regime label."""

    roots: np.ndarray
    curvature: np.ndarray
    regime: str

    @property
    def count(self) -> int:
        return int(len(self.roots))


def detect_turnovers(curve: PeriodicInterface, root_tol: float = ROOT_TOL) -> TurnoverSet:
    """Locate sign changes of ``f1'`` by bracketing on the grid and Brent refinement."""
    n = curve.n
    a = curve.alpha
    v = curve.d(1)[0]
    c1 = curve.coeffs[0:1]

    def g(x):
        return 1.0 + fourier.evaluate(c1, np.array([x]), 1).real[0, 0]

    roots: List[float] = []
    for i in range(n):
        j = (i + 1) % n
        lo, hi = a[i], a[i] + curve.dalpha
        if v[i] == 0.0:
            if v[i - 1] * v[j] < 0:
                roots.append(a[i])
            continue
        if v[i] * v[j] < 0:
            r = brentq(g, lo, hi, xtol=root_tol * 1e-2, rtol=4 * np.finfo(float).eps)
            roots.append(r)
    roots_arr = np.array(sorted(((r + np.pi) % (2 * np.pi)) - np.pi for r in roots))
    if roots_arr.size > 1:
        keep = np.concatenate([[True], np.diff(roots_arr) >= curve.dalpha / 2])
        roots_arr = roots_arr[keep]
    curv = curve.at(roots_arr, 2)[0] if roots_arr.size else np.zeros(0)
    if roots_arr.size:
        regime = "turnover"
    elif curve.rho_bar * np.min(v) >= 0 or curve.rho_bar == 0:
        regime = "stable"
    else:
        regime = "backward-stable"
    return TurnoverSet(roots_arr, curv, regime)


# ---------------------------------------------------------------------------
# reparameterization
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class VariableChange:
    """``x(a) = a - A sin(a) + Z1`` with ``A = Z2 + pi/2 - Z1``.

    Maps 0 to ``Z1`` and ``-pi/2`` to ``Z2``.  ``dz1``, ``dz2`` are the time
    derivatives of the turnover locations, used for ``x_t``.
    """

    z1: float = 0.0
    z2: float = -np.pi / 2
    dz1: float = 0.0
    dz2: float = 0.0

    @property
    def amplitude(self) -> float:
        return self.z2 + np.pi / 2 - self.z1

    def x(self, a, order: int = 0):
        a = np.asarray(a)
        A = self.amplitude
        if order == 0:
            return a - A * np.sin(a) + self.z1
        if order == 1:
            return 1.0 - A * np.cos(a)
        return -A * _sin_derivative(a, order)

    def x_t(self, a, order: int = 0):
        a = np.asarray(a)
        dA = self.dz2 - self.dz1
        if order == 0:
            return -dA * np.sin(a) + self.dz1
        return -dA * _sin_derivative(a, order)

    def velocity_ratio(self, a):
        """``x_t / x_alpha``."""
        return self.x_t(a) / self.x(a, 1)


def _sin_derivative(a, k):
    return [np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)][k % 4](a)


def change_variable(z1: float, z2: float, alpha=None, n: int = 512):
    """Sample ``x(alpha)`` and ``x_alpha`` for the turnover-relocating map.

    Raises
    ------
    DiffeomorphismError
        If ``x_alpha <= 0`` at any node.
    """
    if alpha is None:
        alpha = fourier.grid(n)
    vc = VariableChange(z1, z2)
    xa = vc.x(alpha, 1)
    if np.any(xa <= 0):
        raise DiffeomorphismError("x_alpha is not positive on the grid")
    return vc.x(alpha), xa


def relocate(curve: PeriodicInterface, vc: VariableChange) -> PeriodicInterface:
    """The composed curve ``f(x(alpha))``, sampled spectrally."""
    if np.any(vc.x(curve.alpha, 1) <= 0):
        raise DiffeomorphismError("x_alpha is not positive on the grid")
    vals = curve.at(vc.x(curve.alpha))
    return curve.with_samples(vals[0], vals[1])


# ---------------------------------------------------------------------------
# local splitting
# ---------------------------------------------------------------------------
class PlusPart:
    """Evaluator for ``f+ = (f~ - T_m f~) lambda0 1_{a >= 0}`` and ``f^L = f~ - f+``.

    ``T_m f~`` is the degree-``m`` Taylor polynomial at 0.  At complex
    points (used on the deformed contour, where ``0 <= Re z <= delta``) the
    cutoff equals 1 and ``f+`` is continued as ``f~ - T_m f~``.
    """

    def __init__(self, curve: PeriodicInterface, profiles: ProfileSet, m: int):
        if m > curve.n // 4:
            raise ValidationError("taylor order m must not exceed n/4")
        self.curve = curve
        self.profiles = profiles
        self.m = m
        taylor = np.stack([curve.at(np.array(0.0), k) for k in range(m + 1)], axis=-1)
        if not np.all(np.isfinite(taylor)) or np.max(np.abs(taylor)) > TAYLOR_GUARD:
            raise InsufficientSmoothnessError("taylor coefficients at 0 overflow")
        self.taylor = taylor  # (2, m+1): f~^(k)(0)

    def poly(self, z, order: int = 0):
        z = np.asarray(z)
        out = np.zeros((2,) + z.shape, dtype=np.result_type(z, float))
        for k in range(order, self.m + 1):
            p = k - order
            out += self.taylor[:, k].reshape(2, *(1,) * z.ndim) * (z**p / factorial(p))
        return out

    def full(self, z, order: int = 0):
        return self.curve.at(z, order)

    def remainder(self, z, order: int = 0):
        return self.full(z, order) - self.poly(z, order)

    def plus(self, z, order: int = 0):
        """``f+`` and its derivatives at real or complex points."""
        z = np.asarray(z)
        if np.iscomplexobj(z) and np.any(z.imag != 0):
            re = z.real
            if np.any(((re < 0) | (re > self.profiles.delta)) & (z.imag != 0)):
                raise SupportViolationError("complex points must satisfy 0 <= Re z <= delta")
            out = np.zeros((2,) + z.shape, dtype=complex)
            cplx = z.imag != 0
            out[:, cplx] = self.remainder(z[cplx], order)
            out[:, ~cplx] = self._plus_real(re[~cplx], order)
            return out
        return self._plus_real(np.real(z), order)

    def _plus_real(self, a, order):
        a = np.asarray(a, dtype=float)
        out = np.zeros((2,) + a.shape)
        pos = (a >= 0) & (a < 2 * self.profiles.delta)
        if not np.any(pos):
            return out
        ap = a[pos]
        lam = self.profiles.lam0_derivs(ap, order)
        acc = np.zeros((2, ap.size))
        for j in range(order + 1):
            acc += comb(order, j) * self.remainder(ap, j) * lam[order - j]
        out[:, pos] = acc
        return out

    def low(self, z, order: int = 0):
        return self.full(z, order) - self.plus(z, order)


def split_plus(curve: PeriodicInterface, profiles: ProfileSet, m: int = 2):
    """Grid samples of ``(f+, f^L)``, each of shape (2, n).

    ``f^L`` is computed as ``f~ - f+`` so that reconstruction is exact at
    the nodes.
    """
    pp = PlusPart(curve, profiles, m)
    fp = pp.plus(curve.alpha)
    fl = np.stack([curve.f1, curve.f2]) - fp
    return fp, fl
