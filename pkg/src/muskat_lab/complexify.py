"""Complex-contour machinery around a turnover point.

Nodes ``alpha + tau + i c(alpha + tau) gamma t`` deform the real line into
the upper or lower half plane near the turnover; functions are continued
there by evaluating their Fourier series.  This module holds the transport
functionals ``kappa`` and ``tau``, the extension itself, the Cauchy-Riemann
residual ``A(h)``, the commuting check for ``D^{-1}`` and the Fourier-decay
estimate of the analyticity strip.  The modified equation and the
regularized operators live in :mod:`muskat_lab.modified` and are
re-exported here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson

from . import fourier
from .curve import PeriodicInterface, ProfileSet, VariableChange, kernel
from .errors import (DegenerateArgumentError, InsufficientModesError, SignChangeError,
                     StripExceededError, ValidationError)
from .quadrature import AntiderivativeStack, OneSidedInterpolant, d_minus

NOISE_FLOOR = 1e-13
STRIP_SAFETY = 1.2
TOL_COMMUTE = 1e-6


# ---------------------------------------------------------------------------
# transport functionals
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TransportState:
    """``kappa(t)``, the shift ``tau(t)``, and the sign of ``kappa(0)``."""

    kappa: float
    tau: float
    kappa0_sign: int
    tau_prime: float = 0.0

    def __post_init__(self):
        if self.kappa0_sign not in (1, -1):
            raise ValidationError("kappa0_sign must be +1 or -1")
        if self.kappa0_sign > 0 and self.tau != 0.0:
            raise ValidationError("tau must vanish when kappa(0) > 0")
        if self.tau < 0:
            raise ValidationError("tau must be nonnegative")


def pv_chord_integral(curve: PeriodicInterface, z: float) -> float:
    """``p.v. int K(f(z) - f(beta)) dbeta`` over one period, ``z`` arbitrary real.

    Uses the alternating rule on offsets ``s = beta - z`` at odd multiples of
    the grid spacing; the curve is sampled there by Fourier evaluation.
    """
    n = curve.n
    j = np.arange(-n // 2 + 1, n // 2 + 1)
    s = j[j % 2 != 0] * curve.dalpha
    fz = curve.at(np.array([z]))[:, 0]
    fb = curve.at(z + s)
    d1 = fz[0] - fb[0]
    d2 = fz[1] - fb[1]
    return float(np.sum(kernel(d1, d2)) * 2.0 * curve.dalpha)


def kappa_eval(curve: PeriodicInterface, dz1dt: float, x_map: VariableChange) -> float:
    """``kappa = (dZ1/dt + rho_bar * p.v. int K(f(Z1) - f(beta)) dbeta) / x_alpha(0)``.

    Raises
    ------
    DegenerateArgumentError
        If ``x_alpha(0) <= 0``.
    """
    xa0 = float(x_map.x(0.0, 1))
    if xa0 <= 0:
        raise DegenerateArgumentError("x_alpha(0) must be positive")
    return (dz1dt + curve.rho_bar * pv_chord_integral(curve, x_map.z1)) / xa0


def turnover_velocity(curve: PeriodicInterface, z: float, rhs=None) -> float:
    """``dZ/dt = -d_t f1'(Z) / f1''(Z)`` for a moving zero of ``f1'``."""
    from .evolution import muskat_rhs

    if rhs is None:
        rhs = muskat_rhs(curve)
    dt_fp = fourier.evaluate(fourier.coefficients(rhs[0]), np.array([z]), 1).real[0]
    return float(-dt_fp / curve.at(np.array([z]), 2)[0, 0])


def kappa_from_curve(curve: PeriodicInterface, z1: float, z2: float) -> float:
    from .evolution import muskat_rhs

    rhs = muskat_rhs(curve)
    vc = VariableChange(z1, z2, turnover_velocity(curve, z1, rhs), turnover_velocity(curve, z2, rhs))
    return kappa_eval(curve, vc.dz1, vc)


def tau_eval(kappa_series, times=None, t: Optional[float] = None) -> Tuple[float, float]:
    """Shift ``tau(t)`` and its derivative from sampled ``kappa`` on ``[0, t]``.

    ``tau = 0`` when ``kappa(0) > 0``; otherwise ``tau = -int_0^t kappa``
    by composite Simpson and ``tau' = -kappa(t)``.

    Raises
    ------
    SignChangeError
        If the samples change sign or ``kappa(0) == 0``.
    """
    k = np.atleast_1d(np.asarray(kappa_series, dtype=float))
    if times is None:
        if t is None:
            raise ValidationError("give either times or t")
        times = np.linspace(0.0, t, k.size)
    times = np.asarray(times, dtype=float)
    if k[0] == 0 or np.any(np.sign(k) != np.sign(k[0])):
        raise SignChangeError("kappa changes sign or vanishes on the sample")
    if k[0] > 0:
        return 0.0, 0.0
    if k.size == 1:
        return 0.0, float(-k[0])
    return float(-simpson(k, x=times)), float(-k[-1])


def transport_state(kappa_series, times) -> TransportState:
    tau, tp = tau_eval(kappa_series, times)
    k = np.atleast_1d(kappa_series)
    return TransportState(float(k[-1]), tau, 1 if k[0] > 0 else -1, tp)


# ---------------------------------------------------------------------------
# nodes and extension
# ---------------------------------------------------------------------------
def complex_nodes(profiles: ProfileSet, tau: float, gamma, t: float, alpha) -> np.ndarray:
    """``alpha + tau + i c(alpha + tau) gamma t``; broadcasts ``gamma`` against ``alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    s = alpha + tau
    return s + 1j * profiles.c(s) * np.asarray(gamma) * t


@dataclass(frozen=True)
class StripEstimate:
    width: float
    fit_range: Tuple[int, int]
    residual: float
    large_residual: bool = False


def strip_estimate(spectrum, noise_floor: float = NOISE_FLOOR, min_modes: int = 8,
                   residual_flag: float = 0.5) -> StripEstimate:
    """Fit ``log max(|c_k|, |c_-k|) ~ a - d k`` over modes above ``noise_floor``.

    ``spectrum`` is in FFT order.  The width ``d`` is clipped at 0.

    Raises
    ------
    InsufficientModesError
        If fewer than ``min_modes`` positive wavenumbers clear the floor.
    """
    c = np.asarray(spectrum)
    n = c.shape[-1]
    kmax = n // 2 - 1
    k = np.arange(1, kmax + 1)
    mag = np.maximum(np.abs(c[k]), np.abs(c[-k]))
    keep = mag > noise_floor
    if keep.sum() < min_modes:
        raise InsufficientModesError(f"only {int(keep.sum())} modes above the noise floor")
    kk = k[keep].astype(float)
    y = np.log(mag[keep])
    A = np.stack([np.ones_like(kk), -kk], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return StripEstimate(max(0.0, float(coef[1])), (int(kk[0]), int(kk[-1])), rms, rms > residual_flag)


def _coeffs_and_trend(source):
    if isinstance(source, PeriodicInterface):
        return source.coeffs, np.array([1.0, 0.0])
    c = np.asarray(source)
    return c, np.zeros(c.shape[:-1])


def fourier_extend(source, nodes, strip_width: Optional[float] = None,
                   safety: float = STRIP_SAFETY) -> np.ndarray:
    """Evaluate a periodic function (coefficient array) or a curve at complex nodes.

    For a :class:`PeriodicInterface` the linear part of ``f1`` is added back
    and the result has shape ``(2,) + nodes.shape``.

    Raises
    ------
    StripExceededError
        If ``safety * max|Im nodes|`` reaches the estimated strip width.
    """
    coeffs, trend = _coeffs_and_trend(source)
    nodes = np.asarray(nodes)
    if strip_width is None:
        widths = []
        for row in np.atleast_2d(coeffs):
            try:
                widths.append(strip_estimate(row).width)
            except InsufficientModesError:
                widths.append(np.inf)  # effectively band-limited
        strip_width = min(widths)
    ymax = float(np.max(np.abs(np.imag(nodes)))) if nodes.size else 0.0
    if ymax > 0 and safety * ymax >= strip_width:
        raise StripExceededError(f"contour height {ymax:g} exceeds strip {strip_width:g}/{safety}")
    out = fourier.evaluate(coeffs, nodes)
    if np.any(trend):
        out = out + trend.reshape(trend.shape + (1,) * nodes.ndim) * nodes
    return out


@dataclass(frozen=True, eq=False)
class ComplexExtensionField:
    """Samples ``h(alpha, gamma)`` on the product of the periodic grid and uniform gamma nodes.

    ``alpha_trend`` is the coefficient of the nonperiodic linear part in
    ``alpha`` (1 for the first curve component, 0 otherwise).
    """

    h: np.ndarray
    t: float
    profiles: ProfileSet = field(default_factory=ProfileSet)
    tau: float = 0.0
    m: int = 2
    alpha_trend: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        if h.ndim not in (2, 3):
            raise ValidationError("h must have shape ([2,] n_gamma, n_alpha)")
        if h.shape[-2] < 5 or h.shape[-2] % 2 == 0:
            raise ValidationError("n_gamma must be odd and >= 5")
        object.__setattr__(self, "h", h)

    @property
    def n_gamma(self) -> int:
        return self.h.shape[-2]

    @property
    def n_alpha(self) -> int:
        return self.h.shape[-1]

    @property
    def gamma_nodes(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.n_gamma)

    @property
    def alpha(self) -> np.ndarray:
        return fourier.grid(self.n_alpha)

    def row(self, gamma_index: int) -> np.ndarray:
        return self.h[..., gamma_index, :]


def extend_field(source, profiles: ProfileSet, t: float, n_alpha: int = 512, n_gamma: int = 9,
                 tau: float = 0.0, component: int = 1, m: int = 2,
                 strip_width: Optional[float] = None) -> ComplexExtensionField:
    """Build ``h(alpha, gamma) = u(alpha + tau + i c(alpha + tau) gamma t)`` by Fourier evaluation."""
    alpha = fourier.grid(n_alpha)
    gam = np.linspace(-1.0, 1.0, n_gamma)
    nodes = complex_nodes(profiles, tau, gam[:, None], t, alpha[None, :])
    vals = fourier_extend(source, nodes, strip_width)
    trend = 0.0
    if isinstance(source, PeriodicInterface):
        vals = vals[component]
        trend = 1.0 if component == 0 else 0.0
    return ComplexExtensionField(vals, t, profiles, tau, m, trend)


# ---------------------------------------------------------------------------
# Cauchy-Riemann residual
# ---------------------------------------------------------------------------
def gamma_derivative(h, dgamma: float) -> np.ndarray:
    """Fourth-order central difference along axis -2 at rows ``2 .. n-3``."""
    h = np.asarray(h)
    return (-h[..., 4:, :] + 8.0 * h[..., 3:-1, :] - 8.0 * h[..., 1:-3, :] + h[..., :-4, :]) / (12.0 * dgamma)


def alpha_derivative(h, trend: float = 0.0, method: str = "spectral", start: Optional[float] = None,
                     alpha=None) -> np.ndarray:
    """``d/dalpha`` along the last axis.

    ``spectral`` differentiates ``h - trend * alpha`` as a periodic function;
    ``local`` uses degree-7 one-sided-safe interpolation anchored at ``start``
    (for data vanishing left of ``start``, not necessarily periodic).
    """
    h = np.asarray(h)
    n = h.shape[-1]
    if alpha is None:
        alpha = fourier.grid(n)
    if method == "spectral":
        return fourier.derivative(h - trend * alpha, 1) + trend
    if method == "local":
        if start is None:
            start = alpha[0]
        out = np.empty_like(h, dtype=complex)
        for idx in np.ndindex(h.shape[:-1]):
            out[idx] = OneSidedInterpolant(alpha, h[idx], start)(alpha, 1)
        return out
    raise ValidationError(f"unknown derivative method {method!r}")


def a_operator(h, profiles: ProfileSet, t: float, tau: float = 0.0, trend: float = 0.0,
               method: str = "spectral", start: Optional[float] = None) -> np.ndarray:
    """``A(h) = i c t / (1 + i c' gamma t) dh/dalpha - dh/dgamma`` at interior gamma rows.

    ``h`` has shape (n_gamma, n_alpha) on uniform gamma nodes in [-1, 1];
    the result has shape (n_gamma - 4, n_alpha).  A leading component axis
    is allowed, with ``trend`` then given per component.
    """
    h = np.asarray(h)
    ng, n = h.shape[-2:]
    alpha = fourier.grid(n)
    gam = np.linspace(-1.0, 1.0, ng)
    c = profiles.c(alpha + tau)
    cp = profiles.c(alpha + tau, 1)
    trend = np.reshape(trend, np.shape(trend) + (1, 1))
    da = alpha_derivative(h[..., 2:-2, :], trend, method, start)
    dg = gamma_derivative(h, gam[1] - gam[0])
    g = gam[2:-2, None]
    return 1j * c * t / (1.0 + 1j * cp * g * t) * da - dg


def a_residual(field: ComplexExtensionField, method: str = "spectral") -> np.ndarray:
    """Cauchy-Riemann residual of an extension field at interior gamma rows."""
    return a_operator(field.h, field.profiles, field.t, field.tau, field.alpha_trend, method)


def commute_check(h: Callable, stack: AntiderivativeStack, n: int = 512, n_gamma: int = 9,
                  depth: int = 1, alpha_window: Optional[Tuple[float, float]] = None) -> float:
    """``max |A(D^{-i} h) - D^{-i}(A h)|`` over interior gamma rows and an alpha window.

    ``h(alpha, gamma)`` is a callable vanishing for ``alpha <= -tau``; both
    ``A`` applications differentiate in alpha with one-sided-safe local
    stencils anchored at ``-tau``.
    """
    alpha = fourier.grid(n)
    gam = np.linspace(-1.0, 1.0, n_gamma)
    H = np.stack([np.asarray(h(alpha, g), dtype=complex) for g in gam])
    p = stack.profiles

    def D(rows, gams):
        return np.stack([d_minus(r, AntiderivativeStack(depth, stack.tau, float(g), stack.t, p), alpha)
                         for r, g in zip(rows, gams)])

    start = -stack.tau
    lhs = a_operator(D(H, gam), p, stack.t, stack.tau, method="local", start=start)
    Ah = a_operator(H, p, stack.t, stack.tau, method="local", start=start)
    rhs = D(Ah, gam[2:-2])
    if alpha_window is None:
        alpha_window = (start, np.pi - 0.25)
    sel = (alpha >= alpha_window[0]) & (alpha <= alpha_window[1])
    return float(np.max(np.abs(lhs - rhs)[:, sel]))


# ---------------------------------------------------------------------------
# local strip widths around the turnover
# ---------------------------------------------------------------------------
def local_strip_widths(curve: PeriodicInterface, centers, window: float = 0.4) -> np.ndarray:
    """Strip-width estimates of ``f2`` times a periodized Gaussian window at each center."""
    a = curve.alpha
    out = np.full(len(centers), np.nan)
    for i, xc in enumerate(centers):
        d = np.angle(np.exp(1j * (a - xc)))
        w = np.exp(-0.5 * (d / window) ** 2)
        try:
            out[i] = strip_estimate(fourier.coefficients(curve.f2 * w)).width
        except InsufficientModesError:
            out[i] = np.inf
    return out


def cusp_fit(curve: PeriodicInterface, z1: float, half_width: float = 0.6, points: int = 9):
    """Least-squares fit ``d(x) ~ eps2 (x - Z1)^2 + d0`` of local strip widths.

    Returns ``(eps2, d0)``; NaN when fewer than three finite widths exist.
    Empirical diagnostic only.
    """
    xs = z1 + np.linspace(-half_width, half_width, points)
    d = local_strip_widths(curve, xs)
    ok = np.isfinite(d)
    if ok.sum() < 3:
        return float("nan"), float("nan")
    A = np.stack([(xs[ok] - z1) ** 2, np.ones(ok.sum())], axis=1)
    coef, *_ = np.linalg.lstsq(A, d[ok], rcond=None)
    return float(coef[0]), float(coef[1])


from .modified import (TurnoverContext, eps_operator_apply, modified_rhs_compact,  # noqa: E402
                       refined_rt_check, regularized_flow)
