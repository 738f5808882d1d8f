"""Integral operators.

Principal values on the periodic grid use the alternating-point trapezoid
rule: with the singular node excluded, only nodes at an odd offset from it
are used, each with weight ``2*dalpha``.  For an integrand ``k(a-b) g(b)``
with ``k`` odd and ``g`` analytic this is spectrally accurate, while the
plain omit-one-node rule only converges at first order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial
from typing import Callable, Union

import numpy as np

from . import fourier
from .curve import ProfileSet
from .errors import SupportViolationError, ValidationError

KernelSpec = Union[str, Callable, np.ndarray]


# ---------------------------------------------------------------------------
# principal values and the Hilbert transform
# ---------------------------------------------------------------------------
def _wrapped_offsets(n: int, index: int) -> np.ndarray:
    """``alpha_index - beta_j`` wrapped into (-pi, pi]."""
    j = np.arange(n)
    off = (index - j) % n
    off = np.where(off > n // 2, off - n, off)
    return off * (2.0 * np.pi / n)


def alternating_mask(n: int, index: int) -> np.ndarray:
    return ((np.arange(n) - index) % 2).astype(bool)


def pv_integral(g, index: int, kernel: KernelSpec = "cot") -> complex:
    """Principal value of ``int k(alpha - beta) g(beta) dbeta`` over one period.

    Parameters
    ----------
    g : array_like
        Samples on the periodic grid.
    index : int
        Grid index of the singular point ``alpha``.
    kernel : {'cot', 'cauchy'}, callable or array
        ``'cot'`` is ``cot((alpha-beta)/2)``, ``'cauchy'`` is
        ``1/(alpha-beta)`` with the difference wrapped to (-pi, pi].  A
        callable receives the wrapped difference; an array gives kernel values
        at the nodes directly.
    """
    g = np.asarray(g)
    n = g.shape[-1]
    s = _wrapped_offsets(n, index)
    mask = alternating_mask(n, index)
    if isinstance(kernel, str):
        with np.errstate(divide="ignore"):
            if kernel == "cot":
                k = 1.0 / np.tan(0.5 * s[mask])
            elif kernel == "cauchy":
                k = 1.0 / s[mask]
            else:
                raise ValidationError(f"unknown kernel {kernel!r}")
    elif callable(kernel):
        k = kernel(s[mask])
    else:
        k = np.asarray(kernel)[..., mask]
    return np.sum(k * g[..., mask], axis=-1) * (4.0 * np.pi / n)


def hilbert_transform(g) -> np.ndarray:
    """Periodic Hilbert transform, Fourier symbol ``-i sgn(k)``.

    The symbol is 0 on the mean and, for even sizes, on the Nyquist mode,
    so real input stays real.
    """
    g = np.asarray(g)
    n = g.shape[-1]
    symbol = -1j * np.sign(fourier.wavenumbers(n)).astype(complex)
    if n % 2 == 0:
        symbol[n // 2] = 0.0
    out = np.fft.ifft(np.fft.fft(g, axis=-1) * symbol, axis=-1)
    return out.real if np.isrealobj(g) else out


# ---------------------------------------------------------------------------
# regularized kernels
# ---------------------------------------------------------------------------
def reg_kernel_smooth(alpha, beta, eps):
    """``1 / ((alpha-beta)^2 + eps^2)``."""
    d = np.asarray(alpha) - np.asarray(beta)
    return 1.0 / (d * d + eps * eps)


def reg_kernel_transport(alpha, beta, eps):
    """``(alpha-beta) eps / ((alpha-beta)^2 + eps^2)^2``."""
    d = np.asarray(alpha) - np.asarray(beta)
    return d * eps / (d * d + eps * eps) ** 2


@dataclass(frozen=True)
class RegularizationParams:
    eps: float = 1e-2
    k_order: int = 1

    def __post_init__(self):
        if not (0 < self.eps <= 1):
            raise ValidationError("eps must lie in (0, 1]")
        if not (1 <= self.k_order <= 12):
            raise ValidationError("k_order must lie in [1, 12]")


# ---------------------------------------------------------------------------
# Gauss-Legendre panels
# ---------------------------------------------------------------------------
@lru_cache(maxsize=None)
def _gl(order: int):
    return np.polynomial.legendre.leggauss(order)


def gauss_panels(breaks, order: int = 16):
    """Composite Gauss-Legendre nodes and weights on consecutive ``breaks``."""
    b = np.asarray(breaks, dtype=float)
    b = b[np.concatenate([[True], np.diff(b) > 0])]
    x, w = _gl(order)
    lo, hi = b[:-1, None], b[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_breaks(length: float, scale: float, levels: int = 10, ratio: float = 2.0,
                  max_panel: float | None = None):
    """Breakpoints on ``[0, length]`` refined geometrically toward 0.

    The smallest panel is ``scale / ratio**levels``; beyond ``scale`` the
    panels grow geometrically, capped at ``max_panel``.
    """
    if length <= 0:
        return np.array([0.0, 0.0])
    pts = [0.0]
    x = scale / ratio**levels
    cap = max_panel if max_panel is not None else np.inf
    while x < length:
        pts.append(x)
        step = min(x * (ratio - 1.0), cap)
        x = x + step if x >= scale else x * ratio
    pts.append(length)
    return np.array(pts)


# ---------------------------------------------------------------------------
# boundary corrections for the regularized operators
# ---------------------------------------------------------------------------
def pv_monomial_window(j: int, alpha) -> np.ndarray:
    """Closed form of ``p.v. int_0^{2 alpha} (alpha^j - beta^j)/j! / (alpha-beta)^2 dbeta``."""
    alpha = np.asarray(alpha, dtype=float)
    if j == 0:
        return np.zeros_like(alpha)
    acc = sum(comb(j, l) / (l - 1) for l in range(2, j + 1, 2))
    return -2.0 * alpha ** (j - 1) * acc / factorial(j)


def b_correction(j: int, flavor: int, alpha, eps: float, order: int = 16) -> np.ndarray:
    """Boundary correction coefficients of the regularized operators.

    Flavor 1::

        (2/pi) int_0^{2a} (a^j - b^j)/j! (a-b) eps / ((a-b)^2+eps^2)^2 db - a^(j-1)/(j-1)!

    Flavor 2::

        int_0^{2a} (a^j - b^j)/j! / ((a-b)^2+eps^2) db
            - p.v. int_0^{2a} (a^j - b^j)/j! / (a-b)^2 db

    Both vanish for ``j = 0``.  The integrals are symmetrized about
    ``beta = alpha`` (``s = alpha - beta``) so that only the terms of the
    binomial expansion with the right parity survive, and are evaluated on
    Gauss-Legendre panels graded toward ``s = 0`` at scale ``eps``.
    """
    if flavor not in (1, 2):
        raise ValidationError("flavor must be 1 or 2")
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.zeros_like(alpha)
    if j == 0:
        return out
    for idx, a in enumerate(alpha):
        if a <= 0:
            out[idx] = 0.0 if flavor == 2 or j > 1 else -1.0
            continue
        s, w = gauss_panels(graded_breaks(a, eps, max_panel=min(eps, a) * 4), order)
        if flavor == 1:
            # (alpha^j - (alpha-s)^j) - (alpha^j - (alpha+s)^j) = 2 sum_{l odd} C a^{j-l} s^l
            poly = sum(comb(j, l) * a ** (j - l) * s**l for l in range(1, j + 1, 2))
            val = (2.0 / np.pi) * np.sum(w * 2.0 * poly * s * eps / (s * s + eps * eps) ** 2)
            out[idx] = val / factorial(j) - a ** (j - 1) / factorial(j - 1)
        else:
            # 1/(s^2+eps^2) - 1/s^2 = -eps^2 / (s^2 (s^2+eps^2)), paired over +-s
            poly = sum(comb(j, l) * a ** (j - l) * s ** (l - 2) for l in range(2, j + 1, 2))
            out[idx] = np.sum(w * 2.0 * eps * eps * poly / (s * s + eps * eps)) / factorial(j)
    return out


# ---------------------------------------------------------------------------
# cumulative quadrature and local interpolation with a support boundary
# ---------------------------------------------------------------------------
def _stencil_start(k, npts, p):
    return int(np.clip(k - (p - 1) // 2, 0, npts - 1 - p))


class _WeightCache:
    def __init__(self):
        self.store = {}

    def interval(self, u, length):
        key = (tuple(np.round(u, 10)), round(length, 10))
        w = self.store.get(key)
        if w is None:
            p = len(u) - 1
            V = np.vander(u, p + 1, increasing=True).T
            mom = np.array([length ** (q + 1) / (q + 1) for q in range(p + 1)])
            w = np.linalg.solve(V, mom)
            self.store[key] = w
        return w


_CACHE = _WeightCache()


def cumulative_local(x, y, degree: int = 7) -> np.ndarray:
    """Running integral ``int_{x_0}^{x_k} y`` from local degree-``degree`` interpolants.

    Each interval is integrated exactly against the interpolating polynomial
    on the ``degree + 1`` nearest nodes, so the rule is of order
    ``degree + 1``.  ``degree = 2`` is a cumulative Simpson-type rule.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    npts = x.size
    p = min(degree, npts - 1)
    if npts < 2:
        return np.zeros_like(y, dtype=np.result_type(y, float))
    seg = np.zeros(npts - 1, dtype=np.result_type(y, float))
    hs = np.median(np.diff(x))
    for k in range(npts - 1):
        st = _stencil_start(k, npts, p)
        u = (x[st:st + p + 1] - x[k]) / hs
        w = _CACHE.interval(u, (x[k + 1] - x[k]) / hs)
        seg[k] = hs * np.dot(w, y[st:st + p + 1])
    return np.concatenate([[0.0], np.cumsum(seg)])


class OneSidedInterpolant:
    """Local polynomial interpolation of samples that vanish left of ``start``.

    The knots are ``start`` (value ``start_value``) followed by the uniform
    grid nodes strictly to its right; stencils never reach across ``start``.
    """

    def __init__(self, grid, values, start: float, degree: int = 7, start_value=0.0):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values)
        right = grid > start + 1e-13
        self.x = np.concatenate([[start], grid[right]])
        self.y = np.concatenate([[start_value], values[right]])
        self.start = start
        self.p = min(degree, self.x.size - 1)

    def __call__(self, xq, deriv: int = 0):
        xq = np.asarray(xq, dtype=float)
        flat = xq.ravel()
        out = np.zeros(flat.shape, dtype=np.result_type(self.y, float))
        inside = (flat >= self.start) & (flat <= self.x[-1] + 1e-12)
        if np.any(inside):
            xs = flat[inside]
            k = np.clip(np.searchsorted(self.x, xs, side="right") - 1, 0, self.x.size - 2)
            st = np.clip(k - (self.p - 1) // 2, 0, self.x.size - 1 - self.p)
            idx = st[:, None] + np.arange(self.p + 1)[None, :]
            nodes = self.x[idx]
            vals = self.y[idx]
            out[inside] = _lagrange_eval(nodes, vals, xs, deriv)
        return out.reshape(xq.shape)


def lagrange_weights(nodes, xq, deriv: int = 0) -> np.ndarray:
    """Lagrange basis values (``deriv`` 0) or first derivatives (``deriv`` 1) at ``xq``.

    ``nodes`` has shape (npts, p+1), one stencil per query point.
    """
    npts, q = nodes.shape
    d = xq[:, None] - nodes
    diff = nodes[:, :, None] - nodes[:, None, :]
    eye = np.eye(q, dtype=bool)
    diff = np.where(eye[None], 1.0, diff)
    denom = np.prod(diff, axis=2)
    if deriv == 0:
        num = np.empty((npts, q))
        for i in range(q):
            num[:, i] = np.prod(np.delete(d, i, axis=1), axis=1)
        return num / denom
    if deriv != 1:
        raise ValidationError("only first derivatives are supported")
    num = np.zeros((npts, q))
    for i in range(q):
        others = [j for j in range(q) if j != i]
        for k in others:
            rest = [j for j in others if j != k]
            num[:, i] += np.prod(d[:, rest], axis=1)
    return num / denom


def _lagrange_eval(nodes, vals, xq, deriv):
    return np.sum(lagrange_weights(nodes, xq, deriv) * vals, axis=1)


# ---------------------------------------------------------------------------
# weighted antiderivatives
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class AntiderivativeStack:
    """Parameters of ``D^{-i}``: depth ``i``, shift ``tau``, contour height ``gamma t``."""

    depth: int = 1
    tau: float = 0.0
    gamma: float = 0.0
    t: float = 0.0
    profiles: ProfileSet = field(default_factory=ProfileSet)

    def __post_init__(self):
        if self.depth < 1:
            raise ValidationError("depth must be >= 1")
        if self.tau < 0:
            raise ValidationError("tau must be nonnegative")
        if not -1.0 <= self.gamma <= 1.0:
            raise ValidationError("gamma must lie in [-1, 1]")

    def weight(self, alpha):
        """``1 + i c'(alpha + tau) gamma t``."""
        return 1.0 + 1j * self.profiles.c(np.asarray(alpha) + self.tau, 1) * self.gamma * self.t

    def contour(self, alpha):
        """``alpha + i c(alpha + tau) gamma t`` (the antiderivative of the weight)."""
        return np.asarray(alpha) + 1j * self.profiles.c(np.asarray(alpha) + self.tau) * self.gamma * self.t


def d_minus(h, stack: AntiderivativeStack, alpha=None, degree: int = 7,
            support_tol: float = 1e-12) -> np.ndarray:
    """Iterated weighted antiderivative ``D^{-i} h`` on a uniform grid.

    ``D^{-1} h(a) = int_{-tau}^{a} (1 + i c'(s+tau) gamma t) h(s) ds`` for
    ``a > -tau`` and 0 otherwise; ``D^{-i}`` is the ``i``-fold composition.
    The first partial cell ``[-tau, first node]`` enters through the local
    interpolant anchored at ``-tau``.

    Raises
    ------
    SupportViolationError
        If ``|h| > support_tol`` at a node with ``alpha <= -tau``.
    """
    h = np.asarray(h)
    if alpha is None:
        alpha = fourier.grid(h.shape[-1])
    alpha = np.asarray(alpha, dtype=float)
    start = -stack.tau
    left = alpha < start - 1e-13
    if np.any(np.abs(h[left]) > support_tol):
        raise SupportViolationError("h does not vanish left of -tau")
    on = np.abs(alpha - start) <= 1e-13
    right = alpha > start + 1e-13
    xr, hr = alpha[right], h[right]
    if np.any(on):
        h0 = h[on][0]
    else:
        # right limit at -tau by extrapolating the nearest right nodes
        q = min(degree, xr.size - 1)
        h0 = _lagrange_eval(xr[None, :q + 1], hr[None, :q + 1].astype(complex),
                            np.array([start]), 0)[0]
    x = np.concatenate([[start], xr])
    w = stack.weight(x)
    cur = np.concatenate([[h0], hr]).astype(complex)
    for _ in range(stack.depth):
        cur = cumulative_local(x, w * cur, degree)
    out = np.zeros(alpha.shape, dtype=complex)
    out[right] = cur[1:]
    return out


def d_minus_pointwise(h: Callable, stack: AntiderivativeStack, alpha, order: int = 24):
    """Reference ``D^{-i}`` by the Cauchy formula for repeated integration.

    ``D^{-i} h(b) = int_{-tau}^{b} h(s) (W(b) - W(s))^{i-1}/(i-1)! W'(s) ds``
    with ``W`` the contour map; evaluated by Gauss-Legendre panels.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.zeros(alpha.shape, dtype=complex)
    start = -stack.tau
    i = stack.depth
    p = stack.profiles
    kinks = np.array([p.c_core, p.c_support]) - stack.tau
    for idx, b in enumerate(alpha):
        if b <= start:
            continue
        br = np.unique(np.concatenate([[start, b], kinks[(kinks > start) & (kinks < b)]]))
        br = np.unique(np.concatenate([br, np.linspace(start, b, 9)]))
        s, w = gauss_panels(br, order)
        Ws = stack.contour(s)
        Wb = stack.contour(np.array(b))
        out[idx] = np.sum(w * h(s) * (Wb - Ws) ** (i - 1) / factorial(i - 1) * stack.weight(s))
    return out
