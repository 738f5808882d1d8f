"""Fourier helpers for 2*pi-periodic samples on the grid alpha_j = -pi + j*2*pi/n.

Coefficients are referenced to the origin, ``u(a) = sum_k c_k exp(i k a)``,
so that evaluation at complex points is a plain sum.  The Nyquist mode is
split symmetrically between +n/2 and -n/2, which keeps the interpolant of
real data real and makes odd derivatives vanish at that mode.
"""
from __future__ import annotations

import numpy as np

CHUNK = 4096


def grid(n: int) -> np.ndarray:
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def wavenumbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, 1.0 / n)


def coefficients(u) -> np.ndarray:
    """Origin-referenced Fourier coefficients along the last axis (FFT order)."""
    u = np.asarray(u)
    n = u.shape[-1]
    k = wavenumbers(n)
    return np.fft.fft(u, axis=-1) / n * np.cos(np.pi * k)


def samples(c) -> np.ndarray:
    """Inverse of :func:`coefficients`."""
    c = np.asarray(c)
    n = c.shape[-1]
    k = wavenumbers(n)
    return np.fft.ifft(c * np.cos(np.pi * k) * n, axis=-1)


def derivative(u, order: int = 1) -> np.ndarray:
    """Spectral derivative on the grid (real in, real out)."""
    u = np.asarray(u)
    if order == 0:
        return u.copy()
    n = u.shape[-1]
    k = wavenumbers(n)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[n // 2] = 0.0
    out = np.fft.ifft(np.fft.fft(u, axis=-1) * mult, axis=-1)
    return out.real if np.isrealobj(u) else out


def evaluate(c, z, order: int = 0) -> np.ndarray:
    """Evaluate the ``order``-th derivative of the series with coefficients ``c`` at ``z``.

    ``c`` has shape (..., n); the result has shape ``c.shape[:-1] + z.shape``.
    ``z`` may be complex.
    """
    c = np.asarray(c)
    z = np.asarray(z)
    n = c.shape[-1]
    k = wavenumbers(n)
    nyq = n // 2
    # symmetric Nyquist: use +n/2 and -n/2 with half weight each
    kk = np.concatenate([k, [float(nyq)]])
    cc = np.concatenate([c, c[..., nyq:nyq + 1]], axis=-1).astype(complex)
    cc[..., nyq] *= 0.5
    cc[..., -1] *= 0.5
    cc = cc * (1j * kk) ** order
    lead = c.shape[:-1]
    flat = z.reshape(-1)
    out = np.empty(lead + flat.shape, dtype=complex)
    cm = cc.reshape(-1, n + 1).T
    for s in range(0, flat.size, CHUNK):
        zz = flat[s:s + CHUNK]
        e = np.exp(1j * np.outer(zz, kk))
        out.reshape(-1, flat.size)[:, s:s + CHUNK] = (e @ cm).T
    return out.reshape(lead + z.shape)


def dealias(u, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Zero the modes with |k| > fraction * n / 2."""
    u = np.asarray(u)
    n = u.shape[-1]
    k = np.abs(wavenumbers(n))
    uh = np.fft.fft(u, axis=-1)
    uh[..., k > fraction * n / 2] = 0.0
    out = np.fft.ifft(uh, axis=-1)
    return out.real if np.isrealobj(u) else out


def resample(u, m: int) -> np.ndarray:
    """Trigonometric interpolation of grid samples onto a grid of size ``m``."""
    c = coefficients(u)
    return evaluate(c, grid(m)).real if np.isrealobj(u) else evaluate(c, grid(m))
