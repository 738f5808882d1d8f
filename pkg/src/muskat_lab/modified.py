"""Modified equation for the localized part near a turnover, and its regularization.

Near a turnover at ``Z1`` the relocated curve ``f~ = f(x(alpha))`` is split as
``f~ = f+ + f^L`` (see :class:`muskat_lab.curve.PlusPart`).  The field
``h(alpha, gamma) = d^m f+`` is sampled on the shifted complex contour
``w(beta) = beta + tau + i c(beta + tau) gamma t``, and ``T(h)`` below is the
right-hand side of its time derivative assembled from

* ``M11 + M12``: transport of ``h`` with speed ``kappa + tau' + B``;
* ``F2``: the principal-value term in ``d_beta h``, rewritten on the window
  ``[-tau, 2 alpha + tau]`` by integration by parts (terms ``T1 .. T5``);
* ``O + lambda T_fixed``: everything else, obtained by differentiating the
  full nonlocal operator ``m`` times with the top derivative of ``f+``
  dropped.

The regularized operators ``M11^eps``, ``M12^eps``, ``M21^eps`` and a
frozen-coefficient regularized flow live at the end of the module.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from . import fourier
from .curve import (PeriodicInterface, PlusPart, ProfileSet, VariableChange, kernel, kernel_grad,
                    kernel_jet, relocate)
from .errors import DiffeomorphismError, ValidationError
from .jets import Jet
from .quadrature import (AntiderivativeStack, OneSidedInterpolant, RegularizationParams, b_correction,
                         d_minus, gauss_panels, graded_breaks, lagrange_weights)

GL_ORDER = 12
MAX_PANEL = 0.05
MIN_BREAK = 1e-3
ETA_NODES = 8


# ---------------------------------------------------------------------------
# fast real-line evaluation
# ---------------------------------------------------------------------------
class RealSampler:
    """Derivatives of a curve at arbitrary real points.

    The periodic part and its derivatives are tabulated on a fine uniform
    grid by Fourier evaluation and read back with periodic local Lagrange
    interpolation; the linear trend of ``f1`` is added analytically.
    """

    def __init__(self, curve: PeriodicInterface, max_order: int, n_fine: int = 8192, degree: int = 9):
        self.n_fine = n_fine
        self.step = 2.0 * np.pi / n_fine
        self.degree = degree
        grid = fourier.grid(n_fine)
        self.table = np.stack([fourier.evaluate(curve.coeffs, grid, j).real for j in range(max_order + 1)])

    def __call__(self, r) -> np.ndarray:
        """Array of shape (max_order+1, 2) + r.shape."""
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        u = (flat + np.pi) / self.step
        st = np.floor(u).astype(int) - (self.degree - 1) // 2
        offs = np.arange(self.degree + 1)
        nodes = (st[:, None] + offs[None, :]).astype(float)
        wts = lagrange_weights(nodes, u, 0)
        idx = np.mod(st[:, None] + offs[None, :], self.n_fine)
        out = np.einsum("jcpk,pk->jcp", self.table[:, :, idx], wts)
        out[0, 0] += flat
        if out.shape[0] > 1:
            out[1, 0] += 1.0
        return out.reshape(out.shape[:2] + r.shape)


# ---------------------------------------------------------------------------
# context
# ---------------------------------------------------------------------------
@dataclass
class _Row:
    gamma: float
    h_at_nodes: np.ndarray          # (2, n) complex
    interps: list                   # interps[j][comp] for FP_j, j = 0..m


class TurnoverContext:
    """Everything ``T(h)`` needs besides the field itself.

    Parameters
    ----------
    curve : PeriodicInterface
        Interface at the current time in the original variable.
    z1, z2 : float
        Turnover locations; ``x`` maps 0 to ``z1`` and ``-pi/2`` to ``z2``.
    t : float
        Time entering the contour height ``c gamma t``.
    tau, tau_prime : float
        Shift of the contour and its time derivative.
    dz : (float, float), optional
        Turnover velocities; computed from the flow when omitted.
    kappa : float, optional
        Transport speed at the turnover; computed when omitted.
    """

    def __init__(self, curve: PeriodicInterface, z1: float, z2: float,
                 profiles: Optional[ProfileSet] = None, m: int = 2, t: float = 0.0,
                 tau: float = 0.0, tau_prime: float = 0.0, dz=None, kappa: Optional[float] = None,
                 n_fine: int = 8192):
        from .complexify import kappa_eval, turnover_velocity
        from .evolution import muskat_rhs

        if tau < 0:
            raise ValidationError("tau must be nonnegative")
        self.profiles = profiles if profiles is not None else ProfileSet()
        self.m = m
        self.t = float(t)
        self.tau = float(tau)
        self.tau_prime = float(tau_prime)
        self.curve = curve
        self.rho_bar = curve.rho_bar
        rhs = muskat_rhs(curve)
        if dz is None:
            dz = (turnover_velocity(curve, z1, rhs), turnover_velocity(curve, z2, rhs))
        self.vc = VariableChange(z1, z2, float(dz[0]), float(dz[1]))
        if np.any(self.vc.x(curve.alpha, 1) <= 0):
            raise DiffeomorphismError("x_alpha is not positive on the grid")
        self.ftil = relocate(curve, self.vc)
        self.plus = PlusPart(self.ftil, self.profiles, m)
        self.sampler = RealSampler(self.ftil, m + 1, n_fine)
        self.kappa = float(kappa_eval(curve, self.vc.dz1, self.vc)) if kappa is None else float(kappa)
        a = curve.alpha
        moved = fourier.evaluate(fourier.coefficients(rhs), self.vc.x(a)).real
        g = moved + self.ftil.d(1) * self.vc.velocity_ratio(a)
        self.dt_ftil = g
        self.g_coeffs = fourier.coefficients(g)
        self.g_taylor = np.stack([fourier.evaluate(self.g_coeffs, np.array(0.0), k).real
                                  for k in range(m + 1)], axis=-1)

    @classmethod
    def from_evolution(cls, curve: PeriodicInterface, t: float, n_eval: Optional[int] = None,
                       kappa_samples: int = 11, z_guess=(0.0, -np.pi / 2),
                       profiles: Optional[ProfileSet] = None, m: int = 2, cfl_safety: float = 0.1,
                       **kwargs) -> "TurnoverContext":
        """Evolve ``curve`` to time ``t`` and build the context there.

        ``kappa`` is sampled at ``kappa_samples`` equally spaced times to get
        ``tau`` and ``tau'``; the turnovers are tracked from ``z_guess``.
        The final curve is resampled spectrally to ``n_eval`` points.
        """
        from .complexify import kappa_from_curve, tau_eval
        from .evolution import EvolutionState, StepControl, _track_roots, step

        times = np.linspace(0.0, t, kappa_samples) if t > 0 else np.zeros(1)
        state = EvolutionState(0.0, curve)
        ctl = StepControl(t_end=max(t, 1e-300), cfl_safety=cfl_safety, record=False)
        z = tuple(z_guess)
        kappas = []
        for target in times:
            while state.t < target * (1 - 1e-14):
                state = step(state, ctl, min(ctl.step_size(state.curve), target - state.t))
            z1, z2, _ = _track_roots(state.curve, z)
            z = (z1, z2)
            kappas.append(kappa_from_curve(state.curve, z1, z2))
        tau, tau_prime = tau_eval(kappas, times) if t > 0 else (0.0, -kappas[0] if kappas[0] < 0 else 0.0)
        final = state.curve
        if n_eval is not None and n_eval != final.n:
            per = fourier.resample(final.periodic, n_eval)
            a = fourier.grid(n_eval)
            final = PeriodicInterface(n_eval, a + per[0], per[1], final.rho_bar)
        ctx = cls(final, z[0], z[1], profiles, m, t, tau, tau_prime, **kwargs)
        ctx.kappa_history = (times, np.array(kappas))
        return ctx

    # -- geometry ------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.curve.n

    @property
    def alpha(self) -> np.ndarray:
        return self.curve.alpha

    def contour(self, beta, gamma: float):
        r = np.asarray(beta) + self.tau
        return r + 1j * self.profiles.c(r) * gamma * self.t

    def contour_slope(self, beta, gamma: float):
        r = np.asarray(beta) + self.tau
        return 1.0 + 1j * self.profiles.c(r, 1) * gamma * self.t

    def kinks(self) -> np.ndarray:
        p = self.profiles
        return np.array([0.0, p.c_core, p.c_support, p.delta, 2.0 * p.delta]) - self.tau

    # -- the split at real and complex points --------------------------------
    def taylor_poly(self, z) -> np.ndarray:
        """``(T_m f~)^(j)(z)`` for ``j = 0 .. m+1``, shape (m+2, 2) + z.shape."""
        return np.stack([self.plus.poly(z, j) for j in range(self.m + 1)]
                        + [np.zeros((2,) + np.shape(z), dtype=np.result_type(z, float))])

    def plus_real(self, r) -> np.ndarray:
        """``f+`` derivatives ``0 .. m+1`` at real points, from the fine sampler."""
        r = np.asarray(r, dtype=float)
        m = self.m
        out = np.zeros((m + 2, 2) + r.shape)
        pos = (r >= 0) & (r < 2.0 * self.profiles.delta)
        if not np.any(pos):
            return out
        rp = r[pos]
        full = self.sampler(rp)
        rem = full - np.stack([self.plus.poly(rp, j) for j in range(m + 1)] + [np.zeros((2,) + rp.shape)])
        lam = self.profiles.lam0_derivs(rp, m + 1)
        for j in range(m + 2):
            acc = np.zeros((2, rp.size))
            for i in range(j + 1):
                acc += comb(j, i) * rem[i] * lam[j - i]
            out[j][:, pos] = acc
        return out

    def low_at(self, beta, gamma: float) -> np.ndarray:
        """``f^L`` derivatives ``0 .. m+1`` at the contour points ``w(beta)``."""
        beta = np.asarray(beta, dtype=float)
        r = beta + self.tau
        height = self.profiles.c(r) * gamma * self.t
        cplx = height != 0
        out = np.zeros((self.m + 2, 2) + r.shape, dtype=complex)
        if np.any(~cplx):
            rr = r[~cplx]
            out[:, :, ~cplx] = self.sampler(rr) - self.plus_real(rr)
        if np.any(cplx):
            out[:, :, cplx] = self.taylor_poly(r[cplx] + 1j * height[cplx])
        return out

    def low_time_derivative(self, r: float, height: float) -> np.ndarray:
        """``d^m d_t f^L`` at ``r + i height``, shape (2,)."""
        m = self.m
        if height != 0:
            return self.g_taylor[:, m].astype(complex)
        g = np.stack([fourier.evaluate(self.g_coeffs, np.array(r), j).real for j in range(m + 1)])
        out = g[m].copy()
        if 0.0 <= r < 2.0 * self.profiles.delta:
            lam = self.profiles.lam0_derivs(np.array(r), m)
            for j in range(m + 1):
                tg = sum(self.g_taylor[:, k] * r ** (k - j) / factorial(k - j) for k in range(j, m + 1))
                out -= comb(m, j) * (g[j] - tg) * lam[m - j]
        return out.astype(complex)

    # -- field rows ------------------------------------------------------------
    def plus_field(self, n_gamma: int = 9):
        """Extension field ``h = d^m f+`` on the contour, shape (2, n_gamma, n)."""
        from .complexify import ComplexExtensionField

        gam = np.linspace(-1.0, 1.0, n_gamma)
        a = self.alpha
        H = np.zeros((2, n_gamma, self.n), dtype=complex)
        for k, g in enumerate(gam):
            z = self.contour(a, g)
            cplx = z.imag != 0
            H[:, k, ~cplx] = self.plus_real(z.real[~cplx])[self.m]
            if np.any(cplx):
                H[:, k, cplx] = self.plus.remainder(z[cplx], self.m)
        return ComplexExtensionField(H, self.t, self.profiles, self.tau, self.m, np.array([0.0, 0.0]))

    def row(self, h_row, gamma: float) -> _Row:
        """Interpolants of ``FP_j = D^{-(m-j)} h`` for one gamma row."""
        h_row = np.asarray(h_row, dtype=complex)
        if h_row.shape != (2, self.n):
            raise ValidationError("a field row must have shape (2, n)")
        a = self.alpha
        start = -self.tau
        interps = []
        for j in range(self.m + 1):
            depth = self.m - j
            comps = []
            for c in range(2):
                vals = h_row[c] if depth == 0 else d_minus(
                    h_row[c], AntiderivativeStack(depth, self.tau, gamma, self.t, self.profiles), a)
                comps.append(OneSidedInterpolant(a, vals, start))
            interps.append(comps)
        return _Row(gamma, h_row, interps)

    def plus_from_row(self, row: _Row, beta) -> np.ndarray:
        """``FP_j`` for ``j = 0 .. m+1`` at ``w(beta)``, shape (m+2, 2) + beta.shape."""
        beta = np.asarray(beta, dtype=float)
        bw = np.mod(beta + self.tau + np.pi, 2.0 * np.pi) - np.pi - self.tau
        m = self.m
        out = np.zeros((m + 2, 2) + beta.shape, dtype=complex)
        for j in range(m + 1):
            for c in range(2):
                out[j, c] = row.interps[j][c](bw)
        slope = self.contour_slope(beta, row.gamma)
        for c in range(2):
            out[m + 1, c] = row.interps[m][c](bw, 1) / slope
        return out

    def x_alpha_jet(self, z) -> np.ndarray:
        return np.stack([self.vc.x(z, k + 1) for k in range(self.m + 1)])

    def velocity_derivs(self, z) -> np.ndarray:
        """``V^(k)(z)`` for ``V = x_t / x_alpha``, ``k = 0 .. m``."""
        xt = Jet.from_derivatives(np.stack([self.vc.x_t(z, k) for k in range(self.m + 1)]))
        return (xt / Jet.from_derivatives(self.x_alpha_jet(z))).derivatives()


# ---------------------------------------------------------------------------
# the compact right-hand side
# ---------------------------------------------------------------------------
def _g_top(Fz, Fw, Xz, Xw, m):
    """``(d1 + d2)^m`` of ``K(F(z) - F(w)) (U(z) - U(w)) x_alpha(w)`` with ``U = F'/x_alpha``."""
    d = [Jet.from_derivatives(Fz[:m + 1, c, None] - Fw[:m + 1, c]) for c in range(2)]
    K = kernel_jet(d[0], d[1])
    Xzj = Jet.from_derivatives(Xz[:, None])
    Xwj = Jet.from_derivatives(Xw)
    out = []
    for c in range(2):
        U = Jet.from_derivatives(Fz[1:, c, None]) / Xzj - Jet.from_derivatives(Fw[1:, c]) / Xwj
        out.append((K * U * Xwj).derivative(m))
    return np.stack(out)


def _transport_top(V, F, m):
    """``sum_j C(m, j) V^(m-j) F^(j+1)``."""
    return sum(comb(m, j) * V[m - j] * F[j + 1] for j in range(m + 1))


def _s_nodes(ctx: TurnoverContext, center: float, window: float, extra=()) -> tuple:
    """Gauss nodes on ``(0, pi]`` for integrals paired around ``center``.

    After pairing ``beta = center +- s`` every integrand is bounded near
    ``s = 0``, so no grading is used there; breakpoints closer than
    ``MIN_BREAK`` to 0 are dropped because nodes that close to the diagonal
    only add rounding error through the differenced kernel jets.
    """
    br = [0.0, np.pi]
    for k in list(ctx.kinks()) + list(extra) + [center + window]:
        d = abs(k - center)
        if MIN_BREAK < d < np.pi:
            br.append(d)
    br = np.unique(br)
    fill = []
    for lo, hi in zip(br[:-1], br[1:]):
        k = int(np.ceil((hi - lo) / MAX_PANEL))
        fill.append(np.linspace(lo, hi, k + 1))
    br = np.unique(np.concatenate(fill))
    return gauss_panels(br, GL_ORDER)


def _pv_mean_coefficient(ctx: TurnoverContext, row: _Row, center: float, Fz0, Xz0) -> complex:
    """``(1/x_alpha(z)) p.v. int K(F(z) - F(w)) x_alpha(w) w' dbeta`` for ``z = w(center)``."""
    s, ws = _s_nodes(ctx, center, np.pi)
    B = np.concatenate([center + s, center - s])
    Fw = ctx.plus_from_row(row, B)[0] + ctx.low_at(B, row.gamma)[0]
    w = ctx.contour(B, row.gamma)
    vals = kernel(Fz0[0] - Fw[0], Fz0[1] - Fw[1]) * ctx.vc.x(w, 1) * ctx.contour_slope(B, row.gamma)
    S = s.size
    return np.sum(ws * (vals[:S] + vals[S:])) / Xz0


def _gamma_interp(gammas, values, eta):
    """Polynomial interpolation across gamma rows (last axis of ``values`` indexes rows)."""
    nodes = np.broadcast_to(np.asarray(gammas, dtype=float), (eta.size, len(gammas)))
    w = lagrange_weights(np.ascontiguousarray(nodes), eta, 0)
    return np.einsum("...k,pk->...p", values, w)


PART_NAMES = ("M11", "M12", "F2", "O", "T_fixed", "T1", "T2", "T3", "T4", "T51", "T52")


def modified_rhs_compact(field, ctx: TurnoverContext, rows: Optional[Sequence[int]] = None,
                         alpha_max: Optional[float] = None, return_parts: bool = False):
    """``T(h)`` on the grid for the requested gamma rows.

    Parameters
    ----------
    field : ComplexExtensionField
        ``h`` with shape (2, n_gamma, n).
    rows : sequence of int, optional
        Gamma-row indices to evaluate (default: all).
    alpha_max : float, optional
        Targets are nodes with ``-tau < alpha <= alpha_max``; ``T`` is set to
        0 elsewhere.  Defaults to ``2 delta - tau + 0.2`` (beyond it ``h``
        vanishes identically together with ``T``).

    Returns
    -------
    ndarray of shape (2, len(rows), n), and optionally a dict of parts.
    """
    H = np.asarray(field.h)
    if H.ndim != 3 or H.shape[0] != 2:
        raise ValidationError("the field must carry both curve components")
    ng, n = H.shape[1:]
    if n != ctx.n:
        raise ValidationError("field and context grids differ")
    gam = np.linspace(-1.0, 1.0, ng)
    rows = list(range(ng)) if rows is None else list(rows)
    if alpha_max is None:
        alpha_max = 2.0 * ctx.profiles.delta - ctx.tau + 0.2
    a = ctx.alpha
    targets = np.nonzero((a > -ctx.tau + 1e-13) & (a <= alpha_max))[0]

    built: Dict[int, _Row] = {}

    def get_row(k):
        if k not in built:
            built[k] = ctx.row(H[:, k], gam[k])
        return built[k]

    T = np.zeros((2, len(rows), n), dtype=complex)
    parts = {name: np.zeros((2, len(rows), n), dtype=complex) for name in PART_NAMES}
    parts["B"] = np.zeros((len(rows), n), dtype=complex)
    row0 = get_row(int(np.argmin(np.abs(gam))))
    for out_i, k in enumerate(rows):
        row = get_row(k)
        needs_eta = gam[k] != 0
        res = _row_rhs(ctx, row, row0, targets, [get_row(j) for j in range(ng)] if needs_eta else None, gam)
        for name, arr in res.items():
            if name == "B":
                parts["B"][out_i, targets] = arr
            elif name == "T":
                T[:, out_i, targets] = arr
            else:
                parts[name][:, out_i, targets] = arr
    if return_parts:
        return T, parts
    return T


def _row_rhs(ctx: TurnoverContext, row: _Row, row0: _Row, targets, all_rows, gam) -> Dict[str, np.ndarray]:
    m = ctx.m
    rho = ctx.rho_bar
    p = ctx.profiles
    g = row.gamma
    t = ctx.t
    tau = ctx.tau
    nt = targets.size
    out = {name: np.zeros((2, nt), dtype=complex) for name in PART_NAMES + ("T",)}
    out["B"] = np.zeros(nt, dtype=complex)

    # P and V at the turnover (z = 0, the contour point over beta = -tau)
    F0 = ctx.sampler(np.array(0.0))[:, :]            # (m+2, 2), f^L(0) = f~(0)
    X0 = ctx.vc.x(0.0, 1)
    P0 = _pv_mean_coefficient(ctx, row, -tau, F0[0], X0)
    V0 = ctx.vc.x_t(0.0) / X0
    k1z, k2z = None, None
    for ti, idx in enumerate(targets):
        al = ctx.alpha[idx]
        r = al + tau
        height = p.c(r) * g * t
        z = r + 1j * height
        slope = ctx.contour_slope(al, g)
        lam = p.lam(r)
        FPz = ctx.plus_from_row(row, np.array([al]))[..., 0]
        FLz = ctx.low_at(np.array([al]), g)[..., 0]
        Fz = FPz + FLz
        Fz_red = Fz.copy()
        Fz_red[m + 1] = FLz[m + 1]
        Xz = ctx.x_alpha_jet(np.array(z))
        Vz = ctx.velocity_derivs(np.array(z))
        h_a = row.h_at_nodes[:, idx]
        dh_a = FPz[m + 1] * slope

        # paired nodes over the whole period
        window = r
        end52 = 2.0 * p.delta - tau - al
        s, ws = _s_nodes(ctx, al, window, extra=(al + end52,))
        S = s.size
        B = np.concatenate([al + s, al - s])
        FPw = ctx.plus_from_row(row, B)
        FLw = ctx.low_at(B, g)
        Fw = FPw + FLw
        Fw_red = Fw.copy()
        Fw_red[m + 1] = FLw[m + 1]
        w = ctx.contour(B, g)
        wp = ctx.contour_slope(B, g)
        Xw = ctx.x_alpha_jet(w)

        def pair(v):
            return np.sum(ws * (v[..., :S] + v[..., S:]), axis=-1)

        d1 = Fz[0, 0] - Fw[0, 0]
        d2 = Fz[0, 1] - Fw[0, 1]
        Kw = kernel(d1, d2)
        Pz = pair(Kw * Xw[0] * wp) / Xz[0]

        N_red = pair(_g_top(Fz_red, Fw_red, Xz, Xw, m) * wp)
        N_fl = pair(_g_top(FLz, FLw, Xz, Xw, m) * wp)
        Tr_red = _transport_top(Vz, Fz_red, m)
        Tr_fl = _transport_top(Vz, FLz, m)

        # window term T3
        K1, K2 = kernel_grad(d1, d2)
        dK = -(K1 * Fw[1, 0] + K2 * Fw[1, 1]) * wp
        inwin = np.concatenate([s <= window + 1e-15, s <= window + 1e-15])
        hw = FPw[m]
        T3 = lam * pair(np.where(inwin, dK * (hw - h_a[:, None]), 0.0))

        # beyond the window on the real trace: T52
        T52 = np.zeros(2, dtype=complex)
        sel = (s >= window) & (s <= end52)
        if np.any(sel):
            bb = al + s[sel]
            P0w = ctx.plus_from_row(row0, bb)
            F0w = P0w + ctx.low_at(bb, 0.0)
            h0 = P0w[m]
            e1 = Fz[0, 0] - F0w[0, 0]
            e2 = Fz[0, 1] - F0w[0, 1]
            k1, k2 = kernel_grad(e1, e2)
            dK0 = -(k1 * F0w[1, 0] + k2 * F0w[1, 1])
            T52 = lam * np.sum(ws[sel] * dK0 * h0, axis=-1)

        # point terms at the window ends
        bstar = np.array([2.0 * al + tau])
        FPs = ctx.plus_from_row(row, bstar)[..., 0]
        Fs = FPs + ctx.low_at(bstar, g)[..., 0]
        Ks = kernel(Fz[0, 0] - Fs[0, 0], Fz[0, 1] - Fs[0, 1])
        hs = FPs[m]
        T1 = -lam * Ks * (hs - h_a)
        T4 = lam * Ks * hs
        Kl = kernel(Fz[0, 0] - F0[0, 0], Fz[0, 1] - F0[0, 1])
        T2 = lam * Kl * (0.0 - h_a)

        # vertical segment above 2 alpha + 2 tau: T51
        T51 = np.zeros(2, dtype=complex)
        r2 = 2.0 * r
        c2 = p.c(r2)
        if all_rows is not None and c2 != 0 and g != 0:
            eta, we = gauss_panels(np.array([0.0, g]) if g > 0 else np.array([g, 0.0]), ETA_NODES)
            sign = 1.0 if g > 0 else -1.0
            vals = np.stack([ctx.plus_from_row(rw, bstar)[..., 0] for rw in all_rows], axis=-1)
            FPe = _gamma_interp(gam, vals, eta)                    # (m+2, 2, neta)
            zeta = r2 + 1j * c2 * eta * t
            FLe = ctx.taylor_poly(zeta)
            Fe = FPe + FLe
            k1, k2 = kernel_grad(Fz[0, 0] - Fe[0, 0], Fz[0, 1] - Fe[0, 1])
            dKe = -(k1 * Fe[1, 0] + k2 * Fe[1, 1])
            T51 = -lam * sign * np.sum(we * dKe * FPe[m] * 1j * c2 * t, axis=-1)

        Bcoef = (1j * p.c(r) * g + Vz[0] + rho * Pz - V0 - rho * P0) / slope + (1.0 / slope - 1.0) * ctx.kappa
        M11 = lam * (ctx.kappa + ctx.tau_prime) * dh_a
        M12 = lam * Bcoef * dh_a
        F2 = rho * (T1 + T2 + T3 + T4 + T51 + T52)
        O = lam * (Tr_red - Tr_fl + rho * (N_red - N_fl))
        Tfix = -ctx.low_time_derivative(r, height) + Tr_fl + rho * N_fl
        out["T"][:, ti] = M11 + M12 + F2 + O + lam * Tfix
        for name, val in (("M11", M11), ("M12", M12), ("F2", F2), ("O", O), ("T_fixed", Tfix),
                          ("T1", T1), ("T2", T2), ("T3", T3), ("T4", T4), ("T51", T51), ("T52", T52)):
            out[name][:, ti] = val
        out["B"][ti] = Bcoef
    return out


# ---------------------------------------------------------------------------
# refined Rayleigh-Taylor condition
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RTReport:
    """``min(-Re L2 - 18 |Im L1| - 18 |Im L2|)`` with the per-node coefficients."""

    value: float
    alpha: np.ndarray
    gamma: np.ndarray
    L1: np.ndarray
    L2: np.ndarray

    @property
    def positive(self) -> bool:
        return self.value > 0


def rt_coefficients(ctx: TurnoverContext, row: _Row, targets) -> tuple:
    """``(L1, L2)`` at the given grid indices of one gamma row."""
    p = ctx.profiles
    g = row.gamma
    rho = ctx.rho_bar
    F0 = ctx.sampler(np.array(0.0))
    X0 = ctx.vc.x(0.0, 1)
    P0 = _pv_mean_coefficient(ctx, row, -ctx.tau, F0[0], X0)
    V0 = ctx.vc.x_t(0.0) / X0
    al = ctx.alpha[targets]
    Fz = ctx.plus_from_row(row, al) + ctx.low_at(al, g)
    r = al + ctx.tau
    z = r + 1j * p.c(r) * g * ctx.t
    slope = ctx.contour_slope(al, g)
    Xz = ctx.vc.x(z, 1)
    L1 = np.empty(al.size, dtype=complex)
    for i in range(al.size):
        Pz = _pv_mean_coefficient(ctx, row, al[i], Fz[0, :, i], Xz[i])
        V = ctx.vc.x_t(z[i]) / Xz[i]
        L1[i] = (1j * p.c(r[i]) * g + V + rho * Pz - V0 - rho * P0) / slope[i] \
            + (1.0 / slope[i] - 1.0) * ctx.kappa
    d1, d2 = Fz[1, 0], Fz[1, 1]
    L2 = -2.0 * rho * d1 / (slope * (d1 * d1 + d2 * d2))
    return L1, L2


def refined_rt_check(ctx: TurnoverContext, field=None, n_gamma: int = 9,
                     alpha_max: Optional[float] = None, r_min: float = 0.0) -> RTReport:
    """Evaluate the refined Rayleigh-Taylor report on ``r_min <= alpha + tau <= alpha_max``.

    ``alpha_max`` defaults to ``min(20 delta, pi)``.  Since ``-L2`` vanishes
    linearly at the turnover, comparisons across times whose grids sit at
    different offsets from it should pass a common ``r_min``.  At ``t = 0`` all gamma
    rows coincide and only the real row is evaluated.
    """
    if field is None:
        field = ctx.plus_field(n_gamma)
    H = np.asarray(field.h)
    ng = H.shape[1]
    gam = np.linspace(-1.0, 1.0, ng)
    if alpha_max is None:
        alpha_max = min(20.0 * ctx.profiles.delta, np.pi)
    r = ctx.alpha + ctx.tau
    targets = np.nonzero((r > max(1e-13, r_min - 1e-12)) & (r <= alpha_max) & (ctx.alpha < np.pi))[0]
    rows = [ng // 2] if ctx.t == 0 else list(range(ng))
    L1s, L2s = [], []
    for k in rows:
        L1, L2 = rt_coefficients(ctx, ctx.row(H[:, k], gam[k]), targets)
        L1s.append(L1)
        L2s.append(L2)
    L1 = np.array(L1s)
    L2 = np.array(L2s)
    rep = -L2.real - 18.0 * np.abs(L1.imag) - 18.0 * np.abs(L2.imag)
    return RTReport(float(np.min(rep)), ctx.alpha[targets], gam[rows], L1, L2)


# ---------------------------------------------------------------------------
# regularized operators on the half line
# ---------------------------------------------------------------------------
def _line_interp(alpha, h):
    spl = make_interp_spline(alpha, h, k=5)
    hi = alpha[-1]

    def ev(x, nu=0):
        x = np.asarray(x, dtype=float)
        out = spl(np.clip(x, alpha[0], hi), nu)
        return np.where((x >= alpha[0]) & (x <= hi), out, 0.0)

    return ev


def _endpoint_derivatives(alpha, h, k: int, points: int = 12):
    """``h^(j)(alpha[0])`` for ``j < k`` from the interpolant through the first ``points`` nodes."""
    x = (alpha[:points] - alpha[0]) / (alpha[1] - alpha[0])
    coef = np.polynomial.polynomial.polyfit(x, h[:points], points - 1)
    scale = 1.0 / (alpha[1] - alpha[0])
    return [factorial(j) * coef[j] * scale**j for j in range(k)]


def _line_nodes(a: float, eps: float, order: int = 16):
    if a <= 0:
        return np.zeros(0), np.zeros(0)
    return gauss_panels(graded_breaks(a, eps, max_panel=min(4.0 * eps, a)), order)


def eps_operator_apply(h, which: str, params: RegularizationParams = RegularizationParams(),
                       alpha=None, L1=1.0, L2=-1.0, kappa=1.0, profiles: Optional[ProfileSet] = None,
                       derivs0=None) -> np.ndarray:
    """Apply one regularized operator to samples ``h`` on a uniform grid of ``[0, pi]``.

    ``M11``: ``lambda kappa (h(a + eps) - h(a)) / eps``.

    ``M12``: ``lambda L1 (2/pi) int_0^{2a} (h(a) - h(b)) (a-b) eps/((a-b)^2+eps^2)^2 db``
    minus ``lambda L1 sum_{j<k} b1_j(a) h^(j)(0)``.

    ``M21``: ``lambda L2 int_0^{2a} (h(a) - h(b)) / ((a-b)^2+eps^2) db``
    minus ``lambda L2 sum_{j<k} b2_j(a) h^(j)(0)``.

    ``h`` vanishes beyond the sampled interval.  ``L1``, ``L2`` may be
    arrays on the grid.  ``derivs0`` overrides the spline estimates of
    ``h^(j)(0)``.
    """
    h = np.asarray(h)
    n = h.shape[-1]
    if alpha is None:
        alpha = np.linspace(0.0, np.pi, n)
    alpha = np.asarray(alpha, dtype=float)
    profiles = profiles if profiles is not None else ProfileSet()
    eps = params.eps
    lam = profiles.lam(alpha)
    ev = _line_interp(alpha, h)
    if which == "M11":
        return lam * kappa * (ev(alpha + eps) - h) / eps
    if which not in ("M12", "M21"):
        raise ValidationError(f"unknown operator {which!r}")
    flavor = 1 if which == "M12" else 2
    out = np.zeros(n, dtype=np.result_type(h, float))
    for i, a in enumerate(alpha):
        s, w = _line_nodes(a, eps)
        if s.size == 0:
            continue
        if flavor == 1:
            ker = s * eps / (s * s + eps * eps) ** 2
            out[i] = (2.0 / np.pi) * np.sum(w * (ev(a + s) - ev(a - s)) * ker)
        else:
            out[i] = np.sum(w * (2.0 * h[i] - ev(a + s) - ev(a - s)) / (s * s + eps * eps))
    if derivs0 is None:
        derivs0 = _endpoint_derivatives(alpha, h, params.k_order)
    for j in range(1, params.k_order):
        out = out - b_correction(j, flavor, alpha, eps) * derivs0[j]
    coef = L1 if flavor == 1 else L2
    return lam * coef * out


def regularized_rhs(h, params: RegularizationParams, alpha, L1, L2, kappa,
                    profiles: Optional[ProfileSet] = None) -> np.ndarray:
    """``M11^eps + M12^eps + M21^eps`` row by row; ``h`` has shape (rows, n)."""
    h = np.atleast_2d(h)
    L1 = np.broadcast_to(L1, h.shape)
    L2 = np.broadcast_to(L2, h.shape)
    out = np.empty_like(h, dtype=np.result_type(h, L1, L2, float))
    for k in range(h.shape[0]):
        out[k] = (eps_operator_apply(h[k], "M11", params, alpha, kappa=kappa, profiles=profiles)
                  + eps_operator_apply(h[k], "M12", params, alpha, L1=L1[k], profiles=profiles)
                  + eps_operator_apply(h[k], "M21", params, alpha, L2=L2[k], profiles=profiles))
    return out


def regularized_flow(h0, params: RegularizationParams, alpha, L1, L2, kappa: float, t_end: float,
                     dt: Optional[float] = None, profiles: Optional[ProfileSet] = None) -> np.ndarray:
    """Integrate ``h_t = M11^eps + M12^eps + M21^eps`` with frozen coefficients by RK4.

    ``h0`` has shape (rows, n), one row per gamma node; ``L1``, ``L2`` are
    broadcast to that shape.  The step defaults to a fraction of the
    stiffness bound ``eps / (pi max|L2| + 2 |kappa| + 2 max|L1|)``.
    """
    h = np.array(np.atleast_2d(h0), dtype=complex)
    if dt is None:
        scale = np.pi * np.max(np.abs(L2)) + 2.0 * abs(kappa) + 2.0 * np.max(np.abs(L1)) + 1e-300
        dt = 0.5 * params.eps / scale
    steps = max(1, int(np.ceil(t_end / dt)))
    dt = t_end / steps

    def f(u):
        return regularized_rhs(u, params, alpha, L1, L2, kappa, profiles)

    for _ in range(steps):
        k1 = f(h)
        k2 = f(h + 0.5 * dt * k1)
        k3 = f(h + 0.5 * dt * k2)
        k4 = f(h + dt * k3)
        h = h + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return h
