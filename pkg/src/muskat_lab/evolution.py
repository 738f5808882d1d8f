"""Real contour evolution: right-hand side, RK4 stepping, presets and scenarios."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Deque, Dict, List, Optional

import numpy as np

from . import fourier
from .curve import (DENOM_FLOOR, PeriodicInterface, arc_chord_sup, detect_turnovers, kernel_denominator,
                    rt_coefficient)
from .errors import ArcChordError, BlowUpError, InsufficientModesError, ValidationError

log = logging.getLogger(__name__)

BLOWUP_FIELD = 1e6
BLOWUP_ARC_CHORD = 1e9
ROW_BLOCK = 1 << 21


def muskat_rhs(curve: PeriodicInterface, denom_floor: float = DENOM_FLOOR) -> np.ndarray:
    """Time derivative ``(df1/dt, df2/dt)`` per node, shape (2, n).

    ``rho_bar * int K(f(a) - f(a-b)) (f'(a) - f'(a-b)) db`` by the periodic
    trapezoid rule in ``b``; the integrand is bounded at ``b = 0`` and its
    limit ``2 f1' f'' / |f'|^2`` is inserted there.
    """
    n = curve.n
    h = curve.dalpha
    p1 = curve.f1 - curve.alpha
    f2 = curve.f2
    fp = curve.d(1)
    fpp = curve.d(2)
    q = fp[0] ** 2 + fp[1] ** 2
    out = (2.0 * fp[0] / q)[None, :] * fpp  # diagonal column
    beta = h * np.arange(1, n)
    cols = np.arange(1, n)
    rows_per = max(1, ROW_BLOCK // n)
    for r0 in range(0, n, rows_per):
        r = np.arange(r0, min(n, r0 + rows_per))
        idx = (r[:, None] - cols[None, :]) % n
        d1 = beta[None, :] + p1[r, None] - p1[idx]
        d2 = f2[r, None] - f2[idx]
        den = kernel_denominator(d1, d2)
        if np.min(den) <= denom_floor:
            raise ArcChordError("chord denominator vanishes off the diagonal")
        K = np.sin(d1) / den
        out[0, r] += np.sum(K * (fp[0, r, None] - fp[0][idx]), axis=1)
        out[1, r] += np.sum(K * (fp[1, r, None] - fp[1][idx]), axis=1)
    return curve.rho_bar * h * out


def rhs_time_derivative_at(curve: PeriodicInterface, z, order: int = 0) -> np.ndarray:
    """``order``-th alpha-derivative of the RHS at arbitrary real points (spectral interpolation)."""
    rhs = muskat_rhs(curve)
    return fourier.evaluate(fourier.coefficients(rhs), np.asarray(z), order).real


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class StepControl:
    """Time-step parameters.

    ``dt`` of ``None`` means: take the CFL value
    ``cfl_safety * dalpha / max(1, max|sigma|)`` from the current curve.
    """

    dt: Optional[float] = None
    t_end: float = 0.1
    cfl_safety: float = 0.1
    direction: str = "forward"
    dealias: bool = False
    record: bool = True

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ValidationError("direction must be 'forward' or 'backward'")
        if not 0 < self.cfl_safety <= 1:
            raise ValidationError("cfl_safety must lie in (0, 1]")
        if self.dt is not None and self.dt <= 0:
            raise ValidationError("dt must be positive")
        if self.t_end <= 0:
            raise ValidationError("t_end must be positive")

    def cfl_bound(self, curve: PeriodicInterface) -> float:
        sig = np.max(np.abs(rt_coefficient(curve)))
        return self.cfl_safety * curve.dalpha / max(1.0, sig)

    def step_size(self, curve: PeriodicInterface) -> float:
        bound = self.cfl_bound(curve)
        if self.dt is None:
            return bound
        if self.dt > bound * (1 + 1e-12):
            raise ValidationError(f"dt={self.dt:g} exceeds the CFL bound {bound:g}")
        return self.dt


@dataclass
class EvolutionState:
    t: float
    curve: PeriodicInterface
    history: Deque[Dict[str, float]] = field(default_factory=lambda: deque(maxlen=1024))


def diagnostics(curve: PeriodicInterface, t: float) -> Dict[str, float]:
    sig = rt_coefficient(curve)
    return {"t": t, "sigma_min": float(sig.min()), "sigma_max": float(sig.max()),
            "arc_chord": arc_chord_sup(curve),
            "turnovers": detect_turnovers(curve).count}


def _rk4(curve: PeriodicInterface, dt: float, sign: float, dealias: bool) -> PeriodicInterface:
    base = curve.periodic
    a = curve.alpha

    def make(p):
        return curve.with_samples(a + p[0], p[1])

    def f(c):
        return sign * muskat_rhs(c)

    k1 = f(curve)
    k2 = f(make(base + 0.5 * dt * k1))
    k3 = f(make(base + 0.5 * dt * k2))
    k4 = f(make(base + dt * k3))
    new = base + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if dealias:
        new = fourier.dealias(new)
    return make(new)


def step(state: EvolutionState, ctl: StepControl, dt: Optional[float] = None) -> EvolutionState:
    """One RK4 step (the RHS is negated when ``ctl.direction == 'backward'``).

    Raises
    ------
    BlowUpError
        If any sample exceeds 1e6 in magnitude or the arc-chord sup exceeds 1e9.
    """
    if dt is None:
        dt = ctl.step_size(state.curve)
    sign = -1.0 if ctl.direction == "backward" else 1.0
    try:
        new = _rk4(state.curve, dt, sign, ctl.dealias)
    except ValidationError as exc:  # non-finite samples
        raise BlowUpError(str(exc)) from exc
    if np.max(np.abs(new.periodic)) > BLOWUP_FIELD:
        raise BlowUpError("field magnitude exceeded 1e6")
    t = state.t + dt
    hist = deque(state.history, maxlen=state.history.maxlen)
    if ctl.record:
        d = diagnostics(new, t)
        if d["arc_chord"] > BLOWUP_ARC_CHORD:
            raise BlowUpError("arc-chord sup exceeded 1e9")
        hist.append(d)
    return EvolutionState(t, new, hist)


def evolve(curve: PeriodicInterface, ctl: StepControl, t_end: Optional[float] = None,
           callback=None) -> EvolutionState:
    """Step from ``t = 0`` to ``t_end`` exactly, shortening the final step."""
    t_end = ctl.t_end if t_end is None else t_end
    state = EvolutionState(0.0, curve)
    k = 0
    while state.t < t_end * (1 - 1e-14):
        dt = min(ctl.step_size(state.curve), t_end - state.t)
        state = step(state, ctl, dt)
        k += 1
        if callback is not None:
            callback(k, state)
    return state


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------
def energy_norms(curve: PeriodicInterface, k_max: int = 2) -> np.ndarray:
    """Sobolev norms of ``(f1 - alpha, f2)`` for orders ``0..k_max``, shape (2, k_max+1).

    ``||u||_{H^s}^2 = 2 pi sum_k (1 + k^2)^s |u_k|^2``.
    """
    if k_max > curve.n // 4:
        raise ValidationError("k_max must not exceed n/4")
    c = curve.coeffs
    k = fourier.wavenumbers(curve.n)
    out = np.empty((2, k_max + 1))
    for s in range(k_max + 1):
        out[:, s] = np.sqrt(2 * np.pi * np.sum((1 + k**2) ** s * np.abs(c) ** 2, axis=1))
    return out


def tail_norm(curve: PeriodicInterface, k_min: int = 16) -> float:
    """L2 norm of the Fourier modes with ``|k| > k_min`` of both periodic components."""
    c = curve.coeffs
    k = np.abs(fourier.wavenumbers(curve.n))
    return float(np.sqrt(2 * np.pi * np.sum(np.abs(c[:, k > k_min]) ** 2)))


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------
PRESETS = ("flat", "stable", "backward", "turnover")


def poisson_wave(a, r: float = 0.6, amp: float = 0.1):
    """``amp * sum_{k>=1} r^k cos(k a)`` in closed form."""
    return amp * (r * np.cos(a) - r * r) / (1 - 2 * r * np.cos(a) + r * r)


def preset_curve(name: str, n: int, rho_bar: float = 1.0) -> PeriodicInterface:
    """Initial data for the named regime.

    ``stable`` is a graph with an analytic profile of full spectrum;
    ``backward`` is the same graph with the density jump reversed (run it
    with ``direction='backward'``); ``turnover`` has vertical tangents at 0
    and -pi/2 with ``f1''`` equal to 1 and -1 there.
    """
    if name == "flat":
        return PeriodicInterface.flat(n, rho_bar)
    if name == "stable":
        return PeriodicInterface.from_functions(n, lambda a: a, poisson_wave, abs(rho_bar))
    if name == "backward":
        return PeriodicInterface.from_functions(n, lambda a: a, poisson_wave, -abs(rho_bar))
    if name == "turnover":
        return PeriodicInterface.from_functions(
            n, lambda a: a - np.sin(a) - np.cos(a), lambda a: 0.5 * (np.sin(a) + np.cos(a)), rho_bar)
    raise ValidationError(f"unknown preset {name!r}")


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------
SERIES_COLUMNS = ["t", "Z1", "Z2", "sigma_min", "sigma_max", "arc_chord", "H0_f2", "H1_f2", "H2_f2",
                  "turnovers", "kappa_sign", "strip_width", "tail_norm", "cusp_eps2", "cusp_d0"]


@dataclass
class ScenarioResult:
    rows: List[Dict[str, float]]
    spectra: List[tuple]
    final: Optional[EvolutionState]
    error: Optional[str] = None

    @property
    def tail_monotone(self) -> bool:
        tails = [r["tail_norm"] for r in self.rows]
        return all(b <= a * (1 + 1e-9) for a, b in zip(tails, tails[1:]))


def _track_roots(curve, previous):
    ts = detect_turnovers(curve)
    if ts.count == 0:
        return float("nan"), float("nan"), ts
    roots = ts.roots
    out = []
    for p in previous:
        j = int(np.argmin(np.abs(np.angle(np.exp(1j * (roots - p))))))
        out.append(float(roots[j]))
    return out[0], out[1], ts


def scenario_row(curve: PeriodicInterface, t: float, z_prev=(0.0, -np.pi / 2),
                 turnover: bool = False, tail_k: int = 16) -> Dict[str, float]:
    from .complexify import cusp_fit, kappa_from_curve, strip_estimate

    sig = rt_coefficient(curve)
    norms = energy_norms(curve, 2)
    row = {"t": t, "sigma_min": float(sig.min()), "sigma_max": float(sig.max()),
           "arc_chord": arc_chord_sup(curve), "H0_f2": norms[1, 0], "H1_f2": norms[1, 1],
           "H2_f2": norms[1, 2], "tail_norm": tail_norm(curve, tail_k)}
    z1 = z2 = float("nan")
    ts = detect_turnovers(curve)
    row["turnovers"] = ts.count
    kappa_sign = float("nan")
    eps2 = d0 = float("nan")
    if turnover and ts.count >= 2:
        z1, z2, ts = _track_roots(curve, z_prev)
        kappa_sign = float(np.sign(kappa_from_curve(curve, z1, z2)))
        eps2, d0 = cusp_fit(curve, z1)
    row.update(Z1=z1, Z2=z2, kappa_sign=kappa_sign, cusp_eps2=eps2, cusp_d0=d0)
    try:
        row["strip_width"] = strip_estimate(curve.coeffs[1]).width
    except InsufficientModesError:
        row["strip_width"] = float("inf")
    return row


def initial_curve(config) -> PeriodicInterface:
    """Preset curve, or for ``custom`` the CSV/JSON curve at ``config.curve_path``."""
    if config.preset != "custom":
        return preset_curve(config.preset, config.n, config.rho_bar)
    path = str(config.curve_path)
    if path.endswith(".json"):
        with open(path) as fh:
            return PeriodicInterface.from_json(fh.read())
    return PeriodicInterface.from_csv(path, config.rho_bar)


def run_scenario(config) -> ScenarioResult:
    """Evolve the configured preset and emit one diagnostics row per output interval.

    Errors during stepping end the run; the partial series is returned with
    the error message recorded.
    """
    curve = initial_curve(config)
    direction = "backward" if config.preset == "backward" else "forward"
    ctl = StepControl(dt=config.dt_override, t_end=config.t_end, cfl_safety=config.cfl_safety,
                      direction=direction, dealias=config.dealias, record=False)
    turnover = config.preset == "turnover"
    state = EvolutionState(0.0, curve)
    rows = [scenario_row(curve, 0.0, turnover=turnover)]
    spectra = [(0.0, curve.coeffs.copy())]
    z_prev = (rows[0]["Z1"], rows[0]["Z2"]) if turnover else (0.0, -np.pi / 2)
    k = 0
    try:
        while state.t < config.t_end * (1 - 1e-14):
            dt = min(ctl.step_size(state.curve), config.t_end - state.t)
            state = step(state, ctl, dt)
            k += 1
            if k % config.output_every == 0 or state.t >= config.t_end * (1 - 1e-14):
                row = scenario_row(state.curve, state.t, z_prev, turnover)
                if row["arc_chord"] > BLOWUP_ARC_CHORD:
                    raise BlowUpError("arc-chord sup exceeded 1e9")
                rows.append(row)
                spectra.append((state.t, state.curve.coeffs.copy()))
                if turnover and np.isfinite(row["Z1"]):
                    z_prev = (row["Z1"], row["Z2"])
    except (BlowUpError, ArcChordError) as exc:
        log.warning("scenario stopped at t=%g: %s", state.t, exc)
        return ScenarioResult(rows, spectra, state, str(exc))
    return ScenarioResult(rows, spectra, state)
