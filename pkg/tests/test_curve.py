import json
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from muskat_lab import fourier
from muskat_lab.curve import (PeriodicInterface, PlusPart, ProfileSet, VariableChange, arc_chord_diagonal,
                              arc_chord_sup, change_variable, detect_turnovers, eval_kernel, kernel,
                              kernel_denominator, l2_coefficient, l2_from_tangent, rt_coefficient,
                              rt_from_tangent, smooth_step, split_plus)
from muskat_lab.errors import (DegenerateArgumentError, DegenerateTangentError, DiffeomorphismError,
                               ValidationError)

finite = st.floats(-20, 20, allow_nan=False)


def analytic_curve(n, a1=0.2, a2=0.3, rho_bar=1.0):
    return PeriodicInterface.from_functions(
        n, lambda a: a + a1 * np.sin(a) / (1.3 - np.cos(a)), lambda a: a2 * np.cos(2 * a) / (1.5 + np.sin(a)),
        rho_bar)


# kernel --------------------------------------------------------------------
def test_kernel_examples():
    assert eval_kernel(0.0, 1.0) == 0.0
    assert eval_kernel(np.pi / 2, 0.0) == pytest.approx(1.0, rel=1e-15)


def test_kernel_small_argument_expansion():
    x1 = x2 = 1e-3
    # oracle: sin and the half-angle form of the denominator, term by term
    den = 2 * np.sinh(x2 / 2) ** 2 + 2 * np.sin(x1 / 2) ** 2
    direct = np.sin(x1) / den
    value = eval_kernel(x1, x2)
    assert value == pytest.approx(direct, rel=1e-14)
    assert value == pytest.approx(2 * x1 / (x1**2 + x2**2), rel=1e-5)
    assert value == pytest.approx(1000.0, rel=1e-5)


def test_kernel_degenerate_argument():
    with pytest.raises(DegenerateArgumentError):
        eval_kernel(0.0, 0.0)


@given(finite, finite)
def test_kernel_antisymmetric(x1, x2):
    if kernel_denominator(x1, x2) < 1e-200:
        return
    assert eval_kernel(-x1, -x2) == -eval_kernel(x1, x2)


@given(finite, finite)
def test_kernel_periodic(x1, x2):
    if kernel_denominator(x1, x2) < 1e-6:
        return
    k = eval_kernel(x1, x2)
    assert eval_kernel(x1 + 2 * np.pi, x2) == pytest.approx(k, rel=1e-12, abs=1e-12 * max(1, abs(k)))


def test_kernel_complex_argument_matches_real():
    z = np.array([0.3, 1.1])
    assert np.allclose(kernel(z.astype(complex), 0.2 + 0j), kernel(z, 0.2), rtol=1e-15)


# interface -----------------------------------------------------------------
def test_interface_validation():
    with pytest.raises(ValidationError):
        PeriodicInterface(30, np.zeros(30), np.zeros(30))
    with pytest.raises(ValidationError):
        PeriodicInterface(32, np.zeros(31), np.zeros(32))
    f = np.zeros(32)
    f[3] = np.nan
    with pytest.raises(ValidationError):
        PeriodicInterface(32, fourier.grid(32), f)


def test_interface_grid_and_periodicity():
    c = analytic_curve(64)
    assert c.dalpha == 2 * np.pi / 64
    assert np.allclose(np.diff(c.alpha), c.dalpha, atol=1e-15)
    # spectral interpolation reproduces the wrap-around node
    assert np.allclose(c.at(np.array([np.pi, -np.pi])), c.at(np.array([-np.pi, -np.pi])) +
                       np.array([[2 * np.pi, 0], [0, 0]]), atol=1e-12)
    assert np.allclose(c.at(c.alpha), np.stack([c.f1, c.f2]), atol=1e-12)


def test_io_roundtrip(tmp_path):
    c = analytic_curve(64, rho_bar=-0.7)
    c.to_csv(tmp_path / "c.csv")
    back = PeriodicInterface.from_csv(tmp_path / "c.csv", rho_bar=-0.7)
    assert np.array_equal(back.f1, c.f1) and np.array_equal(back.f2, c.f2)
    back = PeriodicInterface.from_json(c.to_json())
    assert back.rho_bar == -0.7 and np.array_equal(back.f2, c.f2)
    assert json.loads(c.to_json())["n"] == 64
    c.spectrum_to_csv(tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "component,k,re,im,abs" and len(rows) == 1 + 2 * 64


# arc-chord -----------------------------------------------------------------
def test_arc_chord_flat():
    c = PeriodicInterface.flat(128)
    # oracle: dense maximization of b^2/(1 - cos b) over (0, pi]
    b = np.linspace(1e-3, np.pi, 200001)
    assert arc_chord_sup(c) == pytest.approx(np.max(b**2 / (1 - np.cos(b))), rel=1e-9)
    assert arc_chord_sup(c) == pytest.approx(np.pi**2 / 2, rel=1e-12)
    assert np.allclose(arc_chord_diagonal(c), 2.0)


def test_arc_chord_self_intersection():
    n = 64
    a = fourier.grid(n)
    f1 = a.copy()
    f2 = np.zeros(n)
    # node n/2 + 3 is moved onto node 3 shifted by one period in f1: zero chord
    f1[3 + n // 2] = f1[3]
    f2[3 + n // 2] = f2[3]
    assert arc_chord_sup(PeriodicInterface(n, f1, f2)) == float("inf")


def test_arc_chord_lemma_lower_bound_stable():
    kappas = []
    for n in (128, 256):
        c = analytic_curve(n)
        d1 = c.f1[:, None] - c.f1[None, :]
        d2 = c.f2[:, None] - c.f2[None, :]
        beta = np.angle(np.exp(1j * (c.alpha[:, None] - c.alpha[None, :])))
        off = ~np.eye(n, dtype=bool)
        kappas.append(np.min(kernel_denominator(d1, d2)[off] / beta[off] ** 2))
    assert kappas[0] > 0.01
    assert kappas[1] == pytest.approx(kappas[0], rel=1e-2)


# tangent coefficients ------------------------------------------------------
def test_rt_examples():
    assert np.allclose(rt_coefficient(PeriodicInterface.flat(64)), 1.0)
    # the 45 degree line (a, a) has tangent (1, 1); it is not periodic, so use the tangent form
    assert rt_from_tangent(1.0, 1.0) == 0.5
    assert l2_from_tangent(1.0, 1.0) == 1.0
    assert l2_from_tangent(0.0, 1.0) == 0.0
    assert np.allclose(l2_coefficient(PeriodicInterface.flat(64)), 2.0)
    c = PeriodicInterface.from_functions(64, lambda a: a - 2 * np.sin(a), np.cos)
    sig = rt_coefficient(c)
    v = c.d(1)[0]
    assert np.all(np.sign(sig) == np.sign(v))


def test_rt_zero_at_vertical_tangent():
    c = PeriodicInterface.from_functions(64, lambda a: a - np.sin(a), lambda a: np.sin(a))
    assert rt_coefficient(c)[32] == pytest.approx(0.0, abs=1e-13)  # alpha = 0


def test_degenerate_tangent():
    with pytest.raises(DegenerateTangentError):
        rt_from_tangent(np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    c = PeriodicInterface.from_functions(64, lambda a: a - np.sin(a), lambda a: 0 * a)
    with pytest.raises(DegenerateTangentError):
        l2_coefficient(c)


def test_l2_matches_finite_difference_limit():
    c = analytic_curve(256)
    a0 = c.alpha[::16]
    fa = c.at(a0)
    vals = []
    for h in (1e-4, -1e-4):
        b = a0 + h
        fb, dfb = c.at(b), c.at(b, 1)
        x1, x2 = fa[0] - fb[0], fa[1] - fb[1]
        den = kernel_denominator(x1, x2)
        k1 = (np.cos(x1) * np.cosh(x2) - 1) / den**2
        k2 = -np.sin(x1) * np.sinh(x2) / den**2
        vals.append(-(k1 * dfb[0] + k2 * dfb[1]) * h * h)
    limit = 0.5 * (vals[0] + vals[1])
    ref = l2_coefficient(c)[::16]
    assert np.max(np.abs(limit - ref) / np.abs(ref)) < 1e-6


# turnovers -----------------------------------------------------------------
def test_turnover_examples():
    ts = detect_turnovers(PeriodicInterface.from_functions(128, lambda a: a + 0.5 * np.sin(a), np.cos))
    assert ts.count == 0 and ts.regime == "stable"
    ts = detect_turnovers(PeriodicInterface.from_functions(128, lambda a: a - 2 * np.sin(a), np.cos))
    assert ts.count == 2 and ts.regime == "turnover"
    assert np.allclose(ts.roots, [-np.pi / 3, np.pi / 3], atol=1e-10)
    assert ts.count == 2 and np.all(np.diff(ts.roots) >= np.pi / 64)
    assert detect_turnovers(PeriodicInterface.flat(64)).count == 0


def test_turnover_roots_refined():
    c = PeriodicInterface.from_functions(128, lambda a: a - 1.7 * np.sin(a + 0.3), lambda a: 0.2 * np.cos(a))
    ts = detect_turnovers(c)
    assert np.max(np.abs(c.at(ts.roots, 1)[0])) <= 1e-10
    assert np.all(np.sign(ts.curvature) == np.sign(c.at(ts.roots, 2)[0]))


@given(st.floats(-3, 3), st.floats(-1, 1), st.sampled_from([1.0, -1.0]))
def test_regime_agrees_with_sigma(amp, phase, rho):
    c = PeriodicInterface.from_functions(64, lambda a: a + amp * np.sin(a + phase), lambda a: 0.1 * np.cos(a),
                                         rho)
    sig = rt_coefficient(c)
    regime = detect_turnovers(c).regime
    if regime == "turnover":
        assert sig.min() < 0 < sig.max() or np.min(np.abs(sig)) < 1e-6
    elif regime == "stable":
        assert np.all(sig >= -1e-12)
    else:
        assert np.all(sig <= 1e-12)


# reparameterization --------------------------------------------------------
def test_change_variable_examples():
    a = fourier.grid(64)
    x, xa = change_variable(0.0, -np.pi / 2, a)
    assert np.array_equal(x, a) and np.all(xa == 1.0)
    # a pure shift needs Z2 + pi/2 = Z1; with Z2 = -pi/2 the map is a + 0.1 sin(a) + 0.1
    x, xa = change_variable(0.1, -np.pi / 2 + 0.1, a)
    assert np.allclose(x, a + 0.1, atol=1e-15)
    x, xa = change_variable(0.1, -np.pi / 2, a)
    assert np.allclose(x, a + 0.1 * np.sin(a) + 0.1, atol=1e-15)
    x, xa = change_variable(0.0, -np.pi / 2 + 0.2, a)
    assert np.allclose(x, a - 0.2 * np.sin(a), atol=1e-15)
    assert VariableChange(0.0, -np.pi / 2 + 0.2).x(0.0, 1) == pytest.approx(0.8)
    with pytest.raises(DiffeomorphismError):
        change_variable(0.0, 1.0, a)


@given(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4))
def test_change_variable_endpoints(z1, dz2):
    vc = VariableChange(z1, -np.pi / 2 + dz2)
    assert vc.x(0.0) == z1
    assert vc.x(-np.pi / 2) == pytest.approx(-np.pi / 2 + dz2, abs=1e-15)


# profiles ------------------------------------------------------------------
@given(st.floats(0.05, 2.0), st.floats(0.01, 0.5))
def test_profile_invariants(delta, delta_c):
    p = ProfileSet(delta, delta_c)
    a = np.linspace(-1, 1, 2001) * 25 * delta
    c = p.c(a)
    core = (a >= 0) & (a <= delta / 32)
    assert np.allclose(c[core], delta_c * a[core] ** 2, rtol=1e-14, atol=0)
    assert np.all(c[a <= 0] == 0) and np.all(c[a >= delta / 8] == 0)
    assert np.all(c >= 0) and c.max() <= delta
    lam = p.lam(a)
    assert np.all(lam[np.abs(a) <= 10 * delta] == 1) and np.all(lam[np.abs(a) >= 20 * delta] == 0)
    assert np.all((lam >= 0) & (lam <= 1))


def test_profile_derivatives_match_finite_differences():
    p = ProfileSet()
    a = np.linspace(0.001, 0.07, 50)
    h = 1e-6
    for order in (1, 2):
        fd = (p.c(a + h, order - 1) - p.c(a - h, order - 1)) / (2 * h)
        assert np.allclose(p.c(a, order), fd, atol=1e-6 * max(1, np.abs(fd).max()))
    a = np.linspace(0.45, 1.05, 50)
    fd = (p.lam0(a + h) - p.lam0(a - h)) / (2 * h)
    assert np.allclose(p.lam0(a, 1), fd, atol=1e-6)


def test_smooth_step_limits():
    x = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    s = smooth_step(x, 2)
    assert np.array_equal(s[0][[0, 1, 3, 4]], [0, 0, 1, 1])
    assert s[0][2] == pytest.approx(0.5)


# splitting -----------------------------------------------------------------
def test_split_zero():
    # f1 = alpha is its own Taylor polynomial and f2 = 0, so both parts vanish there
    fp, fl = split_plus(PeriodicInterface.flat(64), ProfileSet(), 2)
    assert np.all(fp[1] == 0) and np.all(fl[1] == 0)
    assert np.max(np.abs(fp[0])) < 1e-12


def test_split_already_flat_at_zero():
    # f~ = a^(m+1) lambda0 on a >= 0: the Taylor polynomial vanishes, so f+ = f~ and f^L = 0.
    # The data are only C^m at 0, so spectral Taylor coefficients converge at first order.
    p = ProfileSet()
    m = 2
    errs = []
    for n in (256, 512, 1024):
        c = PeriodicInterface.from_functions(n, lambda a: a, lambda a: np.where(a >= 0, a ** (m + 1), 0.0)
                                             * p.lam0(a))
        fp, fl = split_plus(c, p, m)
        core = (c.alpha >= 0) & (c.alpha <= p.delta)
        errs.append(max(np.max(np.abs(fl[1][core])), np.max(np.abs(fp[1][core] - c.f2[core]))))
    assert errs[0] < 2e-3
    assert errs[0] / errs[1] > 1.9 and errs[1] / errs[2] > 1.9


def test_split_reconstruction_and_vanishing():
    c = analytic_curve(256)
    p = ProfileSet()
    fp, fl = split_plus(c, p, 2)
    assert np.max(np.abs(fp + fl - np.stack([c.f1, c.f2]))) <= 1e-12
    assert np.all(fp[:, c.alpha < 0] == 0) and np.all(fp[:, c.alpha >= 2 * p.delta] == 0)
    pp = PlusPart(c, p, 2)
    for j in range(3):
        assert np.max(np.abs(pp.plus(np.array([1e-12]), j))) <= 1e-8


@given(st.integers(1, 4))
def test_split_taylor_polynomial(m):
    c = analytic_curve(128)
    pp = PlusPart(c, ProfileSet(), m)
    z = np.array([0.01, 0.02])
    # f+ near 0 is the Taylor remainder, O(z^(m+1))
    rem = pp.plus(z)
    assert np.max(np.abs(rem)) <= 10 * np.max(np.abs(c.at(np.array([0.0]), m + 1))) * 0.02 ** (m + 1) \
        / factorial(m + 1) + 1e-13


def test_split_order_guard():
    with pytest.raises(ValidationError):
        PlusPart(analytic_curve(32), ProfileSet(), 9)
