import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from muskat_lab import verify as V
from muskat_lab.verify import CheckReport


# reports ---------------------------------------------------------------------
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_report_pass_iff_measured_within_bound(m, b):
    r = V._report("x", m, b, "lemma", eps=0.1)
    assert r.passed == (m <= b)
    d = r.to_dict()
    assert d["pass"] == r.passed and d["margin"] == pytest.approx(b - m)
    assert d["params"] == {"eps": 0.1}


def test_reports_json_sorted_by_name():
    reps = [CheckReport("b", 1.0, 2.0, True), CheckReport("a", 3.0, 2.0, False)]
    out = json.loads(V.reports_to_json(reps))
    assert [r["name"] for r in out] == ["a", "b"] and out[0]["pass"] is False


# Garding suite -----------------------------------------------------------------
def test_garding_zero_functions():
    zero = lambda x: np.zeros(np.shape(x))
    c = lambda x: np.asarray(x) * V.support_cutoff(x)
    t = V.garding_terms(zero, zero, c, 1e-2, n=64)
    assert all(float(t[k]) == 0.0 for k in ("lhs_transport", "lhs_smooth", "rhs", "norm"))


def test_garding_zero_weight():
    tr = V.SeededTriples.from_seeds([4])
    zero = lambda x: np.zeros((1,) + np.shape(x))
    t = V.garding_terms(tr.f, tr.g, zero, 1e-2, n=64)
    assert np.all(t["lhs_transport"] == 0) and np.all(t["lhs_smooth"] == 0) and np.all(t["rhs"] == 0)
    assert np.all(t["norm"] > 0)


def test_seeded_triples_supports():
    tr = V.SeededTriples.from_seeds(range(5))
    x = np.linspace(0, np.pi, 400)
    outside = x >= V.SUPPORT
    for comp in (tr.f(x), tr.g(x), tr.c(x)):
        assert comp.shape == (5, 400) and np.all(comp[:, outside] == 0) and np.all(comp[:, 0] == 0)
    # |c| <~ alpha
    assert np.all(np.abs(tr.c(x[1:])) <= 16 * x[1:])


def test_garding_suite_small_is_deterministic_and_passes():
    a = V.run_garding_suite(range(4), n=128, eps_list=(1e-1, 1e-2), kernel_points=50, bound_seeds=1)
    b = V.run_garding_suite(range(4), n=128, eps_list=(1e-1, 1e-2), kernel_points=50, bound_seeds=1)
    assert V.reports_to_json(a) == V.reports_to_json(b)
    assert all(r.passed for r in a if not r.name.startswith(("boundene", "newlebound")))


@pytest.mark.parametrize("eps", V.EPS_LIST)
def test_pointwise_kernel_inequalities(eps):
    m = V.kernel_inequality_margins(eps, 120)
    assert m["smooth"] > 0 and m["square"] > 0 and m["factor4"] > 0


# boundedness sub-lemma -------------------------------------------------------
@pytest.fixture(scope="module")
def seeded_sups():
    tr = V.SeededTriples.from_seeds([0])
    c = lambda x: tr.c(x)[0]
    return {w: [V.boundary_supremum(c, e, w, 129) for e in V.EPS_LIST] for w in ("smooth", "square")}


def test_boundene_suprema_converge(seeded_sups):
    sups = seeded_sups["smooth"]
    # increments shrink geometrically, so the suprema have a finite limit
    assert V.increment_contraction(sups) < 0.5
    assert max(sups[1:]) / min(sups[1:]) < V.STABILITY_FACTOR


def test_boundene_literal_rule(seeded_sups):
    # the literal operationalization: suprema over the four scales vary by < 2x and
    # do not grow monotonically once eps < 1e-2
    sups = seeded_sups["smooth"]
    print("suprema:", sups)
    assert max(sups) / min(sups) < 2.0
    assert not (sups[1] < sups[2] < sups[3])


def test_newlebound_suprema_bounded(seeded_sups):
    sq = seeded_sups["square"]
    assert max(sq) <= V.STABILITY_FACTOR * sq[0]


# identities ------------------------------------------------------------------
def test_identity_suite_passes():
    reps = V.run_identity_suite()
    assert all(r.passed for r in reps), [r.name for r in reps if not r.passed]
    names = {r.name for r in reps}
    assert {"hilbert.involution", "hilbert.isometry", "hilbert.poisson_line.eps=0.1"} <= names


def test_integral_cancel_example():
    assert V.integral_cancel_error(np.pi / 2, 0.1) <= 1e-10


def test_periodized_poisson_closed_forms():
    x = np.linspace(-3, 3, 7)
    k = np.arange(-20000, 20001)[:, None]
    eps = 0.3
    img = np.sum(eps / ((x + 2 * np.pi * k) ** 2 + eps ** 2), axis=0)
    assert np.allclose(V.periodized_poisson(x, eps), img, atol=1e-5)
    slope = np.sum((x + 2 * np.pi * k) * eps / ((x + 2 * np.pi * k) ** 2 + eps ** 2) ** 2, axis=0)
    assert np.allclose(V.periodized_poisson_slope(x, eps), slope, atol=1e-10)


# eps limits ------------------------------------------------------------------
def test_limit_suite_passes():
    reps = V.run_limit_suite()
    assert len(reps) == 2 * len(V.LIMIT_FUNCTIONS)
    for r in reps:
        assert r.passed and 0.8 <= r.params["rate"] <= 1.2, (r.name, r.params["rate"])


def test_limit_constant_is_exactly_zero():
    reps = V.run_limit_suite({"const": (lambda x: 1.0 + 0 * x, lambda x: 0 * x)})
    for r in reps:
        assert r.passed and r.params["errors"] == [0.0] * 4


def test_limit_square_rates():
    g, dg = (lambda x: x ** 2, lambda x: 2 * x)
    reps = {r.name: r for r in V.run_limit_suite({"sq": (g, dg)})}
    assert 0.8 <= reps["limit.transport.sq"].params["rate"] <= 1.2
    # g''(0) != 0 leaves a boundary layer: E2 = 2 eps arctan(a / eps) exactly, whose H1 norm is O(eps^1/2)
    assert reps["limit.smooth.sq"].params["rate"] == pytest.approx(0.5, abs=0.05)
    for eps in (1e-2, 5e-3):
        a, _, e2 = V.limit_errors(g, dg, eps)
        assert np.max(np.abs(e2 - 2 * eps * np.arctan(a / eps))) <= 1e-8


def test_fit_rate_exact_power():
    eps = np.array([1e-2, 5e-3, 2.5e-3])
    assert V.fit_rate(eps, 3 * eps ** 1.5) == pytest.approx(1.5)


# kernel diagonal limit -------------------------------------------------------
def test_kernel_limit_suite():
    reps = {r.name: r for r in V.run_kernel_limit_suite()}
    assert len(reps) == 12 and all(r.passed for r in reps.values())
    assert reps["kernel_limit.flat"].params["mean_formula"] == pytest.approx(2.0, abs=1e-14)
    assert reps["kernel_limit.diagonal"].params["mean_formula"] == pytest.approx(1.0, abs=1e-14)


def test_kernel_limit_detects_wrong_formula():
    c = V.random_analytic_curve(3)
    reps = V.run_kernel_limit_suite({"x": c}, tol=1e-5)
    assert reps[0].passed
    bad = (c.at, lambda x: 1.01 * c.at(x, 1))
    pts = c.alpha[::8]
    est = V.kernel_diagonal_limit(bad, pts)
    assert np.max(np.abs(est - V.diagonal_formula(c, pts))) > 1e-3


def test_run_all_is_sorted_and_reproducible():
    a = V.run_identity_suite(n=128) + V.run_kernel_limit_suite(stride=16)
    b = V.run_identity_suite(n=128) + V.run_kernel_limit_suite(stride=16)
    assert V.reports_to_json(a) == V.reports_to_json(b)
