import math
import random

import numpy as np
import pytest

from mhbound.quad import (
    AdaptiveSimpsonRule,
    GaussLegendreRule,
    SupScanConfig,
    adaptive_simpson,
    composite_gauss_legendre,
    gauss_legendre_nodes,
    integrate,
    sup_scan,
)


def test_triangle_integral():
    for rule in (GaussLegendreRule(), AdaptiveSimpsonRule()):
        res = integrate(lambda u: 1.0 - u, 0.0, 1.0, rule)
        assert res.value == pytest.approx(0.5, abs=1e-12)


def test_exponential_weighted_triangle():
    res = adaptive_simpson(lambda u: (1.0 - u) * math.exp(-u), 0.0, 1.0)
    assert res.value == pytest.approx(1.0 / math.e, abs=1e-10)


def test_kinked_triangle_with_breakpoint():
    res = adaptive_simpson(lambda u: 1.0 - abs(u), -1.0, 1.0, breakpoints=(0.0,))
    assert res.value == pytest.approx(1.0, abs=1e-12)
    res_gl = composite_gauss_legendre(
        lambda u: 1.0 - np.abs(u), -1.0, 1.0, breakpoints=(0.0,)
    )
    assert res_gl.value == pytest.approx(1.0, abs=1e-12)


def test_gauss_legendre_exact_for_high_degree_polynomial():
    # one 16-node panel integrates degree 31 exactly
    rule = GaussLegendreRule(nodes_per_panel=16, panels=1)
    exact = 2.0 / 32.0  # int_{-1}^{1} x^31 dx = 0; use x^30 instead
    res = composite_gauss_legendre(lambda x: x**30, -1.0, 1.0, rule)
    exact = 2.0 / 31.0
    assert abs(res.value - exact) / exact < 1e-13


def test_linearity_on_random_smooth_functions():
    rng = random.Random(5)
    for _ in range(20):
        a1, b1 = rng.uniform(-2, 2), rng.uniform(-2, 2)

        def f(x):
            return math.sin(a1 * x) + b1 * x * x

        def g(x):
            return math.exp(-(x * x)) * math.cos(b1 * x)

        al, be = rng.uniform(-3, 3), rng.uniform(-3, 3)
        lhs = adaptive_simpson(lambda x: al * f(x) + be * g(x), -1.0, 2.0).value
        rhs = al * adaptive_simpson(f, -1.0, 2.0).value + be * adaptive_simpson(g, -1.0, 2.0).value
        assert abs(lhs - rhs) <= 1e-10 * (abs(al) + abs(be) + 1.0)


def test_doubling_panels_within_reported_error():
    for f, lo, hi in (
        (lambda x: np.exp(-x * x), -2.0, 2.0),
        (lambda x: np.sin(3 * x) + x, 0.0, 3.0),
        (lambda x: 1.0 / (1.0 + x * x), -5.0, 5.0),
    ):
        coarse = composite_gauss_legendre(f, lo, hi, GaussLegendreRule(panels=8))
        fine = composite_gauss_legendre(f, lo, hi, GaussLegendreRule(panels=16))
        assert abs(fine.value - coarse.value) <= coarse.error + 1e-14


def test_max_depth_flags_unconverged():
    rule = AdaptiveSimpsonRule(abs_tol=1e-14, rel_tol=1e-14, max_depth=2)
    res = adaptive_simpson(lambda x: abs(x - 1 / 3.0) ** 0.2, 0.0, 1.0, rule)
    assert not res.converged
    assert res.error > 0.0


def test_empty_interval():
    assert adaptive_simpson(math.sin, 1.0, 1.0).value == 0.0
    with pytest.raises(ValueError):
        adaptive_simpson(math.sin, 1.0, 0.0)


def test_sup_scan_parabola():
    res = sup_scan(lambda x: -((x - 0.3) ** 2), 0.0, 1.0)
    assert res.converged
    assert res.argmax == pytest.approx(0.3, abs=1e-6)
    assert res.value == pytest.approx(0.0, abs=1e-12)


def test_sup_scan_sine():
    res = sup_scan(math.sin, 0.0, 3.2)
    assert res.argmax == pytest.approx(math.pi / 2.0, abs=1e-6)
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_sup_scan_dominates_coarse_grid():
    rng = np.random.default_rng(11)
    coeffs = rng.normal(size=6)

    def f(x):
        return sum(c * np.sin((i + 1) * x) for i, c in enumerate(coeffs))

    cfg = SupScanConfig(coarse_steps=512)
    res = sup_scan(f, -2.0, 4.0, cfg)
    xs = np.linspace(-2.0, 4.0, cfg.coarse_steps + 1)
    assert res.value >= float(np.max(f(xs))) - 1e-15


def test_sup_scan_accepts_scalar_only_functions():
    res = sup_scan(lambda x: -abs(float(x) - 1.0), 0.0, 2.0, SupScanConfig(coarse_steps=64))
    assert res.argmax == pytest.approx(1.0, abs=1e-6)


def test_sup_scan_invalid_interval():
    with pytest.raises(ValueError):
        sup_scan(math.sin, 1.0, 1.0)


def test_gauss_legendre_nodes_cached_and_correct():
    x, w = gauss_legendre_nodes(5)
    assert w.sum() == pytest.approx(2.0, abs=1e-14)
    assert np.allclose(x, -x[::-1])
