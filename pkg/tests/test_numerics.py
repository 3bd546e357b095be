import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfheat.errors import BracketInvalid, NonFinite, SubdivisionLimit
from vfheat.numerics import (
    GridFunction,
    QuadratureConfig,
    TestFunction,
    bump_function,
    gaussian_function,
    integrate,
    invert_monotone,
    lp_norm,
    modulate,
    plateau_function,
)


class TestIntegrate:
    def test_constant(self):
        assert integrate(lambda x: np.ones_like(x), 0.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_linear(self):
        assert integrate(lambda x: x, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_normalized_gaussian(self):
        f = lambda s: (4 * np.pi) ** -0.5 * np.exp(-s * s / 4.0)
        assert integrate(f, -40.0, 40.0) == pytest.approx(1.0, abs=1e-10)

    def test_scalar_callable_is_wrapped(self):
        assert integrate(lambda x: math.cos(x), 0.0, 1.0) == pytest.approx(math.sin(1.0), abs=1e-10)

    def test_breakpoints_help_kinked_integrand(self):
        f = lambda x: np.abs(x - 0.3)
        exact = 0.3**2 / 2 + 0.7**2 / 2
        got = integrate(f, 0.0, 1.0, breakpoints=[0.3])
        assert got == pytest.approx(exact, abs=1e-12)

    def test_subdivision_limit(self):
        cfg = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=3)
        spike = lambda x: 1.0 / (1e-6 + (x - 0.123456) ** 2)
        with pytest.raises(SubdivisionLimit):
            integrate(spike, 0.0, 1.0, cfg)

    def test_non_finite(self):
        def bad(x):
            with np.errstate(divide="ignore", over="ignore"):
                return 1.0 / np.asarray(x)

        with pytest.raises(NonFinite):
            integrate(bad, 0.0, 1.0)

    def test_linearity(self):
        rng = np.random.default_rng(7)
        f = lambda x: np.sin(3 * x) + x**2
        g = lambda x: np.exp(-x) * np.cos(x)
        i_f = integrate(f, -1.0, 2.0)
        i_g = integrate(g, -1.0, 2.0)
        for _ in range(20):
            a, b = rng.uniform(-5, 5, size=2)
            combo = integrate(lambda x: a * f(x) + b * g(x), -1.0, 2.0)
            assert abs(combo - a * i_f - b * i_g) <= 1e-9 * (1 + abs(a) + abs(b))


class TestInvertMonotone:
    def test_identity(self):
        assert invert_monotone(lambda x: x, 0.3, (0.0, 1.0)) == pytest.approx(0.3, abs=1e-12)

    def test_cube_root(self):
        assert invert_monotone(lambda x: x**3, 8.0, (0.0, 3.0)) == pytest.approx(2.0, abs=1e-10)

    def test_asinh_inverse_is_sinh(self):
        got = invert_monotone(math.asinh, 1.0, (0.0, 10.0))
        assert got == pytest.approx(math.sinh(1.0), abs=1e-10)

    def test_bracket_invalid(self):
        with pytest.raises(BracketInvalid):
            invert_monotone(lambda x: x, 2.0, (0.0, 1.0))

    def test_random_monotone_cubics_roundtrip(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            a, b, c = rng.uniform(0.05, 3.0, size=3)
            d = rng.uniform(-5.0, 5.0)
            g = lambda x: a * x**3 + b * x + c * math.tanh(x) + d
            x_true = rng.uniform(-4.0, 4.0)
            got = invert_monotone(g, g(x_true), (-5.0, 5.0), tol=1e-12)
            assert abs(got - x_true) <= 1e-9


class TestLpNorm:
    def test_sup_norm_of_hat(self):
        phi = GridFunction.from_callable(
            lambda x: np.clip(1 - np.abs(2 * x - 1), 0, None), 0.0, 1.0, resolution=512)
        assert lp_norm(phi, np.inf) == pytest.approx(1.0, abs=1e-12)

    def test_indicator_l2(self):
        phi = GridFunction.from_samples(0.0, 1.0, np.ones(4097))
        assert lp_norm(phi, 2.0) == pytest.approx(1.0, abs=1e-3)

    def test_gaussian_l2_is_pi_quarter(self):
        phi = GridFunction.from_callable(lambda x: np.exp(-x * x / 2), -10.0, 10.0)
        assert lp_norm(phi, 2.0) == pytest.approx(np.pi**0.25, abs=1e-8)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        n = 257
        u = rng.normal(size=n)
        v = rng.normal(size=n)
        p = rng.uniform(1.0, 6.0)
        fu = GridFunction.from_samples(0.0, 1.0, u)
        fv = GridFunction.from_samples(0.0, 1.0, v)
        fs = GridFunction.from_samples(0.0, 1.0, u + v)
        assert lp_norm(fs, p) <= lp_norm(fu, p) + lp_norm(fv, p) + 1e-8


class TestGridFunction:
    def test_invariants(self):
        with pytest.raises(ValueError):
            GridFunction(1.0, 0.0, np.ones(8), 1.0)
        with pytest.raises(ValueError):
            GridFunction(0.0, 1.0, np.ones(8), 0.5)
        gf = GridFunction.from_samples(0.0, 2.0, np.arange(5.0))
        assert gf.spacing == pytest.approx(0.5)
        assert not gf.values.flags.writeable

    def test_grid_endpoints(self):
        gf = GridFunction.from_callable(lambda x: x, 0.0, 1.0, resolution=64)
        g = gf.grid()
        assert g[0] == 0.0 and g[-1] == 1.0
        assert np.allclose(gf.values, g)


def _check_test_function(tf: TestFunction, rng, rel=1e-6):
    lo, hi = tf.support
    pad = 0.5 * (hi - lo)
    outside = np.concatenate([
        rng.uniform(lo - 10 * pad, lo, 50), rng.uniform(hi, hi + 10 * pad, 50)])
    assert np.all(np.abs(np.asarray(tf.value(outside))) == 0.0)
    assert np.all(np.abs(np.asarray(tf.derivative(outside))) == 0.0)
    x = rng.uniform(lo + 1e-3 * pad, hi - 1e-3 * pad, 200)
    h = 1e-6 * (hi - lo)
    fd = (np.asarray(tf.value(x + h)) - np.asarray(tf.value(x - h))) / (2 * h)
    dv = np.asarray(tf.derivative(x))
    scale = np.max(np.abs(dv)) + 1e-30
    assert np.max(np.abs(fd - dv)) <= rel * scale * 10


class TestTestFunctions:
    def test_bump(self):
        rng = np.random.default_rng(0)
        tf = bump_function(2.0, 1.5, height=3.0)
        assert tf.value(2.0) == pytest.approx(3.0)
        _check_test_function(tf, rng)

    def test_plateau(self):
        rng = np.random.default_rng(1)
        tf = plateau_function(-1.0, 1.0, rise=0.5)
        assert tf.value(0.0) == pytest.approx(1.0)
        assert tf.value(np.array([-1.0, 1.0])) == pytest.approx([1.0, 1.0])
        _check_test_function(tf, rng)

    def test_gaussian(self):
        rng = np.random.default_rng(2)
        tf = gaussian_function(0.0, 1.0)
        _check_test_function(tf, rng)

    def test_modulated(self):
        tf = modulate(bump_function(0.0, 1.0), 5.0)
        x = np.linspace(-0.9, 0.9, 101)
        h = 1e-7
        fd = (tf.value(x + h) - tf.value(x - h)) / (2 * h)
        assert np.max(np.abs(fd - tf.derivative(x))) <= 1e-5
