import numpy as np
import pytest

from vfheat.coefficients import (
    BumpTrainSpec,
    FactorialPlateauSpec,
    constant_coefficient,
    constant_density,
    make_bump_train,
    make_factorial_plateau,
    sqrt1px2_coefficient,
)
from vfheat.flow import FlowMap
from vfheat.metric_volume import (
    ball_volume,
    ball_volume_direct,
    distance,
    doubling_scan,
    uniform_volume_test,
)

RHO1 = constant_density(1.0)


@pytest.fixture(scope="module")
def plateau():
    spec = FactorialPlateauSpec(n_max=8)
    return spec, make_factorial_plateau(spec)


@pytest.fixture(scope="module")
def train():
    spec = BumpTrainSpec(n_terms=7)
    return spec, make_bump_train(spec)


class TestDistance:
    def test_translation(self):
        assert distance(constant_coefficient(1.0), 0.0, 3.0) == pytest.approx(3.0, abs=1e-12)

    def test_plateau_unit_steps(self, plateau):
        spec, a = plateau
        y = spec.centers
        assert distance(a, y[2], y[3]) == pytest.approx(1.0, abs=1e-12)

    def test_train_equivalence_with_euclidean(self, train):
        spec, a = train
        fm = FlowMap(a, window=(-10.0, 110.0))
        rng = np.random.default_rng(4)
        for _ in range(40):
            x, y = rng.uniform(0.0, 100.0, size=2)
            d = float(distance(a, x, y, fm=fm))
            assert abs(x - y) / 4.0 - 1e-12 <= d <= abs(x - y) + 1e-12

    def test_symmetry_and_triangle(self, train):
        spec, a = train
        fm = FlowMap(a, window=(-10.0, 110.0))
        rng = np.random.default_rng(5)
        pts = rng.uniform(0.0, 90.0, size=(60, 3))
        for x, y, z in pts:
            dxy = float(distance(a, x, y, fm=fm))
            dyx = float(distance(a, y, x, fm=fm))
            assert dxy == pytest.approx(dyx, abs=1e-12)
            assert dxy <= float(distance(a, x, z, fm=fm)) + \
                float(distance(a, z, y, fm=fm)) + 1e-8

    def test_flow_invariance(self, plateau):
        spec, a = plateau
        fm = FlowMap(a)
        rng = np.random.default_rng(6)
        x = rng.uniform(-1.0, 4.0, 200)
        y = rng.uniform(-1.0, 4.0, 200)
        t = rng.uniform(-1.5, 1.5, 200)
        d0 = distance(a, x, y, fm=fm)
        d1 = distance(a, fm.flow(-t, x), fm.flow(-t, y), fm=fm)
        assert np.max(np.abs(d1 - d0)) <= 1e-8

    def test_radial_identity(self, train):
        spec, a = train
        fm = FlowMap(a, window=(-20.0, 110.0))
        rng = np.random.default_rng(7)
        y = rng.uniform(0.0, 80.0, 200)
        s = rng.uniform(-3.0, 3.0, 200)
        d = distance(a, fm.flow(-s, y), y, fm=fm)
        assert np.max(np.abs(d - np.abs(s))) <= 1e-8

    def test_lipschitz_lower_bound(self, train):
        # the variational form with psi(x) = A(x) is reached (|X psi| = 1),
        # so any Lipschitz witness stays below the integral formula
        spec, a = train
        fm = FlowMap(a, window=(-10.0, 110.0))
        x, y = 20.0, 53.0
        d = float(distance(a, x, y, fm=fm))
        witness = abs(float(fm.time(y)) - float(fm.time(x)))
        assert witness <= d + 1e-12
        assert witness == pytest.approx(d, abs=1e-12)


class TestBallVolume:
    def test_translation_ball(self):
        v = ball_volume(constant_coefficient(1.0), RHO1, 0.0, 1.5)
        assert v == pytest.approx(3.0, abs=1e-10)

    def test_speed_two_ball(self):
        v = ball_volume(constant_coefficient(2.0), RHO1, 0.0, 1.0)
        assert v == pytest.approx(4.0, abs=1e-10)

    def test_routes_agree(self, plateau, train):
        for a in (plateau[1], train[1], sqrt1px2_coefficient()):
            fm = FlowMap(a, anchor=2.0, window=(-200.0, 110.0)) \
                if a.reciprocal_integral_hint is None else FlowMap(a)
            for x, r in ((2.0, 0.5), (2.5, 1.5), (3.0, 3.0)):
                v_flow = ball_volume(a, RHO1, x, r, fm=fm)
                v_direct = ball_volume_direct(a, RHO1, x, r, fm=fm)
                assert v_flow == pytest.approx(v_direct, rel=1e-7)

    def test_train_sandwich(self, train):
        # comparability of the volume with r * (a rho)(x), constants C=4, omega=0
        spec, a = train
        fm = FlowMap(a, window=(-30.0, 110.0))
        rng = np.random.default_rng(8)
        for _ in range(25):
            x = rng.uniform(0.0, 80.0)
            r = rng.uniform(0.05, 2.0)
            v = ball_volume(a, RHO1, x, r, fm=fm)
            apx = float(a.eval_a(x))
            assert 2.0 * r / 4.0 * apx - 1e-9 <= v <= 2.0 * 4.0 * r * apx + 1e-9


class TestDoubling:
    def test_translation_ratio_exactly_two(self):
        scan = doubling_scan(constant_coefficient(1.0), RHO1,
                             centers=[0.0, 1.0], radii=[0.25, 0.5, 1.0])
        for curve in scan.curves:
            assert np.max(np.abs(curve.doubling_ratios - 2.0)) <= 1e-12

    def test_train_bound_32(self, train):
        spec, a = train
        fm = FlowMap(a, window=(-30.0, 115.0))
        centers = np.linspace(0.0, 80.0, 33)
        radii = np.array([0.1, 0.25, 0.5, 1.0])
        scan = doubling_scan(a, RHO1, centers, radii, C=4.0, omega=0.0, fm=fm)
        assert scan.bound == pytest.approx(32.0)
        assert scan.max_ratio <= 32.0
        assert scan.violations == ()

    def test_plateau_ratio_blows_past_bound(self, plateau):
        spec, a = plateau
        fm = FlowMap(a)
        centers = spec.centers[4:7]
        radii = np.array([0.125, 0.25, 0.5])
        scan = doubling_scan(a, RHO1, centers, radii, C=4.0, omega=0.0, fm=fm)
        assert scan.max_ratio > 32.0
        assert len(scan.violations) > 0


class TestUniformVolume:
    def test_translation_passes(self):
        rep = uniform_volume_test(constant_coefficient(1.0), RHO1,
                                  centers=np.linspace(-5, 5, 11),
                                  radii=[0.25, 0.5, 1.0])
        assert rep.verdict
        assert rep.c_estimate == pytest.approx(1.0, abs=1e-10)
        assert rep.pinch_consistent

    def test_constant_product_three(self):
        a = constant_coefficient(2.0)
        rho = constant_density(1.5)
        rep = uniform_volume_test(a, rho, centers=np.linspace(-4, 4, 9),
                                  radii=[0.2, 0.6, 1.0])
        assert rep.verdict
        assert rep.density_product_range == pytest.approx((3.0, 3.0))
        assert rep.pinch_consistent

    def test_plateau_fails(self, plateau):
        spec, a = plateau
        centers = np.concatenate([spec.centers[3:8], spec.centers[3:8] + 0.4])
        rep = uniform_volume_test(a, RHO1, centers=centers,
                                  radii=[0.05, 0.125])
        assert not rep.verdict
        assert rep.c_estimate > 10.0
