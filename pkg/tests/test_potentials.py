import math

import numpy as np
import pytest

from hrlopt.potentials import by_name, evaluate, quadratic, rastrigin

TWO_PI = 2.0 * math.pi


def central_difference(potential, x, i):
    step = 1e-5 * max(1.0, abs(x[i]))
    hi = x.copy()
    lo = x.copy()
    hi[i] += step
    lo[i] -= step
    return (potential.value(hi) - potential.value(lo)) / (2.0 * step)


class TestRastrigin:
    def test_minimum_at_origin(self):
        p = rastrigin(10)
        x = np.zeros(10)
        assert p.value(x) == 0.0
        assert np.all(p.gradient(x) == 0.0)
        assert p.minimum_value == 0.0

    def test_value_at_ones(self):
        p = rastrigin(10)
        assert p.value(np.ones(10)) == pytest.approx(10.0, rel=1e-12)

    def test_value_at_half(self):
        p = rastrigin(10)
        x = np.zeros(10)
        x[0] = 0.5
        assert p.value(x) == pytest.approx(2.25, rel=1e-12)

    def test_one_dim_value(self):
        p = rastrigin(1)
        assert p.value(np.array([0.25])) == pytest.approx(1.0625, rel=1e-12)

    def test_rejects_zero_dim(self):
        with pytest.raises(ValueError):
            rastrigin(0)

    def test_smoothness_constant(self):
        assert rastrigin(3).smoothness == pytest.approx(2.0 + 4.0 * math.pi**2)

    def test_even(self):
        p = rastrigin(6)
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.uniform(-5, 5, 6)
            assert p.value(x) == pytest.approx(p.value(-x), rel=1e-12)

    def test_lower_bound(self):
        p = rastrigin(8)
        rng = np.random.default_rng(1)
        for _ in range(200):
            x = rng.uniform(-10, 10, 8)
            assert p.value(x) >= x @ x - 8

    def test_above_declared_minimum(self):
        p = rastrigin(4)
        rng = np.random.default_rng(2)
        for _ in range(200):
            assert p.value(rng.uniform(-5, 5, 4)) >= p.minimum_value - 1e-9


class TestQuadratic:
    def test_minimum(self):
        p = quadratic(3)
        assert evaluate(p, np.zeros(3)) == 0.0

    def test_value(self):
        p = quadratic(2)
        assert evaluate(p, np.array([3.0, 4.0])) == pytest.approx(12.5, rel=1e-14)

    def test_gradient_exact(self):
        p = quadratic(5, curvature=2.5, center=np.arange(5.0))
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = rng.uniform(-4, 4, 5)
            assert np.array_equal(p.gradient(x), 2.5 * (x - np.arange(5.0)))

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            quadratic(0)
        with pytest.raises(ValueError):
            quadratic(2, curvature=-1.0)
        with pytest.raises(ValueError):
            quadratic(2, center=np.zeros(3))


@pytest.mark.parametrize("potential", [rastrigin(7), quadratic(7, curvature=1.7)])
def test_gradient_matches_finite_differences(potential):
    rng = np.random.default_rng(42)
    for _ in range(120):
        x = rng.uniform(-5, 5, potential.dim)
        g = potential.gradient(x)
        for i in range(potential.dim):
            fd = central_difference(potential, x, i)
            assert abs(fd - g[i]) <= 1e-5 * max(1.0, abs(g[i]))


def test_batched_evaluation_matches_pointwise():
    p = rastrigin(4)
    rng = np.random.default_rng(5)
    xs = rng.uniform(-3, 3, (20, 4))
    vals = p.value_fn(xs)
    grads = p.grad_fn(xs)
    for i in range(20):
        assert vals[i] == p.value(xs[i])
        assert np.array_equal(grads[i], p.gradient(xs[i]))


def test_validation_errors():
    p = rastrigin(3)
    with pytest.raises(ValueError, match="coordinates"):
        p.value(np.zeros(4))
    with pytest.raises(ValueError, match="finite"):
        p.value(np.array([1.0, np.nan, 0.0]))
    with pytest.raises(ValueError, match="finite"):
        evaluate(p, np.array([np.inf, 0.0, 0.0]))


def test_by_name():
    assert by_name("rastrigin", 5).name == "rastrigin"
    q = by_name("quadratic", 3, curvature=2.0)
    assert q.curvature == 2.0
    with pytest.raises(ValueError, match="unknown potential"):
        by_name("ackley", 2)
