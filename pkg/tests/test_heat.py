import math

import numpy as np
import pytest

from tcdmap.errors import UnderResolvedWarning
from tcdmap.heat import (
    OrderedExponentialCircle,
    chain_steps,
    convergence_sweep,
    exact_decay,
    exact_heat_apply,
    grid_mode,
    inverse_square_radius_integral,
    loglog_slope,
    product_expansion_residual,
    short_time_residual,
    sweep_point,
)
from tcdmap.synthetic import MetricFamily

STATIC = MetricFamily(r0=1.0, rate=0.0, horizon=1.0)
GROWING = MetricFamily(r0=1.0, rate=0.5, horizon=1.0)


def test_mode_zero_is_invariant():
    assert exact_decay(GROWING, 0, 0.7) == 1.0


def test_static_decay():
    assert exact_decay(STATIC, 1, 0.1) == pytest.approx(0.9048374180359595, rel=1e-15)


def test_growing_decay_matches_quadrature():
    from scipy.integrate import quad

    integral, _ = quad(lambda s: (1 + 0.5 * s) ** -2, 0, 0.5, epsabs=1e-14)
    assert inverse_square_radius_integral(GROWING, 0.0, 0.5) == pytest.approx(integral, rel=1e-13)
    assert exact_decay(GROWING, 2, 0.5) == pytest.approx(math.exp(-1.6), rel=1e-14)
    assert exact_decay(GROWING, 1, 1.0) == pytest.approx(0.513417119032592, rel=1e-13)


def test_semigroup():
    whole = exact_decay(GROWING, 3, 0.9)
    split = exact_decay(GROWING, 3, 0.4) * exact_decay(GROWING, 3, 0.9, 0.4)
    assert whole == pytest.approx(split, rel=1e-14)


def test_exact_heat_apply():
    decay, values = exact_heat_apply(OrderedExponentialCircle(STATIC, 0.5), 2, "sin", n=64)
    np.testing.assert_allclose(values, decay * grid_mode(64, 2, "sin"), rtol=0, atol=0)
    with pytest.raises(ValueError):
        exact_heat_apply(OrderedExponentialCircle(STATIC, 0.5), -1)
    with pytest.raises(ValueError):
        OrderedExponentialCircle(STATIC, 1.5)
    with pytest.raises(ValueError):
        grid_mode(8, 1, "tan")


def test_chain_steps_rounding():
    assert chain_steps(0.5, 0.01) == 50
    assert chain_steps(0.3, 0.1) == 3
    assert chain_steps(0.5, 0.3) == 2


def test_short_time_expansion_is_second_order():
    eps = np.geomspace(1e-3, 1e-2, 6)
    res = [short_time_residual(GROWING, 2, e, 0.2) for e in eps]
    assert loglog_slope(eps, res) == pytest.approx(2.0, abs=0.05)


def test_product_expansion_is_first_order():
    eps = np.geomspace(1e-3, 1e-2, 6)
    res = [product_expansion_residual(STATIC, 1, 0.5, e) for e in eps]
    assert loglog_slope(eps, res) == pytest.approx(1.0, abs=0.05)


def test_mode_zero_sweep_point_is_exact():
    row = sweep_point(GROWING, 0.2, 0, 200, 0.05)
    assert row["steps"] == 4
    assert row["rel_l2_error"] < 1e-12


def test_sweep_decreases_small():
    with pytest.warns(UnderResolvedWarning):
        res = convergence_sweep(GROWING, 0.4, 1, 600, [0.1, 0.05])
    assert res.strictly_decreasing()
    assert res.fitted_slope > 0.5
    table = res.table()
    assert [r["steps"] for r in table] == [4, 8]
    assert all(r["fitted_slope"] == res.fitted_slope for r in table)


def test_sweep_validation():
    with pytest.raises(ValueError):
        convergence_sweep(GROWING, 0.4, 1, 100, [0.05, 0.1])
    with pytest.raises(ValueError):
        convergence_sweep(GROWING, 0.4, 1, 100, [])
    with pytest.raises(ValueError):
        convergence_sweep(GROWING, 1.0, 1, 100, [0.3])


def test_loglog_slope_exact_power():
    x = np.array([1.0, 2.0, 4.0])
    assert loglog_slope(x, 3 * x ** 1.5) == pytest.approx(1.5, rel=1e-12)
    assert math.isfinite(loglog_slope(x, -x))
