import numpy as np
import pytest

from olsen_gspt.diagnostics import dyadic_radii, loglog_slope, max_residual, residual_slope, sphere_directions


def test_loglog_slope_power_law():
    x = np.array([1e-2, 5e-3, 2.5e-3])
    assert loglog_slope(x, 7 * x ** 3) == pytest.approx(3.0, abs=1e-12)
    assert loglog_slope(x, -x ** 2) == pytest.approx(2.0, abs=1e-12)


def test_loglog_slope_zero_residual():
    with pytest.raises(ValueError):
        loglog_slope([1e-2, 5e-3], [1e-6, 0.0])


def test_dyadic_radii():
    assert np.allclose(dyadic_radii(), [1e-2, 5e-3, 2.5e-3, 1.25e-3])
    assert len(dyadic_radii(1.0, 6)) == 6


def test_sphere_directions():
    d = sphere_directions(5, 40, nonneg=(3, 4), seed=1)
    assert d.shape == (40, 5)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.all(d[:, 3:] >= 0)
    assert np.array_equal(d, sphere_directions(5, 40, nonneg=(3, 4), seed=1))


def test_residual_slope_cubic():
    def f(z):
        return z[0] ** 3 + z[0] * z[1] ** 2

    d = sphere_directions(2, 16, seed=3)
    assert max_residual(f, [0.0, 0.0], d, 0.0) == 0.0
    slope, radii, vals = residual_slope(f, [0.0, 0.0], d)
    assert slope == pytest.approx(3.0, abs=1e-9)
    assert len(radii) == len(vals) == 4
