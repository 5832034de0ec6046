import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oseenwake.geometry import (PolarPoint, polar_angle, polar_identity_residual, relative_polar, to_polar,
                                wake_exponent, wake_exponent_xy, wrap_angle)

finite = st.floats(-1e3, 1e3, allow_nan=False)
angle = st.floats(-np.pi, np.pi, allow_nan=False)
radius = st.floats(1e-3, 1e3, allow_nan=False)


def test_branch_examples():
    p = to_polar((1.0, 0.0))
    assert (p.r, p.theta) == (1.0, 0.0)
    assert to_polar((-1.0, 0.0)).theta == np.pi
    assert to_polar((-1.0, -0.0)).theta == np.pi
    assert to_polar((0.0, -1.0)).theta == -np.pi / 2
    assert to_polar((0.0, 0.0)).theta == 0.0


def test_wrap_angle_closed_end():
    assert wrap_angle(np.pi) == np.pi
    assert wrap_angle(-np.pi) == np.pi
    assert wrap_angle(3 * np.pi) == np.pi
    assert wrap_angle(2 * np.pi) == 0.0


def test_wake_exponent_examples():
    assert wake_exponent(50.0, 0.0) == 0.0
    assert wake_exponent(3.0, np.pi) == pytest.approx(6.0)
    assert wake_exponent(10.0, np.pi / 2) == pytest.approx(10.0)


def test_wake_exponent_small_angle_no_cancellation():
    r, t = 1e8, 1e-9
    # r (1 - cos t) = r t^2 / 2 to high relative accuracy
    assert wake_exponent(r, t) == pytest.approx(r * t * t / 2, rel=1e-12)
    assert wake_exponent_xy(r * np.cos(t), r * np.sin(t)) == pytest.approx(r * t * t / 2, rel=1e-6)


def test_relative_polar_examples():
    for x, x0, want in [((2, 0), (1, 0), (1, 0)), ((0, 1), (0, -1), (2, np.pi / 2)),
                        ((1, 1), (1, 0), (1, np.pi / 2))]:
        rp = relative_polar(to_polar(x), to_polar(x0))
        assert rp.r1 == pytest.approx(want[0])
        assert rp.theta1 == pytest.approx(want[1])


@given(finite, finite)
def test_roundtrip(x1, x2):
    p = to_polar((x1, x2))
    q = PolarPoint.from_polar(p.r, p.theta)
    assert -np.pi < p.theta <= np.pi
    assert q.x1 == pytest.approx(x1, abs=1e-9 * (1 + p.r))
    assert q.x2 == pytest.approx(x2, abs=1e-9 * (1 + p.r))


@given(finite, finite)
def test_wake_exponent_forms_agree(x1, x2):
    p = to_polar((x1, x2))
    w = wake_exponent_xy(x1, x2)
    assert w >= 0
    assert w == pytest.approx(wake_exponent(p.r, p.theta), abs=1e-9 * (1 + p.r))


@settings(max_examples=200)
@given(radius, angle, radius, angle)
def test_polar_identity(r, t, r0, t0):
    # r - r0 cos(t - t0) = r1 cos(t1 - t)
    assert abs(polar_identity_residual(r, t, r0, t0)) <= 1e-10 * (1 + r + r0)


@settings(max_examples=200)
@given(radius, angle, radius, angle)
def test_triangle_bounds(r, t, r0, t0):
    x = np.array([r * np.cos(t), r * np.sin(t)])
    x0 = np.array([r0 * np.cos(t0), r0 * np.sin(t0)])
    r1 = np.hypot(*(x - x0))
    tol = 1e-9 * (r + r0)
    assert r1 + r0 - r >= -tol
    assert r1 + r0 - r >= r0 * (1 - np.cos(t - t0)) - tol


def test_polar_angle_vectorised():
    th = polar_angle(np.array([1.0, -1.0, 0.0]), np.array([0.0, 0.0, 2.0]))
    assert np.allclose(th, [0.0, np.pi, np.pi / 2])
