import mpmath as mp
import numpy as np
import pytest

from oseenwake import kernels as K
from oseenwake.geometry import to_polar
from oseenwake.specfun import k0_scaled


def g_mp(x1, x2):
    """G = e^{x1} K0(r) / 2pi in multiprecision (independent oracle)."""
    with mp.workdps(30):
        r = mp.sqrt(mp.mpf(x1) ** 2 + mp.mpf(x2) ** 2)
        return mp.exp(x1) * mp.besselk(0, r) / (2 * mp.pi)


def grad_fd(fun, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    out = []
    for e in np.eye(2):
        out.append((-fun(x + 2 * h * e) + 8 * fun(x + h * e) - 8 * fun(x - h * e) + fun(x - 2 * h * e)) / (12 * h))
    return np.stack(out, -1)


def test_fundamental_examples():
    f = K.fundamental(to_polar((1.0, 0.0)))
    assert f.H == pytest.approx(0.0)
    for th in (0.0, 1.0, np.pi):
        g = K.g_kernel(np.array([np.cos(th), np.sin(th)]))
        # 1.144463 / 2pi = 0.182147
        assert g.mantissa == pytest.approx(0.182147, abs=1e-6)
    assert K.pressure_vector(np.array([2.0, 0.0])) == pytest.approx([-1 / (4 * np.pi), 0.0])


@pytest.mark.parametrize("x", [(1.0, 0.5), (-3.0, 2.0), (10.0, -1.0), (0.2, 0.1)])
def test_fundamental_invariants(x):
    f = K.fundamental(np.array(x))
    assert np.allclose(f.E, f.E.T, atol=1e-15)
    assert np.trace(f.E) == pytest.approx(-float(f.G.value), rel=1e-12, abs=1e-15)
    assert f.psi == pytest.approx(0.5 * (f.H + f.G.value))
    assert float(f.G.value) == pytest.approx(float(g_mp(*x)), rel=1e-13)


@pytest.mark.parametrize("x", [(2.0, 1.0), (-4.0, 0.5), (0.3, -0.7), (15.0, 3.0)])
def test_grad_and_hessian_against_differences(x):
    x = np.array(x)
    fd = grad_fd(lambda y: K.g_kernel(y).value, x)
    assert np.allclose(K.grad_g(x).value, fd, rtol=1e-8, atol=1e-14)
    fdh = grad_fd(lambda y: K.grad_g(y).value, x)  # fdh[i, k] = d_k d_i G
    assert np.allclose(K.hess_g(x).value, fdh, rtol=1e-7, atol=1e-13)
    fde = grad_fd(lambda y: K.oseen_tensor(y), x)
    assert np.allclose(K.oseen_tensor_grad(x), fde, rtol=1e-7, atol=1e-13)


def test_grad_g_symmetry_and_upstream_decay():
    g = K.grad_g(np.array([7.0, 0.0]))
    assert g.mantissa[1] == 0.0
    up = K.grad_g(np.array([-5.0, 0.0]))
    assert up.log_scale == pytest.approx(-10.0)


def test_grad_g_axis_value_accurate():
    # on the downstream axis d1 G = e^r (K0 - K1) / 2pi is tiny compared with K0 e^r
    r = 400.0
    with mp.workdps(40):
        R = mp.mpf(r)
        ref = float(mp.exp(R) * (mp.besselk(0, R) - mp.besselk(1, R)) / (2 * mp.pi))
    assert K.grad_g(np.array([r, 0.0])).mantissa[0] == pytest.approx(ref, rel=1e-12)


def test_grad_g_leading_examples():
    assert np.allclose(K.grad_g_leading(np.array([5.0, 0.0])).mantissa, 0.0)
    lead = K.grad_g_leading(np.array([-4.0, 0.0]))
    # (2, 0) / sqrt(8 pi) * 4^{-1/2}
    assert lead.mantissa == pytest.approx([0.1994711, 0.0], abs=1e-7)
    assert float(lead.log_scale) == pytest.approx(-8.0)


def test_grad_g_leading_remainder_bounded():
    r = np.geomspace(10.0, 100.0, 20)
    x = np.stack([np.zeros_like(r), r], -1)
    diff = np.abs(K.grad_g(x).mantissa - K.grad_g_leading(x).mantissa).max(-1)
    scaled = diff * r ** 1.5
    assert scaled.max() < 1.0
    assert np.polyfit(np.log(r), np.log(scaled), 1)[0] < 0.05


def test_tensor_leading_structure():
    tl = K.tensor_leading(np.array([-3.0, 0.0]))
    assert np.allclose(tl.wake_matrix, np.diag([0.0, 2.0]), atol=1e-15)
    assert np.allclose(tl.harmonic, np.array([[-1.0, 0.0], [0.0, 1.0]]) / (4 * np.pi * 3.0))
    x = np.array([2.0, 0.0])
    F = np.array([4 * np.pi, 0.0])
    assert K.tensor_leading(x).harmonic @ F == pytest.approx(K.harmonic_velocity(x, F))


def test_tensor_leading_remainder_near_axis():
    r = np.geomspace(20.0, 400.0, 12)
    th = 0.3 / r
    x = np.stack([r * np.cos(th), r * np.sin(th)], -1)
    tl = K.tensor_leading(x)
    rem = np.abs(K.oseen_tensor(x) - tl.value).reshape(len(r), -1).max(1)
    env = np.abs(th) / np.sqrt(r) + r ** -1.5
    assert (rem / env).max() < 5.0


def test_wake_and_harmonic_velocity_examples():
    assert K.wake_velocity(np.array([1.0, 0.0]), -np.sqrt(8 * np.pi)) == pytest.approx([1.0, 0.0])
    assert np.allclose(K.wake_velocity(np.array([3.0, 4.0]), 0.0), 0.0)
    up = K.wake_velocity(np.array([-10.0, 0.0]), 1.0)
    assert abs(up[0]) < np.exp(-19)
    assert K.harmonic_velocity(np.array([2.0, 0.0]), [4 * np.pi, 0.0]) == pytest.approx([0.5, 0.0])
    assert K.harmonic_velocity(np.array([2.0, 0.0]), [0.0, 4 * np.pi]) == pytest.approx([0.0, -0.5])
    assert np.allclose(K.harmonic_velocity(np.array([2.0, 1.0]), [0.0, 0.0]), 0.0)


def test_curl_of_tensor_is_grad_g_dot_perp():
    A = np.array([0.7, -1.3])
    for x in [np.array([2.0, 1.0]), np.array([-3.0, 0.4])]:
        d = grad_fd(lambda y: K.oseen_tensor(y) @ A, x)  # d[i, k] = d_k (E A)_i
        curl = d[1, 0] - d[0, 1]
        assert curl == pytest.approx(float(K.grad_g(x).value @ K.perp(A)), rel=1e-8)


def test_kernel_w_examples():
    w = K.kernel_w(np.array([100.0, 0.0]), np.array([0.0, 0.0]))
    assert w.mantissa == pytest.approx(k0_scaled(100.0) / (2 * np.pi))
    assert w.mantissa == pytest.approx(0.019922, abs=1e-6)
    assert w.log_scale == 0.0
    assert K.kernel_w(np.array([10.0, 0.0]), np.array([5.0, 0.0])).log_scale == 0.0
    assert K.kernel_w(np.array([-10.0, 0.0]), np.array([10.0, 0.0])).log_scale == pytest.approx(-20.0)
    with pytest.raises(K.SingularityError):
        K.kernel_w(np.array([1.0, 1.0]), np.array([1.0, 1.0]))


def test_singular_origin():
    with pytest.raises(K.SingularityError):
        K.grad_g(np.array([0.0, 0.0]))
    with pytest.raises(K.SingularityError):
        K.fundamental(np.array([0.0, 0.0]))


@pytest.mark.parametrize("x, x0", [((5.0, 1.0), (1.0, 0.0)), ((-3.0, 2.0), (0.5, -1.5)), ((30.0, 4.0), (2.0, 1.0))])
def test_grad_w_against_differences(x, x0):
    x, x0 = np.array(x), np.array(x0)
    r, th = np.hypot(*x), np.arctan2(x[1], x[0])

    def w_polar(rr, tt):
        return float(K.kernel_w(np.array([rr * np.cos(tt), rr * np.sin(tt)]), x0).value)

    h = 1e-5
    dr_fd = (w_polar(r + h, th) - w_polar(r - h, th)) / (2 * h)
    dt_fd = (w_polar(r, th + h) - w_polar(r, th - h)) / (2 * h * r)
    dr, dt = K.grad_w(x, x0)
    assert float(dr.value) == pytest.approx(dr_fd, rel=1e-6)
    assert float(dt.value) == pytest.approx(dt_fd, rel=1e-6)
    src = grad_fd(lambda y: K.kernel_w(x, y).value, x0)
    assert np.allclose(K.grad_w_source(x, x0).value, src, rtol=1e-7)
    r0 = np.hypot(*x0)
    e0 = x0 / r0
    assert float(K.dr0_w(x, x0).value) == pytest.approx(float(src @ e0), rel=1e-7)


def test_grad_w_angular_vanishes_for_origin_source():
    dr, dt = K.grad_w(np.array([3.0, 4.0]), np.array([0.0, 0.0]))
    assert dt.mantissa == 0.0


def test_w_leading_examples_and_remainder():
    x = np.array([30.0, 40.0])
    x0 = x / 50.0 * 0.5
    assert K.kernel_w_leading(x, x0) == pytest.approx(K.INV_SQRT_8PI / np.sqrt(50.0))
    assert np.allclose(K.grad_w0_leading(x, x0), 0.0)
    rng = np.random.default_rng(3)
    r = np.geomspace(20, 200, 10)
    worst = []
    for rr in r:
        t = rng.uniform(-np.pi, np.pi, 50)
        x = rr * np.stack([np.cos(t), np.sin(t)], -1)
        x0 = np.sqrt(rng.uniform(0, 1, (50, 1))) * np.stack([np.cos(t + 1), np.sin(t + 1)], -1)
        worst.append(np.max(np.abs(K.kernel_w(x, x0).value - K.kernel_w_leading(x, x0))) * rr ** 1.5)
    assert max(worst) < 1.0


def test_shifted_kernel_examples():
    x = np.array([12.0, -5.0])
    a = K.shifted_gradg_leading(x, np.array([0.0, 0.0]))
    assert np.allclose(a.mantissa, K.grad_g(x).mantissa)
    b = K.shifted_gradg_leading(np.array([20.0, 0.0]), np.array([0.7, 0.0]))
    assert np.allclose(b.mantissa, K.grad_g(np.array([20.0, 0.0])).mantissa)


def test_wake_scaled_arithmetic():
    w = K.WakeScaled(np.array([[1.0, 2.0]]), np.array([-3.0]))
    assert np.allclose(w.value, np.exp(-3.0) * np.array([[1.0, 2.0]]))
    assert np.allclose(w.rescaled(np.array([-1.0])), np.exp(-2.0) * np.array([[1.0, 2.0]]))
    far = K.grad_g(np.array([-800.0, 0.0]))
    assert np.all(np.isfinite(far.mantissa)) and far.log_scale == pytest.approx(-1600.0)
