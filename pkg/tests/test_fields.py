import numpy as np
import pytest
from scipy import integrate

from conftest import bump_scene
from oseenwake import kernels as K
from oseenwake.fields import (BodySpec, ConfigurationError, DomainError, Scene, SourceBump, SourceTerm, convolve,
                              convolve_subdivided, eval_curl_source, eval_source, manufactured_traces, net_force,
                              net_force_angular, no_flux_residual, oseen_velocity, oseen_vorticity)
from oseenwake.quadrature import QuadratureError, gauss_legendre, integrate_disk


def test_source_examples():
    f = SourceTerm((SourceBump((0.0, 0.0), 1.0, (1.0, 0.0)),))
    assert eval_source(f, np.array([0.0, 0.0])) == pytest.approx([1.0, 0.0])
    assert eval_source(f, np.array([0.6, 0.8])) == pytest.approx([0.0, 0.0])
    assert eval_curl_source(f, np.array([0.6, 0.8])) == 0.0
    # -d2 (1 - s^2)^4 at (0, 1/2) = 8 (1/2) (3/4)^3
    assert eval_curl_source(f, np.array([0.0, 0.5])) == pytest.approx(1.6875)
    assert np.allclose(eval_source(f, np.array([[3.0, 0.0], [0.0, -2.0]])), 0.0)


def test_curl_against_differences():
    f = SourceTerm((SourceBump((0.3, -0.2), 0.8, (0.7, -1.1)), SourceBump((1.0, 0.5), 0.5, (0.2, 0.4))))
    h = 1e-6
    for y in [np.array([0.5, 0.1]), np.array([0.9, 0.6]), np.array([-0.1, -0.4])]:
        d1 = (f.value(y + [h, 0]) - f.value(y - [h, 0])) / (2 * h)
        d2 = (f.value(y + [0, h]) - f.value(y - [0, h])) / (2 * h)
        assert f.curl(y) == pytest.approx(d1[1] - d2[0], rel=1e-6, abs=1e-9)


def test_bump_radius_validated():
    with pytest.raises(ConfigurationError):
        SourceBump((0.0, 0.0), 0.0, (1.0, 0.0))


def test_integral_closed_form():
    b = SourceBump((0.4, 0.1), 1.3, (1.0, -2.0))
    num = integrate.quad(lambda s: 2 * np.pi * s * (1 - s * s / 1.3 ** 2) ** 4, 0, 1.3)[0]
    assert b.integral() == pytest.approx(num * np.array([1.0, -2.0]), rel=1e-12)


def test_net_force_examples():
    f = SourceTerm((SourceBump((0.0, 0.0), 1.0, (1.0, 0.0)),))
    F = net_force(Scene(f))
    assert F.F == pytest.approx([np.pi / 5, 0.0])
    assert F.provenance == "volume"
    mirror = SourceTerm((SourceBump((1.0, 0.0), 0.5, (1.0, 2.0)), SourceBump((-1.0, 0.0), 0.5, (-1.0, -2.0))))
    assert np.allclose(net_force(Scene(mirror)).F, 0.0)
    double = SourceTerm((SourceBump((0.0, 0.0), 1.0, (2.0, 0.0)),))
    assert net_force(Scene(double)).F == pytest.approx(2 * F.F)


def test_net_force_angular():
    sc = bump_scene()
    assert net_force_angular(0.0, sc) == pytest.approx(net_force(sc).F, rel=1e-10)
    # independent quadrature of the weighted integral
    b = sc.source.bumps[0]
    for t in (np.pi / 2, np.pi):
        def integrand(s, phi, k):
            y = np.array(b.center) + s * np.array([np.cos(phi), np.sin(phi)])
            w = np.exp(y[0] * (np.cos(t) - 1) + y[1] * np.sin(t))
            return s * w * b.value(y)[k]
        ref = [integrate.dblquad(integrand, 0, 2 * np.pi, 0, b.radius, args=(k,), epsabs=1e-12)[0] for k in (0, 1)]
        assert net_force_angular(t, sc) == pytest.approx(ref, rel=1e-9)


def test_gauss_legendre_interval():
    x, w = gauss_legendre(5, 1.0, 3.0)
    assert w.sum() == pytest.approx(2.0)
    assert np.sum(w * x ** 9) == pytest.approx((3.0 ** 10 - 1) / 10)


def test_integrate_disk_polynomial_and_singular():
    val, err = integrate_disk(lambda x, y: np.ones(y.shape[:-1]), np.array([[5.0, 0.0]]), (0.0, 0.0), 2.0)
    assert val[0] == pytest.approx(4 * np.pi, rel=1e-12)
    # 1/r singularity at the target, cancelled by the polar Jacobian: int_{|y|<1} dy / |y| = 2 pi
    val, err = integrate_disk(lambda x, y: 1.0 / np.linalg.norm(y - x, axis=-1),
                              np.array([[0.0, 0.0]]), (0.0, 0.0), 1.0)
    assert val[0] == pytest.approx(2 * np.pi, rel=1e-10)
    # off-centre target inside the disk, against an independent radial quadrature about the target
    x = np.array([0.4, 0.0])

    def reach(phi):
        # distance from x to the unit circle along direction phi
        b = x[0] * np.cos(phi)
        return -b + np.sqrt(b * b - (x[0] ** 2 - 1.0))

    ref = integrate.quad(reach, 0, 2 * np.pi, epsabs=1e-13)[0]
    val, err = integrate_disk(lambda x, y: 1.0 / np.linalg.norm(y - x, axis=-1), x[None], (0.0, 0.0), 1.0)
    assert val[0] == pytest.approx(ref, rel=1e-9)


def test_integrate_disk_reports_failure():
    rough = lambda x, y: np.sin(300 * y[..., 0]) * np.cos(300 * y[..., 1])  # noqa: E731
    with pytest.raises(QuadratureError) as info:
        integrate_disk(rough, np.array([[5.0, 0.0]]), (0.0, 0.0), 1.0, tol=1e-14, max_level=2)
    assert np.all(np.isfinite(info.value.estimate))


def test_convolution_zero_source():
    x = np.array([[3.0, 1.0]])
    u = oseen_velocity(x, Scene())
    w = oseen_vorticity(x, Scene())
    assert np.allclose(u, 0.0) and np.allclose(w.mantissa, 0.0)


@pytest.mark.parametrize("x", [(0.5, 0.3), (0.9, 0.1), (1.2, 0.9), (-0.3, 0.6)])
def test_convolution_two_strategies_agree(x):
    f = bump_scene().source
    x = np.array(x)
    for kind in ("velocity", "vorticity"):
        a = convolve(kind, f, x, tol=1e-11)
        b = convolve_subdivided(kind, f, x)
        assert np.allclose(a, b, atol=1e-7, rtol=1e-7)


def test_vorticity_is_curl_of_velocity():
    sc = bump_scene()
    x = np.array([3.0, 2.0])
    h = 1e-4
    du2 = (oseen_velocity(x + [h, 0], sc)[0, 1] - oseen_velocity(x - [h, 0], sc)[0, 1]) / (2 * h)
    du1 = (oseen_velocity(x + [0, h], sc)[0, 0] - oseen_velocity(x - [0, h], sc)[0, 0]) / (2 * h)
    w = float(oseen_vorticity(x, sc).value[0])
    assert du2 - du1 == pytest.approx(w, rel=1e-6)


def test_far_downstream_matches_improved_asymptote():
    from oseenwake.asymptotics import improved_asymptote
    sc = bump_scene()
    x = np.array([40.0, 0.0])
    om = float(oseen_vorticity(x, sc).mantissa[0])
    imp = float(improved_asymptote(x, net_force_angular(0.0, sc)).mantissa)
    assert abs(om - imp) < 5 * 40.0 ** -1.5


def test_manufactured_representation(manufactured_scene):
    F0 = np.array([1.0, 0.3])
    x = np.array([[10.0, 0.0], [-3.0, 2.0], [1.5, -1.5]])
    u = oseen_velocity(x, manufactured_scene)
    ref = np.einsum("nij,j->ni", K.oseen_tensor(x), F0)
    assert np.allclose(u, ref, rtol=1e-6, atol=1e-12)
    w = oseen_vorticity(x, manufactured_scene).value
    wref = K.grad_g(x).value @ K.perp(F0)
    assert np.allclose(w, wref, rtol=1e-6)
    assert net_force(manufactured_scene).F == pytest.approx(F0, rel=1e-8)
    assert abs(no_flux_residual(manufactured_scene.body)) < 1e-10


def test_body_errors(manufactured_scene):
    with pytest.raises(DomainError):
        oseen_velocity(np.array([0.2, 0.1]), manufactured_scene)
    with pytest.raises(ConfigurationError):
        oseen_vorticity(np.array([3.0, 0.0]), Scene(body=BodySpec(1.0)))
    with pytest.raises(ConfigurationError):
        manufactured_traces((2.0, 0.0), (1.0, 0.0), BodySpec(1.0))


def test_integrate_disk_single_level_has_no_error_estimate():
    with pytest.raises(QuadratureError) as info:
        integrate_disk(lambda x, y: np.ones(y.shape[:-1]), np.array([[5.0, 0.0]]), (0.0, 0.0), 1.0, max_level=1)
    assert info.value.error == np.inf
    assert info.value.estimate[0] == pytest.approx(np.pi, rel=1e-6)
