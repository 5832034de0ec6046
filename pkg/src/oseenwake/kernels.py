r"""Closed-form Oseen kernels for the uniform stream 2 e1.

Everything here works on arrays of Cartesian points (last axis of length 2)
or on a single :class:`~oseenwake.geometry.PolarPoint`.  Kernels that carry an
exponential wake factor are returned as :class:`WakeScaled` pairs so callers
can add exponents before exponentiating.

Conventions:

* ``H = log(r) / 2pi``, ``G = e^{x1} K0(r) / 2pi``, ``psi = (H + G) / 2``;
* ``(Delta - 2 d1) G = -delta`` and ``E A`` solves the Oseen system with
  the point force ``A delta``;
* vorticity is ``d1 u2 - d2 u1`` and ``A_perp = (-A2, A1)``, so that
  ``curl(E A) = grad G . A_perp``.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import PolarPoint, wake_exponent_xy
from .specfun import k0_scaled, k1_scaled, k1m0_scaled

TWO_PI = 2.0 * np.pi
INV_SQRT_8PI = 1.0 / np.sqrt(8.0 * np.pi)
INV_SQRT_32PI = 1.0 / np.sqrt(32.0 * np.pi)


class SingularityError(ValueError):
    """A kernel was evaluated at its singular point."""


@dataclass(frozen=True)
class WakeScaled:
    """A value stored as ``mantissa * exp(log_scale)``.

    ``log_scale`` broadcasts against the leading axes of ``mantissa``.
    """

    mantissa: np.ndarray
    log_scale: np.ndarray

    @property
    def value(self):
        m = np.asarray(self.mantissa)
        s = np.asarray(self.log_scale)
        s = s.reshape(s.shape + (1,) * (m.ndim - s.ndim))
        return m * np.exp(s)

    def rescaled(self, log_scale):
        """Mantissa expressed against another exponent (exp(old - new) folded in)."""
        m = np.asarray(self.mantissa)
        d = np.asarray(self.log_scale) - np.asarray(log_scale)
        d = d.reshape(d.shape + (1,) * (m.ndim - d.ndim))
        return m * np.exp(d)


def perp(a):
    """(-a2, a1) along the last axis."""
    a = np.asarray(a, dtype=float)
    return np.stack([-a[..., 1], a[..., 0]], axis=-1)


def _xy(x):
    if isinstance(x, PolarPoint):
        return np.array([x.x1, x.x2])
    return np.asarray(x, dtype=float)


def _polar_parts(x):
    x = _xy(x)
    x1, x2 = x[..., 0], x[..., 1]
    r = np.hypot(x1, x2)
    if np.any(r == 0):
        raise SingularityError("Oseen kernels are singular at the origin")
    return x1, x2, r, x1 / r, x2 / r


# ---------------------------------------------------------------- G and H

def g_kernel(x):
    """G as WakeScaled: mantissa k0s(r)/2pi, log_scale -(r - x1)."""
    x1, x2, r, c, s = _polar_parts(x)
    return WakeScaled(k0_scaled(r) / TWO_PI, -wake_exponent_xy(x1, x2))


def h_kernel(x):
    _, _, r, _, _ = _polar_parts(x)
    return np.log(r) / TWO_PI


def grad_h(x):
    x1, x2, r, c, s = _polar_parts(x)
    return np.stack([c, s], axis=-1) / (TWO_PI * r)[..., None]


def hess_h(x):
    x1, x2, r, c, s = _polar_parts(x)
    k = 1.0 / (TWO_PI * r * r)
    h11 = (1.0 - 2 * c * c) * k
    h12 = -2 * c * s * k
    h22 = (1.0 - 2 * s * s) * k
    return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)


def grad_g(x):
    """Exact grad G with the wake factor exp(x1 - r) split off."""
    x1, x2, r, c, s = _polar_parts(x)
    k0s = k0_scaled(r)
    k1s = k1_scaled(r)
    k1m0s = k1m0_scaled(r)
    # k0s - k1s cos = k0s (1 - cos) - (k1s - k0s) cos keeps the axis value accurate
    one_m_c = wake_exponent_xy(x1, x2) / r
    g1 = (k0s * one_m_c - k1m0s * c) / TWO_PI
    g2 = -k1s * s / TWO_PI
    return WakeScaled(np.stack([g1, g2], axis=-1), -wake_exponent_xy(x1, x2))


def hess_g(x):
    """Hessian of G, WakeScaled, shape (..., 2, 2)."""
    x1, x2, r, c, s = _polar_parts(x)
    k0s = k0_scaled(r)
    k1s = k1_scaled(r)
    u = np.stack([c, s], axis=-1)
    eye = np.eye(2)
    e1 = np.array([1.0, 0.0])
    grad_k0 = -k1s[..., None] * u
    hk0 = (k0s[..., None, None] * u[..., :, None] * u[..., None, :]
           + (k1s / r)[..., None, None] * (2 * u[..., :, None] * u[..., None, :] - eye))
    hg = (k0s[..., None, None] * np.outer(e1, e1)
          + e1[:, None] * grad_k0[..., None, :]
          + grad_k0[..., :, None] * e1[None, :]
          + hk0) / TWO_PI
    return WakeScaled(hg, -wake_exponent_xy(x1, x2))


def grad_g_leading(x):
    """(1/sqrt(8 pi)) (1 - cos, -sin) r^{-1/2}, with log_scale -r(1 - cos)."""
    x1, x2, r, c, s = _polar_parts(x)
    w = wake_exponent_xy(x1, x2)
    m = INV_SQRT_8PI * np.stack([w / r, -s], axis=-1) / np.sqrt(r)[..., None]
    return WakeScaled(m, -w)


# ------------------------------------------------------------ velocity tensor

def oseen_tensor(x):
    """E(x), shape (..., 2, 2)."""
    g = g_kernel(x).value
    gg = grad_g(x).value
    gh = grad_h(x)
    dpsi = 0.5 * (gh + gg)
    e11 = dpsi[..., 0] - g
    e12 = dpsi[..., 1]
    e22 = -dpsi[..., 0]
    return np.stack([np.stack([e11, e12], -1), np.stack([e12, e22], -1)], -2)


def oseen_tensor_grad(x):
    """dE[..., i, j, k] = d_k E_ij."""
    gg = grad_g(x).value
    hpsi = 0.5 * (hess_h(x) + hess_g(x).value)
    d11 = hpsi[..., 0, :] - gg
    d12 = hpsi[..., 1, :]
    d22 = -hpsi[..., 0, :]
    return np.stack([np.stack([d11, d12], -2), np.stack([d12, d22], -2)], -3)


def pressure_vector(x):
    """e = -grad H."""
    return -grad_h(x)


def pressure_vector_grad(x):
    """de[..., i, k] = d_k e_i."""
    return -hess_h(x)


@dataclass(frozen=True)
class OseenFundamental:
    E: np.ndarray
    e: np.ndarray
    gradG: WakeScaled
    G: WakeScaled
    H: np.ndarray
    psi: np.ndarray


def fundamental(x):
    """All fundamental-solution pieces at x."""
    G = g_kernel(x)
    H = h_kernel(x)
    return OseenFundamental(
        E=oseen_tensor(x),
        e=pressure_vector(x),
        gradG=grad_g(x),
        G=G,
        H=H,
        psi=0.5 * (H + G.value),
    )


@dataclass(frozen=True)
class TensorLeading:
    """Leading far-field split of E: wake coefficient times matrix, plus harmonic matrix."""

    wake_coefficient: WakeScaled
    wake_matrix: np.ndarray
    harmonic: np.ndarray

    @property
    def value(self):
        return self.wake_coefficient.value[..., None, None] * self.wake_matrix + self.harmonic


def tensor_leading(x):
    x1, x2, r, c, s = _polar_parts(x)
    coef = WakeScaled(-INV_SQRT_32PI / np.sqrt(r), -wake_exponent_xy(x1, x2))
    wake = np.stack([np.stack([1 + c, s], -1), np.stack([s, 1 - c], -1)], -2)
    harm = np.stack([np.stack([c, s], -1), np.stack([s, -c], -1)], -2) / (4 * np.pi * r)[..., None, None]
    return TensorLeading(coef, wake, harm)


def wake_velocity(x, F1):
    """-F1 e1 / sqrt(8 pi) r^{-1/2} exp(-r(1 - cos))."""
    x1, x2, r, c, s = _polar_parts(x)
    amp = -F1 * INV_SQRT_8PI / np.sqrt(r) * np.exp(-wake_exponent_xy(x1, x2))
    return np.stack([amp, np.zeros_like(amp)], axis=-1)


def harmonic_velocity(x, F):
    """F1/(4 pi) e_r / r - F2/(4 pi) e_theta / r."""
    x1, x2, r, c, s = _polar_parts(x)
    F = np.asarray(F, dtype=float)
    k = 1.0 / (4 * np.pi * r)
    u1 = (F[..., 0] * c + F[..., 1] * s) * k
    u2 = (F[..., 0] * s - F[..., 1] * c) * k
    return np.stack([u1, u2], axis=-1)


# --------------------------------------------------------------- kernel W

def _pair_parts(x, x0):
    x = _xy(x)
    x0 = _xy(x0)
    r = np.hypot(x[..., 0], x[..., 1])
    r0 = np.hypot(x0[..., 0], x0[..., 1])
    d = x - x0
    r1 = np.hypot(d[..., 0], d[..., 1])
    if np.any(r1 == 0):
        raise SingularityError("W is singular at x = x0")
    # cos(theta - theta0) and sin(theta - theta0), safe at the origin
    rr0 = r * r0
    safe = np.where(rr0 > 0, rr0, 1.0)
    cdt = np.where(rr0 > 0, (x[..., 0] * x0[..., 0] + x[..., 1] * x0[..., 1]) / safe, 1.0)
    sdt = np.where(rr0 > 0, (x0[..., 0] * x[..., 1] - x0[..., 1] * x[..., 0]) / safe, 0.0)
    return x, x0, r, r0, r1, cdt, sdt


def _log_scale_w(r, r0, r1):
    # r - r0 - r1 <= 0 by the triangle inequality; clip rounding noise
    return np.minimum(r - r0 - r1, 0.0)


def kernel_w(x, x0):
    """W = e^{r - r0} K0(|x - x0|) / 2pi, as WakeScaled."""
    x, x0, r, r0, r1, cdt, sdt = _pair_parts(x, x0)
    return WakeScaled(k0_scaled(r1) / TWO_PI, _log_scale_w(r, r0, r1))


def grad_w(x, x0):
    """(d_r W, r^{-1} d_theta W) with respect to x, both WakeScaled on r - r0 - r1."""
    x, x0, r, r0, r1, cdt, sdt = _pair_parts(x, x0)
    k0s = k0_scaled(r1)
    k1s = k1_scaled(r1)
    k1m0s = k1m0_scaled(r1)
    proj = r - r0 * cdt  # = r1 cos(theta1 - theta)
    cos_d = proj / r1
    # 1 - cos_d = r0^2 sin^2 / (r1 (r1 + proj)) when proj > 0
    pos = proj > 0
    one_m = np.where(pos, (r0 * sdt) ** 2 / (r1 * np.where(pos, r1 + proj, 1.0)), 1.0 - cos_d)
    dr = (k0s * one_m - k1m0s * cos_d) / TWO_PI
    dth = -r0 * sdt * k1s / (TWO_PI * r1)
    ls = _log_scale_w(r, r0, r1)
    return WakeScaled(dr, ls), WakeScaled(dth, ls)


def grad_w_source(x, x0):
    """Cartesian gradient of W with respect to x0, WakeScaled, shape (..., 2)."""
    x, x0, r, r0, r1, cdt, sdt = _pair_parts(x, x0)
    k0s = k0_scaled(r1)
    k1s = k1_scaled(r1)
    safe = np.where(r0 > 0, r0, 1.0)[..., None]
    u0 = np.where((r0 > 0)[..., None], x0 / safe, 0.0)
    m = (-k0s[..., None] * u0 + k1s[..., None] * (x - x0) / r1[..., None]) / TWO_PI
    return WakeScaled(m, _log_scale_w(r, r0, r1))


def dr0_w(x, x0):
    """Radial derivative of W in x0, WakeScaled."""
    x, x0, r, r0, r1, cdt, sdt = _pair_parts(x, x0)
    k0s = k0_scaled(r1)
    k1s = k1_scaled(r1)
    m = -(k0s + k1s * (r0 - r * cdt) / r1) / TWO_PI
    return WakeScaled(m, _log_scale_w(r, r0, r1))


def kernel_w_leading(x, x0):
    """(1/sqrt(8 pi)) r^{-1/2} exp(-r0 (1 - cos(theta - theta0)))."""
    x, x0, r, r0, r1, cdt, sdt = _pair_parts(x, x0)
    return INV_SQRT_8PI / np.sqrt(r) * np.exp(-r0 * (1.0 - cdt))


def grad_w0_leading(x, x0):
    """Leading gradient of W in x0: (cos th - cos th0, sin th - sin th0) times the leading W."""
    x, x0, r, r0, r1, cdt, sdt = _pair_parts(x, x0)
    u = x / r[..., None]
    safe = np.where(r0 > 0, r0, 1.0)[..., None]
    u0 = np.where((r0 > 0)[..., None], x0 / safe, np.stack([np.ones_like(r0), np.zeros_like(r0)], -1))
    lead = INV_SQRT_8PI / np.sqrt(r) * np.exp(-r0 * (1.0 - cdt))
    return (u - u0) * lead[..., None]


def shifted_gradg_leading(x, x0):
    """grad G(x) exp(r0 (cos(theta - theta0) - cos theta0)), factor folded into the mantissa."""
    xa = _xy(x)
    x0a = _xy(x0)
    gg = grad_g(xa)
    r = np.hypot(xa[..., 0], xa[..., 1])
    # r0 cos(theta - theta0) = x0 . x / r and r0 cos(theta0) = x0_1
    expo = (x0a[..., 0] * xa[..., 0] + x0a[..., 1] * xa[..., 1]) / r - x0a[..., 0]
    return WakeScaled(gg.mantissa * np.exp(expo)[..., None], gg.log_scale)


def grad_g_shifted_exact(x, x0):
    """grad G(x - x0) rescaled to the wake exponent of x, i.e. times exp(r(1-cos)) exp(-r(1-cos))."""
    xa = _xy(x)
    x0a = _xy(x0)
    g = grad_g(xa - x0a)
    target = -wake_exponent_xy(xa[..., 0], xa[..., 1])
    return WakeScaled(g.rescaled(target), target)
