r"""Decay exponents, the modulated amplitude equation and its fixed point.

The vorticity is written ``omega = m a`` with the modulation

    log m = (A (1 - cos t) + B sin t) log r - r (1 - cos t),

which turns the vorticity equation linearised around ``u_h + ubar`` into

    Delta a - 2 d_r a - a / r = v . grad a + phi a + R.

Its fundamental solution ``W = e^{r - r0} K0(|x - x0|) / 2pi`` satisfies
``(Delta - 2 d_r - 1/r) W = -delta``, so the fixed point is

    a = -int W (R + phi a + v . grad a) - int_dOmega (a grad_0 W - W grad a + 2 a W e_r) . n

with ``n`` the outward normal of the fluid domain.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .fields import SourceTerm, _bump_rule, angular_weight
from .geometry import wake_exponent, wake_exponent_xy, polar_angle
from .quadrature import gauss_legendre, integrate_disk

INV_SQRT_8PI = K.INV_SQRT_8PI


class FitError(ValueError):
    pass


class NonContractionError(RuntimeError):
    def __init__(self, nu, ratio, iterate=None):
        super().__init__(f"fixed point map is not contracting: nu={nu}, observed ratio {ratio:.3f}")
        self.nu = nu
        self.ratio = ratio
        self.iterate = iterate


class ConvergenceError(RuntimeError):
    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


# ----------------------------------------------------------- exponents

@dataclass(frozen=True)
class DecayExponents:
    A: float = 0.0
    B: float = 0.0

    def power(self, theta):
        return self.A * (1.0 - np.cos(theta)) + self.B * np.sin(theta)

    def power_dtheta(self, theta):
        return self.A * np.sin(theta) + self.B * np.cos(theta)

    def power_dtheta2(self, theta):
        return self.A * np.cos(theta) - self.B * np.sin(theta)


def decay_exponents(F):
    """A = F1 / 8 pi, B = -F2 / 8 pi."""
    return DecayExponents(F[0] / (8.0 * np.pi), -F[1] / (8.0 * np.pi))


def log_modulation(r, theta, exps):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise K.SingularityError("modulation is singular at r = 0")
    return exps.power(theta) * np.log(r) - wake_exponent(r, theta)


def log_modulation_xy(y, exps):
    y = np.asarray(y, dtype=float)
    r = np.hypot(y[..., 0], y[..., 1])
    th = polar_angle(y[..., 0], y[..., 1])
    return exps.power(th) * np.log(r) - wake_exponent_xy(y[..., 0], y[..., 1])


def a_to_omega(a, r, theta, exps):
    """omega = m a, returned WakeScaled against exp(-r (1 - cos theta))."""
    w = wake_exponent(r, theta)
    return K.WakeScaled(np.asarray(a) * np.exp(exps.power(theta) * np.log(r)), -w)


def omega_to_a(omega, r, theta, exps):
    """Inverse of :func:`a_to_omega`; omega may be WakeScaled or a plain value."""
    if isinstance(omega, K.WakeScaled):
        mant = omega.rescaled(-wake_exponent(r, theta))
    else:
        mant = np.asarray(omega) * np.exp(wake_exponent(r, theta))
    return mant * np.exp(-exps.power(theta) * np.log(r))


# -------------------------------------------------------- perturbation

PROFILES = {
    "envelope": lambda t: (np.ones_like(t), np.ones_like(t)),
    "cosine": lambda t: (0.5 * (1.0 + np.cos(t)), 0.5 * (1.0 + np.cos(t))),
}


@dataclass(frozen=True)
class PerturbationModel:
    """ubar realising the hypothesis envelopes times a fixed angular factor in [0, 1]."""

    nu: float = 0.0
    epsilon: float = 0.25
    profile: str = "envelope"

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be nonnegative")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown perturbation profile {self.profile!r}")

    def envelopes(self, r, theta):
        half = np.exp(-0.5 * wake_exponent(r, theta))
        tail = r ** (-1.0 - self.epsilon)
        return (self.nu * (half / np.sqrt(r) + tail), self.nu * (half / r + tail))

    def ubar(self, r, theta):
        """Polar components (ubar . e_r, ubar . e_theta)."""
        er, et = self.envelopes(r, theta)
        fr, ft = PROFILES[self.profile](np.asarray(theta, dtype=float))
        return er * fr, et * ft


# ------------------------------------------------------ coefficients

@dataclass(frozen=True)
class TransformedCoefficients:
    exps: DecayExponents
    pert: PerturbationModel
    source: SourceTerm = field(default_factory=SourceTerm)

    def _h(self, r, theta):
        lr = np.log(r)
        return self.exps.power(theta) / r, self.exps.power_dtheta(theta) * lr / r

    def u_h(self, r, theta):
        return 2.0 * self.exps.A / r, 2.0 * self.exps.B / r

    def v(self, r, theta):
        """Polar components of v = u_h - 2 h + ubar."""
        hr, ht = self._h(r, theta)
        uhr, uht = self.u_h(r, theta)
        br, bt = self.pert.ubar(r, theta)
        return uhr - 2.0 * hr + br, uht - 2.0 * ht + bt

    def phi(self, r, theta):
        hr, ht = self._h(r, theta)
        uhr, uht = self.u_h(r, theta)
        br, bt = self.pert.ubar(r, theta)
        lr = np.log(r)
        # grad log m = (e1 - e_r) + h
        gr = np.cos(theta) - 1.0 + hr
        gt = -np.sin(theta) + ht
        return (-self.exps.power_dtheta2(theta) * lr / r ** 2
                - (hr * hr + ht * ht)
                + uhr * hr + uht * ht
                + br * gr + bt * gt)

    def R(self, y):
        """m^{-1} curl f at Cartesian points y."""
        return np.exp(-log_modulation_xy(y, self.exps)) * self.source.curl(y)


def transformed_coefficients(exps, pert, source=None):
    return TransformedCoefficients(exps, pert, source if source is not None else SourceTerm())


# --------------------------------------------------------------- grid

@dataclass(frozen=True)
class PolarGrid:
    """Nodes at s = log r cell centres on [log R0, log R_max] times a uniform periodic theta grid."""

    R0: float = 1.0
    R_max: float = 80.0
    n_r: int = 128
    n_theta: int = 64

    def __post_init__(self):
        if not (0 < self.R0 < self.R_max):
            raise ValueError("grid needs 0 < R0 < R_max")
        if self.n_r < 8 or self.n_theta < 8:
            raise ValueError("grid too coarse")

    @property
    def h_s(self):
        return np.log(self.R_max / self.R0) / self.n_r

    @property
    def h_theta(self):
        return 2.0 * np.pi / self.n_theta

    @property
    def s(self):
        return np.log(self.R0) + (np.arange(self.n_r) + 0.5) * self.h_s

    @property
    def r(self):
        return np.exp(self.s)

    @property
    def theta(self):
        return -np.pi + (np.arange(self.n_theta) + 1) * self.h_theta

    def mesh(self):
        return np.meshgrid(self.r, self.theta, indexing="ij")

    def points(self):
        R, T = self.mesh()
        return np.stack([R * np.cos(T), R * np.sin(T)], -1)

    def theta_index(self, theta):
        k = np.rint((np.asarray(theta) + np.pi) / self.h_theta).astype(int) - 1
        return np.mod(k, self.n_theta)


def d_theta(values):
    """Spectral derivative along the last (periodic) axis."""
    n = values.shape[-1]
    k = np.fft.rfftfreq(n, 1.0 / n)
    vh = np.fft.rfft(values, axis=-1)
    if n % 2 == 0:
        k = k.copy()
        k[-1] = 0.0
    return np.fft.irfft(1j * k * vh, n=n, axis=-1)


_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_FORWARD = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_D1_SKEW = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def d_s(values, h):
    """Fourth order derivative along axis 0 of a uniformly spaced array."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[2:-2] = sum(c * v[i:len(v) - 4 + i] for i, c in enumerate(_D1_CENTRAL))
    out[0] = np.tensordot(_D1_FORWARD, v[:5], axes=1)
    out[1] = np.tensordot(_D1_SKEW, v[:5], axes=1)
    out[-1] = -np.tensordot(_D1_FORWARD, v[-5:][::-1], axes=1)
    out[-2] = -np.tensordot(_D1_SKEW, v[-5:][::-1], axes=1)
    return out / h


@dataclass
class AmplitudeField:
    grid: PolarGrid
    values: np.ndarray            # (n_r, n_theta)
    dr: np.ndarray = None         # d_r a
    dtheta_over_r: np.ndarray = None  # r^{-1} d_theta a

    def __post_init__(self):
        if self.dr is None or self.dtheta_over_r is None:
            self.dr, self.dtheta_over_r = grid_gradient(self.grid, self.values)

    def bounds(self, epsilon, r_min=None):
        """Far-zone constants of |a| r^{1/2}, |d_r a| r^{1+eps}, |r^{-1} d_theta a| r."""
        r = self.grid.r
        sel = r >= (r_min if r_min is not None else 2.0 * self.grid.R0)
        rr = r[sel, None]
        return {
            "a_sqrt_r": float(np.max(np.abs(self.values[sel]) * np.sqrt(rr))),
            "dr_a_r1eps": float(np.max(np.abs(self.dr[sel]) * rr ** (1.0 + epsilon))),
            "dtheta_a": float(np.max(np.abs(self.dtheta_over_r[sel]) * rr)),
        }

    def rows(self):
        """(r, theta, a, da_dr, da_dtheta) rows, theta-major."""
        R, T = self.grid.mesh()
        cols = [R, T, self.values, self.dr, self.dtheta_over_r * R]
        return np.stack([c.T.ravel() for c in cols], -1)


def grid_gradient(grid, values):
    dr = d_s(values, grid.h_s) / grid.r[:, None]
    dt = d_theta(values) / grid.r[:, None]
    return dr, dt


# ------------------------------------------------- boundary amplitude data

@dataclass(frozen=True)
class BoundaryAmplitude:
    """a and d_r a on the circle r = radius at theta_k = 2 pi k / n."""

    radius: float
    a: np.ndarray
    dr: np.ndarray

    @property
    def n(self):
        return len(self.a)

    @classmethod
    def zero(cls, radius, n=256):
        return cls(radius, np.zeros(n), np.zeros(n))

    @property
    def is_zero(self):
        return not (np.any(self.a) or np.any(self.dr))

    def upsampled(self, n):
        if n == self.n:
            return self
        def up(v):
            return np.fft.irfft(np.fft.rfft(v), n=n) * (n / self.n)
        return BoundaryAmplitude(self.radius, up(self.a), up(self.dr))


def boundary_from_manufactured(body, exps, n=256):
    """Cauchy data of a = omega / m for omega = grad G(. - x_c) . F0_perp on the body circle."""
    x_c, F0 = body.manufactured
    th = 2.0 * np.pi * np.arange(n) / n
    er = np.stack([np.cos(th), np.sin(th)], -1)
    y = body.radius * er
    z = y - np.asarray(x_c)
    fp = K.perp(np.asarray(F0, dtype=float))
    g = K.grad_g(z)
    hg = K.hess_g(z)
    omega = g.value @ fp
    domega = np.einsum("qi,qij,j->q", er, hg.value, fp)
    r = body.radius
    lm = log_modulation(r, th, exps)
    dlm = exps.power(th) / r - (1.0 - np.cos(th))
    a = omega * np.exp(-lm)
    da = (domega - omega * dlm) * np.exp(-lm)
    return BoundaryAmplitude(r, a, da)


# --------------------------------------------------- Green operator on the grid

def _duffy_rule(q):
    u, wu = gauss_legendre(q)
    U, V = np.meshgrid(u, u, indexing="ij")
    Wt = np.outer(wu, wu)
    return U.ravel(), V.ravel(), Wt.ravel()


class GreenOperator:
    """Product-integration weights of W against bilinear (s, theta) hats.

    ``apply(S)`` returns int W(x_node, x0) S(x0) dx0 over R0 <= r0 <= R_max
    for every grid node.  By rotation invariance only targets on theta = 0 are
    integrated; other angles follow by a periodic correlation.
    """

    def __init__(self, grid, q=6, q_near=6, q_duffy=10, near=2, sub_size=0.5):
        self.grid = grid
        self.q = q
        self.q_near = q_near
        self.q_duffy = q_duffy
        self.near = near
        self.sub_size = sub_size
        self.weights = self._build()
        self._wf = np.conj(np.fft.rfft(self.weights, axis=-1))

    # radial pieces: interior linear pieces between nodes plus constant half cells
    def _radial_pieces(self):
        g = self.grid
        s = g.s
        lo = np.log(g.R0)
        hi = np.log(g.R_max)
        sa = np.concatenate([[lo], s[:-1], [s[-1]]])
        sb = np.concatenate([[s[0]], s[1:], [hi]])
        jl = np.concatenate([[0], np.arange(g.n_r - 1), [g.n_r - 1]])
        ju = np.concatenate([[0], np.arange(1, g.n_r), [g.n_r - 1]])
        linear = np.concatenate([[False], np.ones(g.n_r - 1, bool), [False]])
        return sa, sb, jl, ju, linear

    def _build(self):
        g = self.grid
        W = np.zeros((g.n_r, g.n_r, g.n_theta))
        sa, sb, jl, ju, linear = self._radial_pieces()
        for i in range(g.n_r):
            W[i] = self._target_weights(i, sa, sb, jl, ju, linear)
        return W

    def _target_weights(self, i, sa, sb, jl, ju, linear):
        g = self.grid
        n = g.n_theta
        ht = g.h_theta
        P = len(sa)
        si = g.s[i]
        ri = g.r[i]
        # pieces touching node i: the piece ending at it and the one starting at it
        near_p = np.arange(max(0, i + 1 - self.near), min(P, i + 1 + self.near))
        near_m = np.concatenate([np.arange(n - self.near, n), np.arange(0, self.near)])
        is_near = np.zeros((P, n), bool)
        is_near[np.ix_(near_p, near_m)] = True

        batches = []
        # far cells: plain q x q Gauss
        x, wx = gauss_legendre(self.q)
        pp, mm = np.nonzero(~is_near)
        S = sa[pp, None] + (sb - sa)[pp, None] * x
        T = (mm * ht)[:, None] + ht * x
        Wt = ((sb - sa)[pp, None] * wx)[:, :, None] * (ht * wx)[None, None, :]
        batches.append((pp, mm, np.broadcast_to(S[:, :, None], Wt.shape),
                        np.broadcast_to(T[:, None, :], Wt.shape), Wt))
        # near cells: subdivided, Duffy on the sub-cell touching the target
        for p in near_p:
            for m in near_m:
                batches.append(self._near_cell(p, m, sa[p], sb[p], ht, si, ri))
        acc = np.zeros((g.n_r, n))
        for pp, mm, S, T, Wt in batches:
            pp = np.broadcast_to(np.reshape(pp, (-1,) + (1,) * (S.ndim - 1)), S.shape).ravel()
            mm = np.broadcast_to(np.reshape(mm, (-1,) + (1,) * (S.ndim - 1)), S.shape).ravel()
            S = S.ravel()
            T = T.ravel()
            Wt = Wt.ravel()
            r0 = np.exp(S)
            y = np.stack([r0 * np.cos(T), r0 * np.sin(T)], -1)
            w = K.kernel_w(np.array([ri, 0.0]), y)
            f = w.value * r0 * r0 * Wt
            lam = np.where(linear[pp], (S - sa[pp]) / (sb[pp] - sa[pp]), 0.0)
            mu = (T - mm * ht) / ht
            m1 = np.mod(mm + 1, n)
            for jj, kk, c in ((jl[pp], mm, (1 - lam) * (1 - mu)), (jl[pp], m1, (1 - lam) * mu),
                              (ju[pp], mm, lam * (1 - mu)), (ju[pp], m1, lam * mu)):
                acc += np.bincount(jj * n + kk, weights=f * c, minlength=g.n_r * n).reshape(g.n_r, n)
        return acc

    def _near_cell(self, p, m, sa, sb, ht, si, ri):
        ta, tb = m * ht, (m + 1) * ht
        # angles of cells just below theta = 0 are shifted to straddle the target
        if m >= self.grid.n_theta // 2:
            ta, tb = ta - 2 * np.pi, tb - 2 * np.pi
        k_s = int(np.clip(np.ceil(ri * (sb - sa) / self.sub_size), 1, 16))
        k_t = int(np.clip(np.ceil(ri * ht / self.sub_size), 1, 16))
        se = np.linspace(sa, sb, k_s + 1)
        te = np.linspace(ta, tb, k_t + 1)
        x, wx = gauss_legendre(self.q_near)
        Ss, Ts, Ws = [], [], []
        U, V, Wd = _duffy_rule(self.q_duffy)
        for a in range(k_s):
            for b in range(k_t):
                s0, s1, t0, t1 = se[a], se[a + 1], te[b], te[b + 1]
                corner_s = np.isclose(s0, si, rtol=0, atol=1e-13) or np.isclose(s1, si, rtol=0, atol=1e-13)
                corner_t = np.isclose(t0, 0.0, atol=1e-13) or np.isclose(t1, 0.0, atol=1e-13)
                if corner_s and corner_t:
                    # corner at (si, 0); map so the singular corner is at local (0, 0)
                    cs = s0 if np.isclose(s0, si, atol=1e-13) else s1
                    ct = t0 if np.isclose(t0, 0.0, atol=1e-13) else t1
                    ds = (s1 - s0) * (1 if cs == s0 else -1)
                    dt = (t1 - t0) * (1 if ct == t0 else -1)
                    area = abs(ds * dt)
                    for X, Y in ((U, U * V), (U * V, U)):
                        Ss.append(cs + ds * X)
                        Ts.append(ct + dt * Y)
                        Ws.append(area * U * Wd)
                else:
                    S = s0 + (s1 - s0) * x
                    T = t0 + (t1 - t0) * x
                    Ss.append(np.repeat(S, len(x)))
                    Ts.append(np.tile(T, len(x)))
                    Ws.append(np.outer((s1 - s0) * wx, (t1 - t0) * wx).ravel())
        S = np.concatenate(Ss)
        T = np.concatenate(Ts)
        Wt = np.concatenate(Ws)
        # hats use the unshifted cell origin m * ht
        T = np.where(T < 0, T + 2 * np.pi, T)
        return np.array([p]), np.array([m]), S[None], T[None], Wt[None]

    def apply(self, S):
        """int W S over the grid domain for every node; S has shape (n_r, n_theta)."""
        Sf = np.fft.rfft(S, axis=-1)
        out = np.einsum("ijp,jp->ip", self._wf, Sf)
        return np.fft.irfft(out, n=self.grid.n_theta, axis=-1)


_OPERATOR_CACHE = {}


def green_operator(grid):
    """Cached :class:`GreenOperator` for a grid (the weights depend on the grid only)."""
    op = _OPERATOR_CACHE.get(grid)
    if op is None:
        op = _OPERATOR_CACHE[grid] = GreenOperator(grid)
    return op


# --------------------------------------------------------- a1, a3 and mu's

def _source_amplitude_integral(points, coeffs, tol=1e-10, chunk=512):
    """int W(x, y) R(y) dy for an array of points (..., 2)."""
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2)
    out = np.zeros(len(flat))
    for b in coeffs.source.bumps:
        c = np.asarray(b.center, dtype=float)
        d = np.hypot(*(flat - c).T)
        near = d < 1.5 * b.radius
        y, w = _bump_rule(b, n_s=32, n_phi=96)
        Ry = coeffs.R(y) * w
        far_idx = np.nonzero(~near)[0]
        for s in range(0, len(far_idx), chunk):
            idx = far_idx[s:s + chunk]
            kw = K.kernel_w(flat[idx, None, :], y[None])
            out[idx] += np.einsum("pq,q->p", kw.value, Ry)
        for i in np.nonzero(near)[0]:
            est, _ = integrate_disk(
                lambda xb, yy: K.kernel_w(xb, yy).value * coeffs.R(yy),
                flat[i], c, b.radius, tol=tol)
            out[i] += float(np.squeeze(est))
    return out.reshape(pts.shape[:-1])


def amplitude_a1(points, coeffs, tol=1e-10):
    """a1 = -int W R at arbitrary points."""
    return -_source_amplitude_integral(points, coeffs, tol)


def amplitude_a3(points, boundary, n_quad=2048):
    """a3 = int_{r0=R0} (a d_r0 W - W d_r0 a + 2 a W) R0 dtheta0 at arbitrary points."""
    pts = np.asarray(points, dtype=float)
    if boundary is None or boundary.is_zero:
        return np.zeros(pts.shape[:-1])
    bd = boundary.upsampled(max(n_quad, boundary.n))
    th = 2.0 * np.pi * np.arange(bd.n) / bd.n
    y = bd.radius * np.stack([np.cos(th), np.sin(th)], -1)
    ds = 2.0 * np.pi * bd.radius / bd.n
    flat = pts.reshape(-1, 2)
    out = np.empty(len(flat))
    for s in range(0, len(flat), 256):
        xb = flat[s:s + 256, None, :]
        w = K.kernel_w(xb, y[None]).value
        dw = K.dr0_w(xb, y[None]).value
        out[s:s + 256] = ds * (dw @ bd.a - w @ bd.dr + 2.0 * (w @ bd.a))
    return out.reshape(pts.shape[:-1])


def picard_components(coeffs, grid, boundary=None, tol=1e-10):
    """(a1, a3) as AmplitudeFields on the grid."""
    pts = grid.points()
    a1 = AmplitudeField(grid, amplitude_a1(pts, coeffs, tol))
    a3 = AmplitudeField(grid, amplitude_a3(pts, boundary))
    return a1, a3


def mu1(theta, coeffs):
    """-(1/sqrt(8 pi)) int e^{-r0(1 - cos(theta - theta0))} R."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    u = np.stack([np.cos(th), np.sin(th)], -1)
    out = np.zeros(len(th))
    for b in coeffs.source.bumps:
        y, w = _bump_rule(b, n_s=32, n_phi=96)
        expo = (u @ y.T) - np.hypot(y[:, 0], y[:, 1]) - log_modulation_xy(y, coeffs.exps)
        out += np.exp(expo) @ (w * coeffs.source.curl(y))
    out *= -INV_SQRT_8PI
    return out[0] if np.ndim(theta) == 0 else out


def mu3(theta, boundary):
    """Boundary contribution to mu from the Cauchy data of a on r = R0."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if boundary is None or boundary.is_zero:
        out = np.zeros(len(th))
    else:
        R0 = boundary.radius
        t0 = 2.0 * np.pi * np.arange(boundary.n) / boundary.n
        c = np.cos(th[:, None] - t0[None])
        weight = np.exp(-R0 * (1.0 - c))
        integrand = boundary.a * (1.0 - c) + boundary.dr - 2.0 * boundary.a
        out = -INV_SQRT_8PI * (2.0 * np.pi * R0 / boundary.n) * np.sum(weight * integrand, -1)
    return out[0] if np.ndim(theta) == 0 else out


def feedback_source(field, coeffs):
    """S = phi a + v . grad a on the grid of ``field``."""
    R, T = field.grid.mesh()
    vr, vt = coeffs.v(R, T)
    return coeffs.phi(R, T) * field.values + vr * field.dr + vt * field.dtheta_over_r


def mu2(theta, field, coeffs, upsample=4):
    """-(1/sqrt(8 pi)) int e^{-r0(1 - cos(theta - theta0))} (phi a + v . grad a) over the grid."""
    g = field.grid
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    S = feedback_source(field, coeffs)
    n = g.n_theta * upsample
    Sf = np.fft.irfft(np.fft.rfft(S, axis=-1), n=n, axis=-1) * upsample
    t0 = g.theta[0] + 2.0 * np.pi * np.arange(n) / n
    r = g.r
    wr = g.h_s * r * r
    wt = 2.0 * np.pi / n
    out = np.empty(len(th))
    for k, t in enumerate(th):
        weight = np.exp(-np.outer(r, 1.0 - np.cos(t - t0)))
        out[k] = -INV_SQRT_8PI * wt * np.sum(wr[:, None] * weight * Sf)
    return out[0] if np.ndim(theta) == 0 else out


# ------------------------------------------------------------- fixed point

@dataclass
class PicardResult:
    field: AmplitudeField
    a1: AmplitudeField
    a3: AmplitudeField
    coeffs: TransformedCoefficients
    differences: list
    ratios: list
    converged: bool = True

    @property
    def iterations(self):
        return len(self.differences)

    @property
    def monotone(self):
        return all(k < 1.0 for k in self.ratios)

    def log(self):
        return [{"iteration": i + 1, "sup_difference": d,
                 "ratio": (self.ratios[i - 1] if i > 0 else None)}
                for i, d in enumerate(self.differences)]


def picard_solve(coeffs, grid, boundary=None, max_iter=50, tol=1e-8, quad_tol=1e-10):
    """Iterate a -> a1 + a3 - int W (phi a + v . grad a) until the sup difference is below tol."""
    op = green_operator(grid)
    a1, a3 = picard_components(coeffs, grid, boundary, quad_tol)
    base = a1.values + a3.values
    a = np.zeros_like(base)
    diffs, ratios = [], []
    growing = 0
    for it in range(max_iter):
        cur = AmplitudeField(grid, a)
        new = base - op.apply(feedback_source(cur, coeffs))
        d = float(np.max(np.abs(new - a)))
        if not np.isfinite(d):
            raise NonContractionError(coeffs.pert.nu, np.inf, cur)
        if diffs:
            ratio = d / diffs[-1] if diffs[-1] > 0 else 0.0
            ratios.append(ratio)
            growing = growing + 1 if ratio >= 1.0 else 0
        diffs.append(d)
        a = new
        if d < tol:
            return PicardResult(AmplitudeField(grid, a), a1, a3, coeffs, diffs, ratios)
        if growing >= 3:
            raise NonContractionError(coeffs.pert.nu, ratios[-1], AmplitudeField(grid, a))
    raise ConvergenceError(f"no convergence in {max_iter} iterations (last difference {diffs[-1]:.3e})",
                           PicardResult(AmplitudeField(grid, a), a1, a3, coeffs, diffs, ratios, False))


# -------------------------------------------------------------- asymptotes

def classical_asymptote(x, F):
    """grad G(x) . F_perp."""
    g = K.grad_g(x)
    return K.WakeScaled(g.mantissa @ K.perp(np.asarray(F, dtype=float)), g.log_scale)


def improved_asymptote(x, F_of_theta):
    """grad G(x) . F(theta)_perp, with F(theta) a callable or a constant vector."""
    xy = K._xy(x)
    th = polar_angle(xy[..., 0], xy[..., 1])
    F = F_of_theta(th) if callable(F_of_theta) else np.broadcast_to(F_of_theta, xy.shape)
    g = K.grad_g(xy)
    return K.WakeScaled(np.sum(g.mantissa * K.perp(np.asarray(F, dtype=float)), -1), g.log_scale)


def modified_asymptote(x, exps, mu):
    """r^{A(1-cos t)+B sin t} mu(t) r^{-1/2} e^{-r(1-cos t)}."""
    xy = K._xy(x)
    r = np.hypot(xy[..., 0], xy[..., 1])
    th = polar_angle(xy[..., 0], xy[..., 1])
    m = mu(th) if callable(mu) else mu
    return K.WakeScaled(m * r ** (exps.power(th) - 0.5), -wake_exponent(r, th))


# ------------------------------------------------------------------- fit

@dataclass(frozen=True)
class MuFit:
    theta: np.ndarray
    mu: np.ndarray
    stability: np.ndarray
    window: tuple


def _fit_window(field, lo, hi, exponent):
    r = field.grid.r
    sel = (r >= lo) & (r <= hi)
    if sel.sum() < 3:
        raise FitError(f"fit window [{lo}, {hi}] holds fewer than 3 radial nodes")
    rr = r[sel]
    M = np.stack([np.ones_like(rr), rr ** (-exponent)], -1)
    if np.linalg.cond(M) > 1e10:
        raise FitError("ill-conditioned fit: window too narrow for the r^{-eps} correction")
    y = field.values[sel] * np.sqrt(rr)[:, None]
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    return coef[0]


def fit_mu(field, r_window, exponent=1.0, shift=0.25):
    """Fit a r^{1/2} = c0 + c1 r^{-exponent} per angle; mu = c0.

    The stability is the largest change of mu when the window is moved by the
    factor ``1 + shift`` up or down (whichever moves stay inside the grid).
    The default exponent 1 matches the O(1/r) correction of the kernel
    expansion, which dominates the far field of the amplitude.
    """
    lo, hi = r_window
    if not (field.grid.r[0] <= lo < hi <= field.grid.r[-1] * (1 + 1e-12)):
        raise FitError("fit window must lie inside the grid")
    mu = _fit_window(field, lo, hi, exponent)
    changes = []
    for fac in (1.0 + shift, 1.0 / (1.0 + shift)):
        a, b = lo * fac, hi * fac
        if a >= field.grid.r[0] and b <= field.grid.r[-1] * (1 + 1e-12):
            changes.append(np.abs(_fit_window(field, a, b, exponent) - mu))
    if not changes:
        raise FitError("no shifted window fits inside the grid")
    return MuFit(field.grid.theta.copy(), mu, np.max(changes, 0), (lo, hi))


def log_slope(field, exps, theta, r_window):
    """Radial log-slope of the modulated vorticity r^L a along the ray nearest theta."""
    k = int(field.grid.theta_index(theta))
    r = field.grid.r
    sel = (r >= r_window[0]) & (r <= r_window[1])
    t = field.grid.theta[k]
    vals = np.abs(field.values[sel, k]) * r[sel] ** exps.power(t)
    if np.any(vals <= 0):
        raise FitError("modulated vorticity vanishes inside the window")
    return float(np.polyfit(np.log(r[sel]), np.log(vals), 1)[0])


# --------------------------------------------------- transform certification

def _fd_derivatives(fun, pts, h):
    """Fourth order central differences: (f, grad f, laplacian f) at Cartesian points."""
    e = [np.array([h, 0.0]), np.array([0.0, h])]
    f0 = fun(pts)
    grad = []
    lap = 0.0
    for d in e:
        fp1, fm1 = fun(pts + d), fun(pts - d)
        fp2, fm2 = fun(pts + 2 * d), fun(pts - 2 * d)
        grad.append((8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * h))
        lap = lap + (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    return f0, np.stack(grad, -1), lap


def _polar_to_cart(r_comp, t_comp, theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([r_comp * c - t_comp * s, r_comp * s + t_comp * c], -1)


def transform_residual(coeffs, omega, pts, h=1e-3):
    """Relative mismatch between the vorticity operator on omega and m times the amplitude operator on omega / m.

    The vorticity operator is Delta - 2 d_1 - (u_h + ubar) . grad; the amplitude
    operator is Delta - 2 d_r - 1/r - v . grad - phi.
    """
    pts = np.asarray(pts, dtype=float)
    exps = coeffs.exps
    r = np.hypot(pts[:, 0], pts[:, 1])
    th = polar_angle(pts[:, 0], pts[:, 1])
    er = np.stack([np.cos(th), np.sin(th)], -1)

    w, gw, lw = _fd_derivatives(omega, pts, h)
    uhr, uht = coeffs.u_h(r, th)
    br, bt = coeffs.pert.ubar(r, th)
    adv = _polar_to_cart(uhr + br, uht + bt, th)
    lhs = lw - 2.0 * gw[:, 0] - np.sum(adv * gw, -1)

    def amp(y):
        return omega(y) * np.exp(-log_modulation_xy(y, exps))

    a, ga, la = _fd_derivatives(amp, pts, h)
    vr, vt = coeffs.v(r, th)
    v = _polar_to_cart(vr, vt, th)
    new = la - 2.0 * np.sum(er * ga, -1) - a / r - np.sum(v * ga, -1) - coeffs.phi(r, th) * a
    rhs = np.exp(log_modulation_xy(pts, exps)) * new
    scale = np.max(np.abs(lw)) + np.max(np.abs(gw)) + 1e-300
    return float(np.max(np.abs(lhs - rhs)) / scale)


def random_test_function(rng, center_radius=(2.0, 8.0), width=(0.8, 2.5)):
    """A random smooth, rapidly decaying test vorticity: Gaussian times a quadratic."""
    rad = rng.uniform(*center_radius)
    ang = rng.uniform(-np.pi, np.pi)
    c = rad * np.array([np.cos(ang), np.sin(ang)])
    s = rng.uniform(*width)
    p = rng.normal(size=6)

    def omega(y):
        z = (y - c) / s
        poly = p[0] + p[1] * z[..., 0] + p[2] * z[..., 1] + p[3] * z[..., 0] ** 2 \
            + p[4] * z[..., 0] * z[..., 1] + p[5] * z[..., 1] ** 2
        return poly * np.exp(-np.sum(z * z, -1))

    return omega, c, s


def coefficient_bounds(coeffs, grid):
    """Envelope constants of v and phi on the grid.

    The ubar part is measured against nu r^{-1/2}, nu r^{-1} log r and nu r^{-1-eps};
    the part coming from u_h and the modulation against r^{-1}, r^{-1} log r and r^{-2} log^2 r.
    """
    R, T = grid.mesh()
    lg = np.maximum(np.log(R), 1.0)
    zero = TransformedCoefficients(coeffs.exps, PerturbationModel(0.0, coeffs.pert.epsilon, coeffs.pert.profile))
    vr, vt = coeffs.v(R, T)
    vr0, vt0 = zero.v(R, T)
    ph, ph0 = coeffs.phi(R, T), zero.phi(R, T)
    nu = coeffs.pert.nu
    out = {
        "v_r_exponent_part": float(np.max(np.abs(vr0) * R)),
        "v_theta_exponent_part": float(np.max(np.abs(vt0) * R / lg)),
        "phi_exponent_part": float(np.max(np.abs(ph0) * R ** 2 / lg ** 2)),
    }
    if nu > 0:
        out.update({
            "v_r_perturbation": float(np.max(np.abs(vr - vr0) * np.sqrt(R)) / nu),
            "v_theta_perturbation": float(np.max(np.abs(vt - vt0) * R / lg) / nu),
            "phi_perturbation": float(np.max(np.abs(ph - ph0) * R ** (1.0 + coeffs.pert.epsilon)) / nu),
        })
    return out
