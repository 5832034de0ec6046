"""Problem instances and the linear (Oseen) representation formulas.

A :class:`Scene` holds a compactly supported force made of polynomial bumps
and optionally a disk body with boundary traces of (u, p, grad u).  Velocity
and vorticity are evaluated by convolution with the fundamental solution
plus the boundary layer terms of the Green identity.  Boundary integrals use
the periodic trapezoid rule on the trace grid.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .geometry import wake_exponent_xy
from .quadrature import integrate_disk, integrate_disk_subdivided


class ConfigurationError(ValueError):
    """A scene is inconsistent (missing traces, point inside the body, ...)."""


class DomainError(ValueError):
    """Evaluation point outside the fluid domain."""


# ------------------------------------------------------------------ sources

@dataclass(frozen=True)
class SourceBump:
    """f(y) = c (1 - |y - center|^2 / rho^2)^4 inside the disk, 0 outside."""

    center: tuple
    radius: float
    amplitude: tuple

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigurationError("bump radius must be positive")

    def _s2(self, y):
        y = np.asarray(y, dtype=float)
        d = y - np.asarray(self.center, dtype=float)
        return d, np.sum(d * d, -1) / self.radius ** 2

    def profile(self, y):
        _, s2 = self._s2(y)
        return np.where(s2 < 1.0, (1.0 - s2) ** 4, 0.0)

    def value(self, y):
        return self.profile(y)[..., None] * np.asarray(self.amplitude, dtype=float)

    def curl(self, y):
        d, s2 = self._s2(y)
        g = np.where(s2 < 1.0, -8.0 * (1.0 - s2) ** 3 / self.radius ** 2, 0.0)
        c1, c2 = self.amplitude
        # d1 f2 - d2 f1 with grad profile = g d
        return g * (c2 * d[..., 0] - c1 * d[..., 1])

    def integral(self):
        return np.pi * self.radius ** 2 / 5.0 * np.asarray(self.amplitude, dtype=float)


@dataclass(frozen=True)
class SourceTerm:
    bumps: tuple = ()

    def value(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        for b in self.bumps:
            out = out + b.value(y)
        return out

    def curl(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape[:-1])
        for b in self.bumps:
            out = out + b.curl(y)
        return out

    def integral(self):
        return sum((b.integral() for b in self.bumps), np.zeros(2))


def eval_source(f, x):
    return f.value(x)


def eval_curl_source(f, x):
    return f.curl(x)


# -------------------------------------------------------------------- body

@dataclass(frozen=True)
class BoundaryTraces:
    """Samples on a uniform angular grid theta_k = 2 pi k / n of the body circle."""

    u: np.ndarray        # (n, 2)
    p: np.ndarray        # (n,)
    grad_u: np.ndarray   # (n, 2, 2), grad_u[k, i, j] = d_j u_i

    @property
    def n(self):
        return len(self.p)

    @property
    def vorticity(self):
        return self.grad_u[:, 1, 0] - self.grad_u[:, 0, 1]


@dataclass(frozen=True)
class BodySpec:
    radius: float
    traces: BoundaryTraces = None
    # set by manufactured_traces so vorticity data can be regenerated exactly
    manufactured: tuple = None

    def nodes(self, n=None):
        n = n or self.traces.n
        th = 2.0 * np.pi * np.arange(n) / n
        er = np.stack([np.cos(th), np.sin(th)], -1)
        return th, self.radius * er, er

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 0], x[..., 1]) <= self.radius


@dataclass(frozen=True)
class Scene:
    source: SourceTerm = field(default_factory=SourceTerm)
    body: BodySpec = None

    def check(self):
        if self.body is not None and self.body.traces is None:
            raise ConfigurationError("body present but boundary traces are missing")


def manufactured_traces(x_c, F0, body, n_nodes=256):
    """Traces of the exact Oseen field u = E(. - x_c) F0, p = e(. - x_c) F0 on the body circle."""
    x_c = np.asarray(x_c, dtype=float)
    F0 = np.asarray(F0, dtype=float)
    if np.hypot(*x_c) >= body.radius:
        raise ConfigurationError("manufactured pole must lie strictly inside the body")
    n = n_nodes
    th = 2.0 * np.pi * np.arange(n) / n
    y = body.radius * np.stack([np.cos(th), np.sin(th)], -1)
    z = y - x_c
    u = K.oseen_tensor(z) @ F0
    p = K.pressure_vector(z) @ F0
    grad_u = np.einsum("nijk,j->nik", K.oseen_tensor_grad(z), F0)
    traces = BoundaryTraces(u=u, p=p, grad_u=grad_u)
    return BodySpec(radius=body.radius, traces=traces, manufactured=(tuple(x_c), tuple(F0)))


def _stress_flux(traces, normal):
    """(T(u, p) - 2 u (x) e1) . n at each trace node."""
    g = traces.grad_u
    T = g + np.swapaxes(g, -1, -2) - traces.p[:, None, None] * np.eye(2)
    return np.einsum("nij,nj->ni", T, normal) - 2.0 * traces.u * normal[:, [0]]


def no_flux_residual(body):
    th, y, er = body.nodes()
    return np.sum(np.einsum("ni,ni->n", body.traces.u, er)) * 2 * np.pi * body.radius / body.traces.n


# ------------------------------------------------------------- convolution

def _velocity_integrand(source):
    def f(x, y):
        return np.einsum("...ij,...j->...i", K.oseen_tensor(x - y), source.value(y))
    return f


def _vorticity_integrand(source):
    # grad G(x - y) . f_perp(y), rescaled to the wake exponent of x
    def f(x, y):
        g = K.grad_g(x - y)
        target = -wake_exponent_xy(x[..., 0], x[..., 1])
        return np.einsum("...i,...i->...", g.rescaled(target), K.perp(source.value(y)))
    return f


KERNELS = {"velocity": _velocity_integrand, "vorticity": _vorticity_integrand}


def convolve(kernel, f, x, tol=1e-10):
    """Volume integral of a kernel against the source for target(s) x.

    ``kernel`` is ``"velocity"`` (E f, a 2-vector) or ``"vorticity"``
    (grad G . f_perp, returned as the mantissa against exp(-r(1 - cos theta))
    of the target).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xs = np.atleast_2d(x)
    out = np.zeros((len(xs), 2)) if kernel == "velocity" else np.zeros(len(xs))
    for b in f.bumps:
        single_bump = SourceTerm((b,))
        val, _err = integrate_disk(KERNELS[kernel](single_bump), xs, b.center, b.radius, tol=tol)
        out = out + val
    return out[0] if single else out


def convolve_subdivided(kernel, f, x):
    """Independent check of :func:`convolve` for one target (quadtree rule)."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for b in f.bumps:
        total = total + integrate_disk_subdivided(
            KERNELS[kernel](SourceTerm((b,))), x, b.center, b.radius)
    return total


# ------------------------------------------------------ boundary integrals

def _boundary_setup(x, scene):
    body = scene.body
    if body.traces is None:
        raise ConfigurationError("body present but boundary traces are missing")
    th, y, er = body.nodes()
    ds = 2.0 * np.pi * body.radius / body.traces.n
    n_out = -er  # outward normal of the fluid domain points into the body
    z = x[:, None, :] - y[None, :, :]
    return body.traces, n_out, z, ds


def _check_exterior(x, scene):
    if scene.body is not None and np.any(scene.body.contains(x)):
        raise DomainError("evaluation point lies inside the body")


def oseen_velocity(x, scene, tol=1e-10):
    """u(x) = int E f - int_dOmega E (T - 2 u e1) n + int_dOmega u . T(E(x - .), -e(x - .)) n."""
    scene.check()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _check_exterior(x, scene)
    u = convolve("velocity", scene.source, x, tol) if scene.source.bumps else np.zeros((len(x), 2))
    if scene.body is not None:
        tr, n, z, ds = _boundary_setup(x, scene)
        b = _stress_flux(tr, n)
        E = K.oseen_tensor(z)
        dE = K.oseen_tensor_grad(z)  # [m, q, i, j, k] = d_k E_ij
        e = K.pressure_vector(z)
        single = np.einsum("mqkj,qj->mk", E, b)
        un = np.einsum("qi,qi->q", tr.u, n)
        # u . T(v, q) n with v = E(x - .) e_k, q = -e_k(x - .), derivatives taken in y
        double = (-np.einsum("qi,qj,mqikj->mk", tr.u, n, dE)
                  - np.einsum("qi,qj,mqjki->mk", tr.u, n, dE)
                  + np.einsum("mqk,q->mk", e, un))
        u = u + ds * (-single + double)
    return u


def oseen_vorticity(x, scene, tol=1e-10):
    """Vorticity as a WakeScaled value against exp(-r(1 - cos theta)) of each target."""
    scene.check()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _check_exterior(x, scene)
    target = -wake_exponent_xy(x[:, 0], x[:, 1])
    w = convolve("vorticity", scene.source, x, tol) if scene.source.bumps else np.zeros(len(x))
    if scene.body is not None:
        tr, n, z, ds = _boundary_setup(x, scene)
        b = _stress_flux(tr, n)
        gg = K.grad_g(z).rescaled(target[:, None])
        hg = K.hess_g(z).rescaled(target[:, None])
        single = np.einsum("mqi,qi->m", gg, K.perp(b))
        double = (np.einsum("qi,mqij,qj->m", n, hg, K.perp(tr.u))
                  + np.einsum("qi,mqij,qj->m", tr.u, hg, K.perp(n)))
        w = w + ds * (-single - double)
    return K.WakeScaled(w, target)


# ------------------------------------------------------------------ forces

@dataclass(frozen=True)
class NetForce:
    F: np.ndarray
    provenance: str


def net_force(scene):
    """F = int f + int_dB (T(u, p) - 2 u (x) e1) . n, with n the outward normal of the body."""
    scene.check()
    F = scene.source.integral()
    if scene.body is None:
        return NetForce(F, "volume")
    th, y, er = scene.body.nodes()
    ds = 2.0 * np.pi * scene.body.radius / scene.body.traces.n
    F = F + ds * _stress_flux(scene.body.traces, er).sum(axis=0)
    return NetForce(F, "volume+boundary")


def angular_weight(theta, y):
    """exp(r0 (cos(theta - theta0) - cos theta0)) = exp(y . (cos theta, sin theta) - y1)."""
    y = np.asarray(y, dtype=float)
    return np.exp(y[..., 0] * (np.cos(theta) - 1.0) + y[..., 1] * np.sin(theta))


def _bump_rule(b, n_s=24, n_phi=48):
    # disk-centred polar Gauss rule: the polynomial profile is integrated exactly
    s, ws = np.polynomial.legendre.leggauss(n_s)
    s = 0.5 * b.radius * (s + 1.0)
    ws = 0.5 * b.radius * ws
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    y = np.asarray(b.center) + s[:, None, None] * np.stack([np.cos(phi), np.sin(phi)], -1)[None]
    w = (ws * s)[:, None] * np.full(n_phi, 2.0 * np.pi / n_phi)[None, :]
    return y.reshape(-1, 2), w.reshape(-1)


def net_force_angular(theta, scene):
    """F(theta): net force with every contribution weighted by the angular factor."""
    scene.check()
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.zeros((len(thetas), 2))
    for b in scene.source.bumps:
        y, w = _bump_rule(b)
        wt = angular_weight(thetas[:, None], y[None])
        out += np.einsum("tq,q,qi->ti", wt, w, b.value(y))
    if scene.body is not None:
        th, y, er = scene.body.nodes()
        ds = 2.0 * np.pi * scene.body.radius / scene.body.traces.n
        flux = _stress_flux(scene.body.traces, er)
        out += ds * np.einsum("tq,qi->ti", angular_weight(thetas[:, None], y[None]), flux)
    return out[0] if np.ndim(theta) == 0 else out
