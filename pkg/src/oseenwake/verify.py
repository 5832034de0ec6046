"""Numerical checks of the kernel identities, bounds and decay rates.

Every check returns :class:`VerificationReport` objects that carry the
evidence next to the pass flag.  Pass thresholds live in :data:`THRESHOLDS`.
"""

import json
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize, special, stats

from . import kernels as K
from .fields import net_force, net_force_angular, oseen_vorticity
from .geometry import polar_angle, polar_identity_residual, wake_exponent, wrap_angle
from .specfun import k0_scaled, k1_scaled, k1m0_scaled

THRESHOLDS = {
    "pde_residual": 1e-5,
    "polar_identity": 1e-10,
    "bound_ratio_cap": 1e3,
    "seed_stability": 0.01,
    "growth_slope": 0.1,
    # log-slope of I / majorant over the upper half of the radius grid; a missing
    # log factor would show up as about 1 / log r ~ 0.22 there
    "integral_growth_slope": 0.15,
    "integral_ratio_cap": 1e3,
    "angular_ratio_cap": 10.0,
    "remainder_slope": -1.5,
    "remainder_slope_tol": 0.15,
    "classical_slope_min": -0.7,
    "transform_residual": 1e-5,
}


@dataclass
class VerificationReport:
    check_id: str
    samples: int
    passed: bool
    worst_ratio: float = None
    max_residual: float = None
    extracted_constant: float = None
    fitted_slope: float = None
    stderr: float = None
    threshold: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)

    def to_dict(self):
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def check_rng(seed, check_id):
    """Independent, reproducible stream per (seed, check id)."""
    return np.random.default_rng([int(seed), zlib.crc32(check_id.encode())])


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------------ rates

@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float


def rate_fit(r, values):
    """Least-squares slope of log(values) against log(r)."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(r) < 5:
        raise ValueError("rate_fit needs at least 5 samples")
    if np.any(v <= 0) or np.any(r <= 0):
        raise ValueError("rate_fit needs positive radii and values")
    res = stats.linregress(np.log(r), np.log(v))
    return RateFit(float(res.slope), float(res.intercept), float(res.stderr))


# ---------------------------------------------------------- finite differences

def fd_derivatives(fun, x, h, order=4):
    """(f, grad, hessian) of a row-aligned function by central differences.

    ``fun`` maps points of shape (n, 2) to values of shape (n, ...); ``h`` is a
    per-row step.  Order 4 is Richardson extrapolation of the order 2 stencils.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)

    def second_order(step):
        f0 = fun(x)
        ex = (step * np.array([[1.0], [0.0]])).T
        ey = (step * np.array([[0.0], [1.0]])).T
        shp = (-1,) + (1,) * (f0.ndim - 1)
        s = step.reshape(shp)
        fpx, fmx, fpy, fmy = fun(x + ex), fun(x - ex), fun(x + ey), fun(x - ey)
        fpp, fpm = fun(x + ex + ey), fun(x + ex - ey)
        fmp, fmm = fun(x - ex + ey), fun(x - ex - ey)
        g = np.stack([(fpx - fmx) / (2 * s), (fpy - fmy) / (2 * s)], -1)
        hxx = (fpx - 2 * f0 + fmx) / s ** 2
        hyy = (fpy - 2 * f0 + fmy) / s ** 2
        hxy = (fpp - fpm - fmp + fmm) / (4 * s ** 2)
        hess = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
        return f0, g, hess

    f0, g1, h1 = second_order(h)
    if order == 2:
        return f0, g1, h1
    _, g2, h2 = second_order(2 * h)
    return f0, (4 * g1 - g2) / 3, (4 * h1 - h2) / 3


def _sample_points(rng, n, r_range):
    r = np.exp(rng.uniform(np.log(r_range[0]), np.log(r_range[1]), n))
    t = rng.uniform(-np.pi, np.pi, n)
    return np.stack([r * np.cos(t), r * np.sin(t)], -1)


def pde_residuals(points, A, step=1e-4, order=4):
    """Relative FD residuals per point of the four identities, as a dict of arrays."""
    x = np.asarray(points, dtype=float)
    r = np.hypot(x[:, 0], x[:, 1])
    h = step * np.maximum(1.0, r)
    wake = K.wake_exponent_xy(x[:, 0], x[:, 1])

    # G rescaled by the wake factor of the centre point: no underflow upstream
    def g_scaled(y):
        g = K.g_kernel(y)
        return g.mantissa * np.exp(g.log_scale + wake)

    g0, gg, gh = fd_derivatives(g_scaled, x, h, order)
    lap = gh[:, 0, 0] + gh[:, 1, 1]
    res_g = np.abs(lap - 2 * gg[:, 0]) / (np.abs(lap) + 2 * np.abs(gg[:, 0]) + np.abs(g0))

    def vel(y):
        return np.einsum("nij,nj->ni", K.oseen_tensor(y), A)

    def pres(y):
        return np.einsum("ni,ni->n", K.pressure_vector(y), A)

    u0, ug, uh = fd_derivatives(vel, x, h, order)
    _, pg, _ = fd_derivatives(pres, x, h, order)
    lap_u = uh[:, :, 0, 0] + uh[:, :, 1, 1]
    mom = lap_u - pg - 2 * ug[:, :, 0]
    mscale = np.abs(lap_u).max(1) + np.abs(pg).max(1) + 2 * np.abs(ug[:, :, 0]).max(1)
    res_mom = np.abs(mom).max(1) / mscale
    div = ug[:, 0, 0] + ug[:, 1, 1]
    res_div = np.abs(div) / np.abs(ug).reshape(len(x), -1).max(1)

    curl = ug[:, 1, 0] - ug[:, 0, 1]
    gradg = K.grad_g(x).value
    res_curl = np.abs(curl - np.sum(gradg * K.perp(A), -1)) / np.abs(ug).reshape(len(x), -1).max(1)
    return {"oseen_g": res_g, "momentum": res_mom, "divergence": res_div, "curl": res_curl}


def adjoint_residuals(x, x0, step=1e-4, order=4):
    """Relative FD residual of (Delta + 2 d_r0 + 1/r0) W(x, .) at x0."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    ls0 = K.kernel_w(x, x0).log_scale
    r0 = np.hypot(x0[:, 0], x0[:, 1])
    h = step * np.maximum(1.0, r0)

    def w_scaled(y):
        w = K.kernel_w(x, y)
        return w.mantissa * np.exp(w.log_scale - ls0)

    w0, wg, wh = fd_derivatives(w_scaled, x0, h, order)
    er = x0 / r0[:, None]
    lap = wh[:, 0, 0] + wh[:, 1, 1]
    dr = np.sum(er * wg, -1)
    return np.abs(lap + 2 * dr + w0 / r0) / (np.abs(lap) + 2 * np.abs(dr) + np.abs(w0 / r0))


def check_pde_residuals(n_points=1000, seed=0, r_range=(0.5, 20.0), step=1e-4, order=4):
    rng = check_rng(seed, "pde_residuals")
    x = _sample_points(rng, n_points, r_range)
    x = np.concatenate([x, [[-15.0, 0.0]]])
    A = rng.normal(size=(len(x), 2))
    res = pde_residuals(x, A, step, order)
    # adjoint identity: pairs kept at least 0.3 apart
    x0 = _sample_points(rng, 2 * n_points, r_range)
    xs = _sample_points(rng, 2 * n_points, r_range)
    keep = np.nonzero(np.hypot(*(xs - x0).T) > 0.3)[0][:n_points]
    res["adjoint_w"] = adjoint_residuals(xs[keep], x0[keep], step, order)
    tol = THRESHOLDS["pde_residual"]
    reports = []
    for name, vals in res.items():
        worst = float(np.max(vals))
        ev = {"order": order, "step": step, "r_range": list(r_range)}
        if name != "adjoint_w":
            ev["upstream_point_residual"] = float(vals[-1])
        reports.append(VerificationReport(f"pde_residuals.{name}", len(vals), bool(worst < tol),
                                          max_residual=worst, threshold={"max_residual": tol},
                                          evidence=ev))
    return reports


# ----------------------------------------------------------- kernel bounds

def kernel_bound_ratios(r, theta, r0, theta0):
    """The three ratios bounded by the W kernel estimates, for arrays of pairs."""
    x = np.stack([r * np.cos(theta), r * np.sin(theta)], -1)
    x0 = np.stack([r0 * np.cos(theta0), r0 * np.sin(theta0)], -1)
    r1 = np.hypot(*(x - x0).T)
    w = K.kernel_w(x, x0)
    dr, dth = K.grad_w(x, x0)
    half = np.exp(0.5 * w.log_scale)
    return (np.abs(w.mantissa) * np.sqrt(r1),
            np.abs(dr.mantissa) * r1 ** 1.5 * half,
            np.abs(dth.mantissa) * r1 ** 1.5 / np.sqrt(r0) * half)


_BOUND_BOX = np.array([[np.log(0.1), np.log(300.0)], [np.log(0.1), np.log(50.0)],
                       [-np.pi, np.pi], [-np.pi, np.pi]])


def _ratio_at(p, k, min_sep):
    q = np.clip(p, _BOUND_BOX[:, 0], _BOUND_BOX[:, 1])
    r, r0 = np.exp(q[0]), np.exp(q[1])
    x = r * np.array([np.cos(q[2]), np.sin(q[2])])
    x0 = r0 * np.array([np.cos(q[3]), np.sin(q[3])])
    if np.hypot(*(x - x0)) < min_sep:
        return 0.0
    return float(kernel_bound_ratios(np.array([r]), np.array([q[2]]), np.array([r0]), np.array([q[3]]))[k][0])


def kernel_bound_suprema(n_samples, seed, min_sep=1e-6, refine=5):
    rng = check_rng(seed, "kernel_bounds")
    r = np.exp(rng.uniform(*_BOUND_BOX[0], n_samples))
    r0 = np.exp(rng.uniform(*_BOUND_BOX[1], n_samples))
    t = rng.uniform(-np.pi, np.pi, n_samples)
    t0 = rng.uniform(-np.pi, np.pi, n_samples)
    x = np.stack([r * np.cos(t), r * np.sin(t)], -1)
    x0 = np.stack([r0 * np.cos(t0), r0 * np.sin(t0)], -1)
    keep = np.hypot(*(x - x0).T) >= min_sep
    r, r0, t, t0 = r[keep], r0[keep], t[keep], t0[keep]
    ratios = kernel_bound_ratios(r, t, r0, t0)
    sups = []
    for k, rat in enumerate(ratios):
        best = float(np.max(rat))
        # local refinement from the best samples makes the supremum seed independent
        for i in np.argsort(rat)[-refine:]:
            p0 = np.array([np.log(r[i]), np.log(r0[i]), t[i], t0[i]])
            res = optimize.minimize(lambda p: -_ratio_at(p, k, min_sep), p0, method="Nelder-Mead",
                                    options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000})
            best = max(best, -float(res.fun))
        sups.append(best)
    return sups, int(keep.sum())


def check_kernel_bounds(n_samples=100_000, seed=0, seeds_for_stability=(1,)):
    sups, n = kernel_bound_suprema(n_samples, seed)
    others = [kernel_bound_suprema(max(n_samples // 4, 1000), s)[0] for s in seeds_for_stability]
    names = ["w", "dr_w", "dtheta_w"]
    reports = []
    cap = THRESHOLDS["bound_ratio_cap"]
    stab = THRESHOLDS["seed_stability"]
    for k, name in enumerate(names):
        change = max(abs(o[k] - sups[k]) / sups[k] for o in others)
        ok = np.isfinite(sups[k]) and sups[k] < cap and change < stab
        reports.append(VerificationReport(
            f"kernel_bounds.{name}", n, bool(ok), worst_ratio=sups[k], extracted_constant=sups[k],
            threshold={"ratio_cap": cap, "seed_relative_change": stab},
            evidence={"other_seed_suprema": [o[k] for o in others], "relative_change": change}))
    # polar identity and triangle bound on the same kind of sample
    rng = check_rng(seed, "polar_identity")
    rr = np.exp(rng.uniform(*_BOUND_BOX[0], n_samples))
    rr0 = np.exp(rng.uniform(*_BOUND_BOX[1], n_samples))
    tt, tt0 = rng.uniform(-np.pi, np.pi, (2, n_samples))
    resid = np.abs(polar_identity_residual(rr, tt, rr0, tt0)) / (1.0 + rr)
    worst = float(np.max(resid))
    reports.append(VerificationReport("kernel_bounds.polar_identity", n_samples,
                                      bool(worst < THRESHOLDS["polar_identity"]), max_residual=worst,
                                      threshold={"max_residual": THRESHOLDS["polar_identity"]}))
    r1 = np.sqrt(rr ** 2 + rr0 ** 2 - 2 * rr * rr0 * np.cos(tt - tt0))
    slack = r1 + rr0 - rr - rr0 * (1 - np.cos(tt - tt0))
    low = r1 - np.abs(rr - rr0 * np.cos(tt - tt0))
    viol = float(min(np.min(slack), np.min(low)) / np.max(rr))
    reports.append(VerificationReport("kernel_bounds.triangle", n_samples, bool(viol > -1e-12),
                                      max_residual=-min(viol, 0.0),
                                      evidence={"min_scaled_slack": viol}))
    return reports


def check_bessel_bounds(n=10_000):
    x = np.geomspace(1.0, 700.0, n)
    vals = {"sqrt_x_k0": np.sqrt(x) * k0_scaled(x), "sqrt_x_k1": np.sqrt(x) * k1_scaled(x),
            "x32_k1m0": x ** 1.5 * k1m0_scaled(x)}
    return [VerificationReport(f"bessel_bounds.{k}", n, bool(np.all(np.isfinite(v)) and v.max() < 10),
                               extracted_constant=float(v.max()),
                               evidence={"min": float(v.min()), "max": float(v.max())})
            for k, v in vals.items()]


# ---------------------------------------------------------- integral lemma

def _panels(edges, q):
    x, w = np.polynomial.legendre.leggauss(q)
    a, b = np.asarray(edges[:-1]), np.asarray(edges[1:])
    nodes = (0.5 * (b - a)[:, None] * (x + 1) + a[:, None]).ravel()
    weights = (0.5 * (b - a)[:, None] * w).ravel()
    return nodes, weights


def _near_region(alpha, sigma, r, q):
    """int over r0 <= r/2 of r1^-alpha r0^-sigma e^{r - r1 - r0}, x = (r, 0)."""
    p = 1.0 / (2.0 - sigma)
    u, wu = _panels(np.concatenate([[0.0], np.geomspace(1e-8, 1.0, 40)]), q)
    t, wt = _panels(np.concatenate([[0.0], np.pi * np.geomspace(1e-5, 1.0, 30)]), q)
    r0 = 0.5 * r * u ** p
    R0, T = np.meshgrid(r0, t, indexing="ij")
    r1 = np.sqrt(np.maximum(r * r + R0 * R0 - 2 * r * R0 * np.cos(T), 0.0))
    expo = (2 * r * R0 * np.cos(T) - R0 * R0) / (r + r1) - R0
    f = r1 ** (-alpha) * np.exp(expo)
    jac = (0.5 * r) ** (2.0 - sigma) * p
    return 2.0 * jac * np.einsum("i,ij,j->", wu, f, wt)


def _far_region(alpha, sigma, r, q):
    """int over r0 >= r/2 and r1 >= r/2."""
    # theta_min(r0) has square-root kinks at r0 = r/2 and r0 = 3r/2: grade panels toward both
    g = np.geomspace(1e-6, 1.0, 24)
    edges = np.unique(np.concatenate([[0.0], r * g, r * (1 - g), r + r * g, [r + 60.0]]))
    s, ws = _panels(edges[edges <= r + 60.0], q)
    r0 = 0.5 * r + s
    # 1 - cos(theta_min) in factored form; arccos loses half the digits near 1
    one_m = np.maximum(-(r0 - 0.5 * r) * (r0 - 1.5 * r) / (2 * r * r0), 0.0)
    tmin = 2.0 * np.arcsin(np.sqrt(np.minimum(0.5 * one_m, 1.0)))
    v, wv = _panels(np.concatenate([[0.0], np.geomspace(1e-6, 1.0, 30)]), q)
    T = tmin[:, None] + (np.pi - tmin)[:, None] * v[None]
    WT = (np.pi - tmin)[:, None] * wv[None]
    R0 = r0[:, None]
    r1 = np.sqrt(np.maximum(r * r + R0 * R0 - 2 * r * R0 * np.cos(T), 0.0))
    f = r1 ** (-alpha) * R0 ** (1.0 - sigma) * np.exp(r - R0 - r1)
    return 2.0 * np.sum(ws[:, None] * WT * f)


def integral_bound_value(alpha, sigma, r, q=16):
    """I(r) = int r1^-alpha r0^-sigma e^{r - r1 - r0} dx0 split into the three proof regions."""
    if not (0 < alpha < 2 and 0 < sigma < 2 and alpha + sigma > 1.5):
        raise ValueError("need alpha, sigma in (0, 2) with alpha + sigma > 3/2")
    parts = (_near_region(alpha, sigma, r, q), _near_region(sigma, alpha, r, q), _far_region(alpha, sigma, r, q))
    return float(sum(parts)), parts


def integral_bound_majorant(alpha, sigma, r):
    lg = abs(np.log(r))
    return (r ** (-(alpha + sigma - 1.5)) + lg ** float(sigma == 1.5) * r ** (-alpha)
            + lg ** float(alpha == 1.5) * r ** (-sigma))


def check_integral_lemma(alpha, sigma, r_grid=None):
    r_grid = np.geomspace(10.0, 100.0, 10) if r_grid is None else np.asarray(r_grid, dtype=float)
    if np.any(r_grid < 5) or np.any(r_grid > 200):
        raise ValueError("r_grid must lie in [5, 200]")
    vals = np.array([integral_bound_value(alpha, sigma, r)[0] for r in r_grid])
    ratio = vals / integral_bound_majorant(alpha, sigma, r_grid)
    upper = slice(len(r_grid) // 2, None)
    slope = float(np.polyfit(np.log(r_grid[upper]), np.log(ratio[upper]), 1)[0])
    ok = np.all(np.isfinite(ratio)) and ratio.max() < THRESHOLDS["integral_ratio_cap"] \
        and slope <= THRESHOLDS["integral_growth_slope"]
    return VerificationReport(
        f"integral_lemma.a{alpha:g}_s{sigma:g}", len(r_grid), bool(ok), worst_ratio=float(ratio.max()),
        extracted_constant=float(ratio.max()), fitted_slope=slope,
        threshold={"ratio_cap": THRESHOLDS["integral_ratio_cap"],
                   "max_upper_half_growth_slope": THRESHOLDS["integral_growth_slope"]},
        evidence={"alpha": alpha, "sigma": sigma, "r": r_grid, "I": vals, "ratio": ratio})


INTEGRAL_BOUND_PARAMS = [(a, s) for a in (0.5, 1.0, 1.5, 1.9) for s in (0.5, 1.0, 1.5, 1.9) if a + s > 1.5]


# --------------------------------------------------------- angular integral

def angular_integral(r0):
    """int_{-pi}^{pi} exp(-r0 (1 - cos phi)) dphi by adaptive quadrature."""
    return 2.0 * integrate.quad(lambda p: np.exp(-2.0 * r0 * np.sin(0.5 * p) ** 2), 0.0, np.pi,
                                epsabs=0, epsrel=1e-12, limit=200)[0]


def check_angular_integral(r0_grid=None):
    r0_grid = np.geomspace(1e-3, 1e3, 61) if r0_grid is None else np.asarray(r0_grid, dtype=float)
    vals = np.array([angular_integral(r) for r in r0_grid])
    ratio = (1.0 + np.sqrt(r0_grid)) * vals
    sup = float(ratio.max())
    return VerificationReport(
        "angular_integral", len(r0_grid), bool(sup < THRESHOLDS["angular_ratio_cap"]),
        worst_ratio=sup, extracted_constant=sup,
        threshold={"ratio_cap": THRESHOLDS["angular_ratio_cap"]},
        evidence={"literal_inequality_holds": bool(sup <= 1.0), "r0": r0_grid, "integral": vals,
                  "oracle_max_abs_error": float(np.max(np.abs(vals - 2 * np.pi * special.i0e(r0_grid))))})


# --------------------------------------------------- expansions and bounds

def check_shifted_kernel(n_sources=200, seed=0, radii=None, rays=(0.0, np.pi / 2, -np.pi / 2, np.pi)):
    """r^{3/2} e^{r(1-cos)} |grad G(x - x0) - grad G(x) e^{r0(cos(t-t0) - cos t0)}| for r0 <= 1."""
    rng = check_rng(seed, "shifted_kernel")
    radii = np.geomspace(20.0, 100.0, 9) if radii is None else np.asarray(radii)
    rho = np.sqrt(rng.uniform(0, 1, n_sources))
    phi = rng.uniform(-np.pi, np.pi, n_sources)
    x0 = np.stack([rho * np.cos(phi), rho * np.sin(phi)], -1)
    per_r = np.zeros(len(radii))
    for t in rays:
        x = np.stack([radii * np.cos(t), radii * np.sin(t)], -1)
        ex = K.grad_g_shifted_exact(x[:, None], x0[None])
        ld = K.shifted_gradg_leading(x[:, None], x0[None])
        diff = np.abs(ex.mantissa - ld.mantissa).max(-1).max(-1)
        per_r = np.maximum(per_r, diff * radii ** 1.5)
    slope = float(np.polyfit(np.log(radii), np.log(per_r), 1)[0])
    ok = per_r.max() < THRESHOLDS["bound_ratio_cap"] and slope <= THRESHOLDS["growth_slope"]
    return VerificationReport("shifted_kernel", n_sources * len(radii) * len(rays), bool(ok),
                              worst_ratio=float(per_r.max()), fitted_slope=slope,
                              threshold={"ratio_cap": THRESHOLDS["bound_ratio_cap"],
                                         "max_growth_slope": THRESHOLDS["growth_slope"]},
                              evidence={"r": radii, "sup_ratio": per_r})


def check_derivative_bounds(n_samples=20_000, seed=0, r_range=(1.0, 300.0)):
    """|D E| and |D grad G| against their far-field majorants."""
    rng = check_rng(seed, "derivative_bounds")
    x = _sample_points(rng, n_samples, r_range)
    r = np.hypot(x[:, 0], x[:, 1])
    th = np.abs(polar_angle(x[:, 0], x[:, 1]))
    w = K.wake_exponent_xy(x[:, 0], x[:, 1])
    dE = np.abs(K.oseen_tensor_grad(x)).reshape(len(x), -1).max(1)
    maj_e = (th / np.sqrt(r) + r ** -1.5) * np.exp(-w) + r ** -2.0
    hg = np.abs(K.hess_g(x).mantissa).reshape(len(x), -1).max(1)
    maj_g = th ** 2 / np.sqrt(r) + r ** -1.5
    out = []
    for name, ratio in (("tensor", dE / maj_e), ("grad_g", hg / maj_g)):
        sup = float(ratio.max())
        out.append(VerificationReport(f"derivative_bounds.{name}", n_samples,
                                      bool(np.isfinite(sup) and sup < THRESHOLDS["bound_ratio_cap"]),
                                      worst_ratio=sup, extracted_constant=sup,
                                      threshold={"ratio_cap": THRESHOLDS["bound_ratio_cap"]}))
    return out


# ------------------------------------------------------ asymptote comparison

DEFAULT_RAYS = (0.0, np.pi / 2, -np.pi / 2, np.pi)


def compare_asymptotes(scene, rays=DEFAULT_RAYS, radii=None, tol=1e-13, modified=None):
    """Exact vorticity against the classical, improved and (optionally) modified asymptotes.

    ``modified`` is an optional pair ``(exps, mu)`` with ``mu`` a callable of theta.
    Errors are wake-scaled: |omega - asymptote| e^{r(1 - cos theta)}.
    """
    from .asymptotics import classical_asymptote, improved_asymptote, modified_asymptote

    radii = np.geomspace(20.0, 80.0, 9) if radii is None else np.asarray(radii, dtype=float)
    F = net_force(scene).F
    rows = []
    for t in rays:
        Ft = net_force_angular(t, scene)
        for r in radii:
            x = np.array([r * np.cos(t), r * np.sin(t)])
            target = 0.0 - wake_exponent(r, t)
            om = float(np.squeeze(oseen_vorticity(x, scene, tol).rescaled(target)))
            cl = float(np.squeeze(classical_asymptote(x, F).rescaled(target)))
            im = float(np.squeeze(improved_asymptote(x, Ft).rescaled(target)))
            row = {"theta": float(t), "r": float(r), "log_scale": float(target), "omega": om,
                   "classical": cl, "improved": im,
                   "classical_error": abs(om - cl), "improved_error": abs(om - im)}
            if modified is not None:
                exps, mu = modified
                md = float(np.squeeze(modified_asymptote(x, exps, mu).rescaled(target)))
                row.update({"modified": md, "modified_error": abs(om - md)})
            rows.append(row)
    return rows


def asymptote_slopes(rows, column):
    """rate_fit of an error column per ray; None where the errors vanish."""
    out = {}
    for t in sorted({r["theta"] for r in rows}, key=lambda v: (abs(v), v)):
        sel = [r for r in rows if r["theta"] == t]
        vals = np.array([r[column] for r in sel])
        out[t] = rate_fit([r["r"] for r in sel], vals) if np.all(vals > 0) and len(sel) >= 5 else None
    return out


# -------------------------------------------------------------- runner

def _run_transform(seed):
    from .asymptotics import (DecayExponents, PerturbationModel, PolarGrid, coefficient_bounds,
                              random_test_function, transform_residual, transformed_coefficients)
    rng = check_rng(seed, "transform")
    cases = [(DecayExponents(), PerturbationModel(0.0)),
             (DecayExponents(1.0, -0.5), PerturbationModel(0.1, 0.25, "cosine")),
             (DecayExponents(-0.3, 0.7), PerturbationModel(0.05, 0.25))]
    worst = 0.0
    n = 0
    for k in range(100):
        exps, pert = cases[k % len(cases)]
        co = transformed_coefficients(exps, pert)
        om, c, s = random_test_function(rng)
        pts = c + s * rng.uniform(-1, 1, (40, 2))
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) > 1.0]
        worst = max(worst, transform_residual(co, om, pts))
        n += 1
    consts = {f"{e.A:g},{e.B:g}": coefficient_bounds(transformed_coefficients(e, p), PolarGrid())
              for e, p in cases}
    return [VerificationReport("transform_residual", n, bool(worst < THRESHOLDS["transform_residual"]),
                               max_residual=worst,
                               threshold={"max_residual": THRESHOLDS["transform_residual"]},
                               evidence={"coefficient_constants": consts})]


CHECKS = {
    "pde_residuals": lambda seed: check_pde_residuals(seed=seed),
    "kernel_bounds": lambda seed: check_kernel_bounds(seed=seed, seeds_for_stability=(seed + 1,)),
    "bessel_bounds": lambda seed: check_bessel_bounds(),
    "integral_lemma": lambda seed: [check_integral_lemma(a, s) for a, s in INTEGRAL_BOUND_PARAMS],
    "angular_integral": lambda seed: [check_angular_integral()],
    "shifted_kernel": lambda seed: [check_shifted_kernel(seed=seed)],
    "derivative_bounds": lambda seed: check_derivative_bounds(seed=seed),
    "transform": _run_transform,
}


def run_checks(check_id="all", seed=0):
    if check_id == "all":
        ids = list(CHECKS)
    elif check_id in CHECKS:
        ids = [check_id]
    else:
        raise KeyError(check_id)
    reports = []
    for cid in ids:
        reports.extend(CHECKS[cid](seed))
    return reports
