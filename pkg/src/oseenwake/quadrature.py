"""Quadrature over disk-shaped supports with a (weakly) singular kernel point.

Two independent strategies are provided:

* :func:`integrate_disk` uses polar coordinates centred on the kernel point,
  so the Jacobian cancels 1/r1 and softens log r1.  Node counts double until
  two successive estimates agree.
* :func:`integrate_disk_subdivided` tiles the bounding square with Cartesian
  cells, refines them towards the kernel point and the support circle, and
  drops the tiny cell that contains the kernel point.
"""

import numpy as np


class QuadratureError(RuntimeError):
    """Adaptive refinement did not reach the tolerance."""

    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (best error estimate {error:.3e})")
        self.estimate = estimate
        self.error = error


def gauss_legendre(n, a=0.0, b=1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _rule_inside(d, rho, n_psi, n_t):
    """Rule for targets inside the disk; d = target - center, shape (m, 2)."""
    psi = 2.0 * np.pi * np.arange(n_psi) / n_psi
    e = np.stack([np.cos(psi), np.sin(psi)], -1)
    de = d @ e.T  # (m, n_psi)
    dd = np.sum(d * d, -1)[:, None]
    reach = -de + np.sqrt(np.maximum(de * de - dd + rho * rho, 0.0))
    u, wu = gauss_legendre(n_t)
    # t = T u^2 tames the t log t behaviour of logarithmic kernels
    t = reach[:, :, None] * u ** 2
    w = (2.0 * np.pi / n_psi) * 2.0 * reach[:, :, None] ** 2 * u ** 3 * wu
    offs = t[..., None] * e[None, :, None, :]
    return offs.reshape(len(d), -1, 2), w.reshape(len(d), -1)


def _rule_outside(d, rho, n_psi, n_t):
    """Rule for targets outside the disk: a cone of rays toward the disk."""
    m = len(d)
    dist = np.hypot(d[:, 0], d[:, 1])
    alpha = np.arcsin(np.minimum(rho / dist, 1.0))
    base = np.arctan2(-d[:, 1], -d[:, 0])
    g, wg = gauss_legendre(n_psi, -1.0, 1.0)
    # phi = alpha sin(pi g / 2) removes the square-root edge of the chord length
    phi = alpha[:, None] * np.sin(0.5 * np.pi * g)  # angle off the center direction
    wg = 0.5 * np.pi * np.cos(0.5 * np.pi * g) * wg
    psi = base[:, None] + phi
    half = np.sqrt(np.maximum(rho * rho - (dist[:, None] * np.sin(phi)) ** 2, 0.0))
    mid = dist[:, None] * np.cos(phi)
    t0, t1 = mid - half, mid + half
    u, wu = gauss_legendre(n_t)
    t = t0[..., None] + (t1 - t0)[..., None] * u
    w = (alpha[:, None] * wg)[..., None] * (t1 - t0)[..., None] * wu * t
    e = np.stack([np.cos(psi), np.sin(psi)], -1)
    offs = t[..., None] * e[:, :, None, :]
    return offs.reshape(m, -1, 2), w.reshape(m, -1)


def disk_rule(x, center, rho, n_psi, n_t):
    """Nodes (m, q, 2) and weights (m, q) covering the disk for each target in x (m, 2)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x - np.asarray(center, dtype=float)
    dist = np.hypot(d[:, 0], d[:, 1])
    inside = dist <= rho
    q = n_psi * n_t
    nodes = np.empty((len(x), q, 2))
    weights = np.empty((len(x), q))
    if inside.any():
        o, w = _rule_inside(d[inside], rho, n_psi, n_t)
        nodes[inside] = x[inside, None, :] + o
        weights[inside] = w
    if (~inside).any():
        o, w = _rule_outside(d[~inside], rho, n_psi, n_t)
        nodes[~inside] = x[~inside, None, :] + o
        weights[~inside] = w
    # a target on the circle gets empty rays whose nodes sit on the target with
    # zero weight; park them at the center so the kernel is never evaluated there
    dead = weights == 0.0
    if dead.any():
        nodes[dead] = np.asarray(center, dtype=float)
    return nodes, weights


def integrate_disk(integrand, x, center, rho, tol=1e-10, n0=16, max_level=6, chunk=2048):
    """Integrate integrand(x, y) over the disk |y - center| <= rho for each target x.

    ``integrand`` receives targets broadcast to the node array shape (m, q, 2)
    and nodes (m, q, 2); it returns (m, q) or (m, q, k).  Returns the estimate
    and the absolute error estimate (difference of the last two levels).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    results = []
    errors = []
    for start in range(0, len(x), chunk):
        xs = x[start:start + chunk]
        prev = None
        err = np.inf
        n = n0
        for _level in range(max_level):
            nodes, w = disk_rule(xs, center, rho, n, n)
            vals = integrand(np.broadcast_to(xs[:, None, :], nodes.shape), nodes)
            if vals.ndim == 3:
                est = np.einsum("mq,mqk->mk", w, vals)
            else:
                est = np.einsum("mq,mq->m", w, vals)
            if prev is not None:
                err = np.max(np.abs(est - prev))
                if err <= tol:
                    break
            prev = est
            n *= 2
        else:
            raise QuadratureError("disk quadrature did not converge", est, err)
        results.append(est)
        errors.append(err)
    return np.concatenate(results), max(errors)


def integrate_disk_subdivided(integrand, x, center, rho, n0=8, q=8, boundary_cells=64, min_size=1e-9):
    """Independent rule for a single target x: a Cartesian quadtree over the bounding square.

    A cell is integrated with q x q Gauss points once the target is farther
    than twice its diameter and, if it straddles the support circle, once it
    is smaller than rho / boundary_cells; otherwise it is split in four.  The
    cell holding the target is dropped below ``min_size`` (for a 1/r kernel it
    contributes O(min_size)).  The integrand must vanish outside the disk.
    """
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    gx, gw = np.polynomial.legendre.leggauss(q)
    h0 = 2.0 * rho / n0
    stack = [(center[0] - rho + i * h0, center[1] - rho + j * h0, h0) for i in range(n0) for j in range(n0)]
    accepted = []
    while stack:
        a, b, h = stack.pop()
        mid = np.array([a + 0.5 * h, b + 0.5 * h])
        diam = h * np.sqrt(2.0)
        dc = np.hypot(*(mid - center))
        if dc - 0.5 * diam >= rho:
            continue  # outside the support
        straddles = dc + 0.5 * diam > rho
        dist = np.hypot(*(mid - x)) - 0.5 * diam
        if dist > 2.0 * diam and not (straddles and h > rho / boundary_cells):
            accepted.append((a, b, h))
        elif diam < min_size:
            continue  # singular cell isolated
        else:
            g = 0.5 * h
            stack.extend([(a, b, g), (a + g, b, g), (a, b + g, g), (a + g, b + g, g)])
    cells = np.array(accepted)
    t = 0.5 * (gx + 1.0)
    px = cells[:, 0:1] + cells[:, 2:3] * t
    py = cells[:, 1:2] + cells[:, 2:3] * t
    y = np.stack(np.broadcast_arrays(px[:, :, None], py[:, None, :]), -1).reshape(-1, 2)
    w = ((0.5 * cells[:, 2:3] * gw)[:, :, None] * (0.5 * cells[:, 2:3] * gw)[:, None, :]).reshape(-1)
    inside = np.hypot(*(y - center).T) < rho
    y, w = y[inside], w[inside]
    vals = integrand(np.broadcast_to(x, y.shape), y)
    if vals.ndim == 2:
        return np.einsum("q,qk->k", w, vals)
    return np.dot(w, vals)
