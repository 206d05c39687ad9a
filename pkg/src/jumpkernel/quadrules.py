"""Low-level quadrature primitives.

Everything here is deterministic: no randomness, no threading, stable
summation order.  The adaptive driver is a wave-based Gauss–Kronrod (7,15)
scheme whose integrands must accept numpy arrays (it evaluates whole
refinement generations in single vectorized calls).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import ValidationError

# Gauss–Kronrod (7,15) nodes/weights on [-1, 1].  Positive half, descending.
_GK_POS_NODES = np.array(
    [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
    ]
)
_GK_POS_W15 = np.array(
    [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
    ]
)
_GK_W15_CENTER = 0.209482141084728
_GK_W7 = np.array(
    [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,  # center
    ]
)

K15_NODES = np.concatenate([-_GK_POS_NODES, [0.0], _GK_POS_NODES[::-1]])
K15_WEIGHTS = np.concatenate([_GK_POS_W15, [_GK_W15_CENTER], _GK_POS_W15[::-1]])
# The embedded Gauss-7 rule lives on every other Kronrod node.
G7_COLUMNS = np.arange(1, 15, 2)
G7_WEIGHTS = np.concatenate([_GK_W7[:3], [_GK_W7[3]], _GK_W7[2::-1]])


def adaptive_interval(
    f,
    a: float,
    b: float,
    rel_tol: float = 1e-9,
    abs_floor: float = 0.0,
    max_depth: int = 24,
    breakpoints=(),
):
    """Integrate a vectorized scalar integrand over [a, b].

    ``breakpoints`` seeds the initial partition (callers list radii where the
    integrand has kinks or localized features, so the first generation cannot
    step over them).  Returns ``(value, err, converged, neval)``; ``err`` is
    the summed Kronrod minus Gauss discrepancy of the accepted panels.
    """
    if not b > a:
        return 0.0, 0.0, True, 0
    edges = [a]
    for t in sorted(set(float(t) for t in breakpoints)):
        if a < t < b:
            edges.append(t)
    edges.append(b)
    lo = np.array(edges[:-1])
    hi = np.array(edges[1:])
    depth = np.zeros(lo.size, dtype=int)

    total_len = b - a
    accepted_val = 0.0
    accepted_err = 0.0
    neval = 0
    converged = True

    while lo.size:
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        pts = mid[:, None] + half[:, None] * K15_NODES[None, :]
        fv = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
        neval += pts.size
        i15 = half * (fv @ K15_WEIGHTS)
        i7 = half * (fv[:, G7_COLUMNS] @ G7_WEIGHTS)
        err = np.abs(i15 - i7)

        scale = abs(accepted_val + float(np.sum(i15)))
        tol_now = max(abs_floor, rel_tol * scale)
        budget = tol_now * (hi - lo) / total_len
        ok = err <= budget
        at_cap = depth >= max_depth
        keep = ok | at_cap
        if np.any(at_cap & ~ok):
            converged = False

        accepted_val += float(np.sum(i15[keep]))
        accepted_err += float(np.sum(err[keep]))

        split = ~keep
        lo, hi, depth = (
            np.concatenate([lo[split], mid[split]]),
            np.concatenate([mid[split], hi[split]]),
            np.concatenate([depth[split] + 1, depth[split] + 1]),
        )
    return accepted_val, accepted_err, converged, neval


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_panels(f, edges, order: int = 10):
    """Fixed composite Gauss–Legendre integral of a vectorized integrand."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = mid[:, None] + half[:, None] * x[None, :]
    fv = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    return float(np.sum(half * (fv @ w)))


def tensor_gauss_cell(f, lo, hi, order: int = 10):
    """Fixed tensor Gauss–Legendre integral over an axis-aligned cell.

    ``f`` maps an (m, n) array of points to (m,) values.  Returns the
    integral plus a crude error estimate from comparing with the order//2
    embedded rule on the same cell.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size

    def run(p):
        x, w = _leggauss(p)
        axes = [0.5 * (lo[d] + hi[d]) + 0.5 * (hi[d] - lo[d]) * x for d in range(n)]
        wts = [0.5 * (hi[d] - lo[d]) * w for d in range(n)]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        wgrid = np.meshgrid(*wts, indexing="ij")
        wprod = np.ones(pts.shape[0])
        for g in wgrid:
            wprod = wprod * g.ravel()
        vals = np.asarray(f(pts), dtype=float)
        return float(np.dot(wprod, vals))

    coarse = run(max(2, order // 2))
    fine = run(order)
    return fine, abs(fine - coarse)


def sphere_surface(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2, 2*pi, 4*pi for n=1,2,3)."""
    if n < 1:
        raise ValidationError("dimension must be at least 1")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n (2, pi, 4*pi/3 for n=1,2,3)."""
    if n < 1:
        raise ValidationError("dimension must be at least 1")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@lru_cache(maxsize=256)
def sphere_rule(dim: int, level: int = 0, half: bool = False):
    """Quadrature rule for integrals over the unit sphere S^{dim-1}.

    Returns ``(theta, w)`` with ``theta`` of shape (m, dim) and weights
    summing to the sphere surface (or half of it when ``half=True``; those
    weights are doubled so the rule still integrates even integrands over
    the full sphere).  ``level`` doubles the resolution per increment.

    dim=2 panels are split at the coordinate axes so integrands with p-norm
    style kinks stay smooth inside every panel.
    """
    if dim == 1:
        if half:
            return np.array([[1.0]]), np.array([2.0])
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        panels_per_quadrant = 2 ** level
        quadrants = 2 if half else 4
        x, w = _leggauss(10)
        phis = []
        wts = []
        width = (math.pi / 2.0) / panels_per_quadrant
        for q in range(quadrants):
            for j in range(panels_per_quadrant):
                a = q * math.pi / 2.0 + j * width
                phis.append(a + 0.5 * width * (1.0 + x))
                wts.append(np.full(x.size, 0.5 * width) * w)
        phi = np.concatenate(phis)
        wt = np.concatenate(wts)
        if half:
            wt = 2.0 * wt
        theta = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return theta, wt
    if dim == 3:
        # Surface measure factorizes as d(cos polar) x d(azimuth).
        nu = 8 * 2 ** level
        nphi = 2 * nu
        x, w = _leggauss(nu)
        if half:
            u = 0.5 * (1.0 + x)
            wu = 2.0 * 0.5 * w
        else:
            u = x
            wu = w
        phi = 2.0 * math.pi * (np.arange(nphi) + 0.5) / nphi
        wphi = np.full(nphi, 2.0 * math.pi / nphi)
        uu, pp = np.meshgrid(u, phi, indexing="ij")
        s = np.sqrt(np.clip(1.0 - uu ** 2, 0.0, None))
        theta = np.stack(
            [(s * np.cos(pp)).ravel(), (s * np.sin(pp)).ravel(), uu.ravel()], axis=-1
        )
        wt = (wu[:, None] * wphi[None, :]).ravel()
        return theta, wt
    raise ValidationError(f"no sphere rule for dimension {dim}")


def richardson_fit(s_values, y_values):
    """Extrapolate y(s) to s = 0 with linear and quadratic least squares fits.

    Returns ``(quadratic_limit, linear_limit)``.  Callers compare the two to
    flag unreliable extrapolations.
    """
    s = np.asarray(s_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    if s.size < 2:
        raise ValidationError("need at least two nodes to extrapolate")
    lin = np.polynomial.polynomial.polyfit(s, y, 1)[0]
    if s.size >= 3:
        quad = np.polynomial.polynomial.polyfit(s, y, 2)[0]
    else:
        quad = lin
    return float(quad), float(lin)
