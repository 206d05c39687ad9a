"""Collocation solver for the zero-exterior Dirichlet problems.

L_K u = f(u) (and its fully nonlinear sibling F_{G,K} u = f(u)) is posed
in the ball B_radius(0) with u identically 0 outside, in one and two
dimensions.  The unknown is the vector of nodal values at the lattice
nodes strictly inside the ball; the trial space is the span of the
piecewise-multilinear hats at those nodes, extended by 0.

Assembly exploits that every zoo kernel is translation invariant and even
in each coordinate: A[i][j] depends only on |x_i - x_j| componentwise, so
only one quadrature per distinct offset is run.  Offsets whose evaluation
point touches the hat's support go through the full principal-value
machinery; all others integrate the smooth product hat * kernel by fixed
tensor Gauss panels over the hat's four (resp. two) cells.

The solver deliberately does not impose any symmetry: radial symmetry and
monotonicity of the computed profiles are emergent properties the tests
measure, not constraints baked in.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import NonConvergenceError, ValidationError
from .fields import Field, grid_field
from .kernels import KernelSpec, eval_kernel
from .nonlinearity import (
    G_IDENTITY,
    NonlinearitySpec,
    eval_f,
    eval_f_prime,
)
from .quadrature import QuadratureConfig, eval_FGK, eval_LK
from .quadrules import tensor_gauss_cell


@dataclass(frozen=True)
class DomainSpec:
    dim: int
    radius: float = 1.0
    grid_n: int = 33

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError("dim must be 1 or 2")
        if not self.radius > 0.0:
            raise ValidationError("radius must be positive")
        if self.grid_n % 2 == 0 or self.grid_n < 17:
            raise ValidationError("grid_n must be odd and at least 17")

    @property
    def h(self) -> float:
        return 2.0 * self.radius / (self.grid_n - 1)

    @property
    def origin(self):
        return np.full(self.dim, -self.radius)

    def lattice_axes(self):
        return [
            -self.radius + self.h * np.arange(self.grid_n) for _ in range(self.dim)
        ]

    def interior_indices(self):
        """Lattice multi-indices of nodes strictly inside the ball."""
        axes = self.lattice_axes()
        out = []
        for idx in itertools.product(*(range(self.grid_n),) * self.dim):
            x = np.array([axes[d][idx[d]] for d in range(self.dim)])
            if np.dot(x, x) < self.radius ** 2 - 1e-12:
                out.append(idx)
        return out


@dataclass
class DiscreteOperator:
    A: np.ndarray
    b: np.ndarray
    nodes: np.ndarray           # (m, dim) interior node coordinates
    indices: list               # lattice multi-index per row
    spec: KernelSpec
    domain: DomainSpec
    cfg: QuadratureConfig
    entry_err: dict = dc_field(default_factory=dict)  # canonical offset -> err

    def apply(self, u):
        return self.A @ np.asarray(u, dtype=float) + self.b


@dataclass
class SolveReport:
    residual_history: list
    iterations: int
    converged: bool
    final_residual_sup: float


def hat_field(domain: DomainSpec, center) -> Field:
    """The multilinear hat at ``center``: 1 there, 0 at all neighbours."""
    h = domain.h
    shape = (3,) * domain.dim
    values = np.zeros(shape)
    values[(1,) * domain.dim] = 1.0
    c = np.asarray(center, dtype=float)
    return grid_field(values, c - h, h, exterior_value=0.0, label="hat")


def _near_offset_value(domain, spec, cfg, offset):
    """Stencil entry via the principal-value engine.

    Used for every offset whose hat support is not entirely clear of the
    inner ball B_eps around the evaluation node — inside that ball the
    engine's local quadratic model is the discretization, so integrating
    the raw hat there separately would count the region twice.
    """
    hat = hat_field(domain, np.zeros(domain.dim))
    x = np.asarray(offset, dtype=float) * domain.h
    res = eval_LK(hat, spec, x, cfg)
    return res.value, res.err_estimate


def _far_offset_value(domain, spec, offset):
    """Stencil entry for offsets whose node lies outside the hat support:
    a(d) = -∫ hat(y) K(d*h - y) dy over the hat's smooth cells."""
    h = domain.h
    d = np.asarray(offset, dtype=float) * h

    def integrand(pts):
        w = np.prod(1.0 - np.abs(pts) / h, axis=-1)
        return w * eval_kernel(spec, d[None, :] - pts)

    order = 12 if max(abs(int(o)) for o in offset) <= 4 else 8
    total = 0.0
    err = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=domain.dim):
        lo = np.minimum(0.0, np.array(signs) * h)
        hi = np.maximum(0.0, np.array(signs) * h)
        v, e = tensor_gauss_cell(integrand, lo, hi, order=order)
        total += v
        err += e
    return -total, err


def _canonical(offset):
    return tuple(int(abs(o)) for o in offset)


def assemble_LK_matrix(
    spec: KernelSpec, domain: DomainSpec, cfg: QuadratureConfig | None = None
) -> DiscreteOperator:
    if spec.dim != domain.dim:
        raise ValidationError("kernel and domain dimensions must agree")
    if cfg is None:
        # Smaller model balls win here: the dominant assembly error is the
        # local quadratic model misrepresenting low-regularity solutions near
        # the sphere, and it scales linearly with eps_inner.  Two cells is
        # the smallest radius that still covers the second-difference stencil.
        cfg = QuadratureConfig(eps_inner=max(2.0 * domain.h, 1e-3))
    indices = domain.interior_indices()
    m = len(indices)
    axes = domain.lattice_axes()
    nodes = np.array(
        [[axes[d][idx[d]] for d in range(domain.dim)] for idx in indices]
    )
    idx_arr = np.array(indices, dtype=int)

    stencil = {}
    errs = {}
    offsets = set()
    for i in range(m):
        diffs = idx_arr - idx_arr[i]
        for d in diffs:
            offsets.add(_canonical(d))
    # Hat supports reach one spacing past their node, so an offset is clear
    # of the inner ball exactly when (|d|_inf - 1) h >= eps_inner.
    near_cut = cfg.eps_inner / domain.h + 1.0 - 1e-9
    for off in sorted(offsets):
        if max(off) < near_cut:
            stencil[off], errs[off] = _near_offset_value(domain, spec, cfg, off)
        else:
            stencil[off], errs[off] = _far_offset_value(domain, spec, off)

    A = np.empty((m, m))
    for i in range(m):
        diffs = idx_arr - idx_arr[i]
        for j in range(m):
            A[i, j] = stencil[_canonical(diffs[j])]
    b = np.zeros(m)
    return DiscreteOperator(
        A=A, b=b, nodes=nodes, indices=indices, spec=spec, domain=domain,
        cfg=cfg, entry_err=errs,
    )


def solution_field(domain: DomainSpec, op: DiscreteOperator, u_int) -> Field:
    values = np.zeros((domain.grid_n,) * domain.dim)
    for idx, v in zip(op.indices, np.asarray(u_int, dtype=float)):
        values[idx] = v
    return grid_field(
        values, domain.origin, domain.h, exterior_value=0.0, label="solution"
    )


def _raise_nonconvergence(msg, field, report):
    exc = NonConvergenceError(
        msg, value=report.final_residual_sup, err_estimate=report.final_residual_sup
    )
    exc.field = field
    exc.report = report
    raise exc


def solve_dirichlet(
    spec: KernelSpec,
    f: NonlinearitySpec,
    domain: DomainSpec,
    cfg: QuadratureConfig | None = None,
    solve_tol: float = 1e-10,
    max_iter: int = 60,
    op: DiscreteOperator | None = None,
):
    """Damped Newton for A u = f(u); linear f converges in one step."""
    if op is None:
        op = assemble_LK_matrix(spec, domain, cfg)
    m = op.A.shape[0]
    u = np.zeros(m)

    def residual(v):
        return op.A @ v + op.b - eval_f(f, v)

    r = residual(u)
    history = [float(np.max(np.abs(r)))]
    converged = history[-1] <= solve_tol
    it = 0
    while not converged and it < max_iter:
        J = op.A - np.diag(eval_f_prime(f, u))
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        base = history[-1]
        while t >= 1.0 / 1024.0:
            cand = u + t * step
            rc = residual(cand)
            if float(np.max(np.abs(rc))) < base:
                break
            t *= 0.5
        else:
            break
        u, r = cand, rc
        history.append(float(np.max(np.abs(r))))
        it += 1
        converged = history[-1] <= solve_tol

    report = SolveReport(
        residual_history=history,
        iterations=it,
        converged=bool(converged),
        final_residual_sup=history[-1],
    )
    fld = solution_field(domain, op, u)
    if not converged:
        _raise_nonconvergence("Dirichlet solve did not converge", fld, report)
    return fld, report


def solve_dirichlet_nonlinear(
    gspec: NonlinearitySpec,
    spec: KernelSpec,
    domain: DomainSpec,
    cfg: QuadratureConfig | None = None,
    solve_tol: float = 1e-6,
    max_iter: int = 40,
    op: DiscreteOperator | None = None,
):
    """F_{G,K} u = f(u) by a damped fixed-point sweep on the residual.

    Each sweep re-evaluates F_{G,K} at every interior node through the full
    principal-value quadrature of the current iterate (no linearization
    through G — its derivative degenerates at 0).  The linear stencil matrix
    serves only as a constant preconditioner for the update direction, with
    Armijo-style step halving for robustness.
    """
    if gspec.g_kind == G_IDENTITY or gspec.gamma == 0.0:
        return solve_dirichlet(
            spec, gspec, domain, cfg, solve_tol=solve_tol, max_iter=max_iter, op=op
        )
    if op is None:
        op = assemble_LK_matrix(spec, domain, cfg)
    cfg = op.cfg
    m = op.A.shape[0]
    nodes = op.nodes
    gamma = float(gspec.gamma)

    def residual(v):
        fld = solution_field(domain, op, v)
        vals = np.empty(m)
        for i in range(m):
            try:
                vals[i] = eval_FGK(fld, gspec, spec, nodes[i], cfg).value
            except NonConvergenceError as exc:
                vals[i] = exc.value
        return vals - eval_f(gspec, v)

    # G(0) = 0, so u == 0 solves the problem whenever f(0) does not push it.
    if abs(float(eval_f(gspec, np.zeros(1))[0])) <= solve_tol:
        report = SolveReport(
            residual_history=[abs(float(eval_f(gspec, np.zeros(1))[0]))],
            iterations=0,
            converged=True,
            final_residual_sup=abs(float(eval_f(gspec, np.zeros(1))[0])),
        )
        return solution_field(domain, op, np.zeros(m)), report

    # G is (1 + gamma)-homogeneous, so F_{G,K}(c w) = c^(1+gamma) F_{G,K}(w)
    # exactly: one evaluation along the linear solver's profile w gives the
    # whole one-parameter family, and the best amplitude on it is a strong
    # start despite G'(0) = 0 making the problem degenerate at u = 0.
    lu = np.linalg.inv(op.A)
    w = lu @ np.ones(m)
    w_field_res = residual(w) + eval_f(gspec, w)  # = F_{G,K}(w) at the nodes
    cs = np.linspace(0.0, 4.0, 321)[1:]
    fit = [
        float(np.max(np.abs(c ** (1.0 + gamma) * w_field_res - eval_f(gspec, c * w))))
        for c in cs
    ]
    u = cs[int(np.argmin(fit))] * w
    r = residual(u)
    history = [float(np.max(np.abs(r)))]
    converged = history[-1] <= solve_tol
    it = 0
    # Damped fixed point on the residual: the increment is the identity-G
    # stencil applied to r scaled by the secant slope of G at the iterate's
    # amplitude — F is re-evaluated every sweep and never linearized through
    # G.  Plain damped steps contract too slowly once the boundary nodes
    # (tiny differences, tiny effective slope) start to dominate, so the
    # iterates are Anderson-mixed: a least-squares combination of the recent
    # preconditioned residuals, falling back to an Armijo-halved plain step
    # (and a cleared mixing window) whenever the mixed candidate fails to
    # reduce the residual.
    amp = max(float(np.max(np.abs(u))), 1e-6)
    s = (1.0 + gamma) * amp ** gamma
    depth = 6
    us = [u.copy()]
    qs = [-(lu @ (r / s))]
    while not converged and it < max_iter:
        k = len(us)
        if k >= 2:
            dq = np.stack([qs[j + 1] - qs[j] for j in range(k - 1)], axis=1)
            theta, *_ = np.linalg.lstsq(dq, qs[-1], rcond=None)
            dus = np.stack([us[j + 1] - us[j] for j in range(k - 1)], axis=1)
            cand = us[-1] + qs[-1] - dus @ theta - dq @ theta
        else:
            cand = us[-1] + qs[-1]
        rc = residual(cand)
        if float(np.linalg.norm(rc)) >= float(np.linalg.norm(r)):
            t = 1.0
            while t >= 1.0 / 1024.0:
                cand = u + t * qs[-1]
                rc = residual(cand)
                if float(np.linalg.norm(rc)) < float(np.linalg.norm(r)):
                    break
                t *= 0.5
            else:
                break
            us, qs = [], []
        u, r = cand, rc
        us.append(u.copy())
        qs.append(-(lu @ (r / s)))
        if len(us) > depth + 1:
            us, qs = us[-(depth + 1):], qs[-(depth + 1):]
        history.append(float(np.max(np.abs(r))))
        it += 1
        converged = history[-1] <= solve_tol

    report = SolveReport(
        residual_history=history,
        iterations=it,
        converged=bool(converged),
        final_residual_sup=history[-1],
    )
    fld = solution_field(domain, op, u)
    if not converged:
        _raise_nonconvergence("nonlinear Dirichlet solve did not converge", fld, report)
    return fld, report
