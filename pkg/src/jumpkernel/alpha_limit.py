"""alpha -> 2 limit studies: scaled kernel sweeps against local references.

As the singularity exponent approaches 2 the nonlocal operators collapse to
second-order differential operators; with the right scalar prefactor the
Gaussian-weighted kernel reproduces -Laplacian u, the p-norm kernel
reproduces -C_{n,p} Laplacian u, and the diagonally transformed kernel
reproduces -sum lambda_i^2 d_ii u.  This module runs those sweeps with
Richardson extrapolation in (2 - alpha), computes C_{n,p} and its
norm-equivalence bracket, and calibrates the sphere-vs-ball measure
convention empirically instead of assuming it.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import NonConvergenceError, ValidationError
from .fields import Field
from .kernels import (
    ANISOTROPIC_P,
    EXPONENTIAL,
    MATRIX_TRANSFORMED,
    KernelSpec,
)
from .quadrature import QuadratureConfig, eval_LK
from .quadrules import ball_volume, richardson_fit, sphere_surface

__all__ = [
    "FAMILY_EXPONENTIAL",
    "FAMILY_ANISOTROPIC",
    "FAMILY_MATRIX_DIAG",
    "SweepFamily",
    "AlphaSweepReport",
    "DEFAULT_ALPHAS",
    "gamma_prefactor",
    "exponential_scaled",
    "anisotropic",
    "matrix_diag",
    "sweep_alpha",
    "anisotropic_constant",
    "norm_equivalence_bracket",
    "calibrate_omega_n",
    "inner_ball_ratio",
]

FAMILY_EXPONENTIAL = "ExponentialScaled"
FAMILY_ANISOTROPIC = "Anisotropic"
FAMILY_MATRIX_DIAG = "MatrixDiag"

DEFAULT_ALPHAS = (1.9, 1.95, 1.99)


@dataclass(frozen=True)
class SweepFamily:
    """Which scaled kernel family a sweep runs over.

    ``MatrixDiag`` sits outside the two families with a full second-order
    limit analysis; it exists for the single diagonal-matrix smoke test
    against -sum lambda_i^2 d_ii u.
    """

    kind: str
    p: float = 2.0
    lambda_diag: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in (FAMILY_EXPONENTIAL, FAMILY_ANISOTROPIC, FAMILY_MATRIX_DIAG):
            raise ValidationError(f"unknown sweep family {self.kind!r}")
        if self.kind == FAMILY_ANISOTROPIC and self.p < 1.0:
            raise ValidationError("p must be at least 1")
        if self.kind == FAMILY_MATRIX_DIAG and not self.lambda_diag:
            raise ValidationError("MatrixDiag needs a diagonal")


def exponential_scaled() -> SweepFamily:
    return SweepFamily(FAMILY_EXPONENTIAL)


def anisotropic(p: float) -> SweepFamily:
    return SweepFamily(FAMILY_ANISOTROPIC, p=float(p))


def matrix_diag(lambda_diag) -> SweepFamily:
    return SweepFamily(FAMILY_MATRIX_DIAG, lambda_diag=tuple(float(v) for v in lambda_diag))


@dataclass(frozen=True)
class AlphaSweepReport:
    alpha_list: Tuple[float, ...]
    values: Tuple[float, ...]
    extrapolated_limit: float
    reference: float
    rel_error: Optional[float]
    flagged: bool
    family: SweepFamily

    def __post_init__(self):
        a = self.alpha_list
        if any(not (0.0 < v < 2.0) for v in a):
            raise ValidationError("alpha values must lie in (0,2)")
        if any(b <= c for b, c in zip(a[1:], a[:-1])):
            raise ValidationError("alpha_list must be strictly increasing")


def gamma_prefactor(alpha: float) -> float:
    """1/Gamma((2-alpha)/2): the scaling that tames the Gaussian-weighted
    kernel's vanishing mass as alpha -> 2."""
    if not (0.0 < alpha < 2.0):
        raise ValidationError("alpha must lie in (0,2)")
    return 1.0 / math.gamma((2.0 - alpha) / 2.0)


# ----------------------------------------------------------------------------
# omega_n calibration (sphere surface vs ball volume), cached
# ----------------------------------------------------------------------------

_OMEGA_CACHE: dict = {}


def _cache_path() -> Path:
    root = os.environ.get("JUMPKERNEL_CACHE_DIR", "")
    base = Path(root) if root else Path.home() / ".cache" / "jumpkernel"
    return base / "omega_n.json"


def _load_file_cache() -> dict:
    try:
        with open(_cache_path(), "r", encoding="utf-8") as fh:
            return {int(k): float(v) for k, v in json.load(fh).items()}
    except (OSError, ValueError):
        return {}


def _store_file_cache(cache: dict) -> None:
    try:
        path = _cache_path()
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({str(k): v for k, v in sorted(cache.items())}, fh, sort_keys=True)
    except OSError:
        pass


def _kernel_for(family: SweepFamily, dim: int, alpha: float) -> KernelSpec:
    if family.kind == FAMILY_EXPONENTIAL:
        return KernelSpec(EXPONENTIAL, dim, alpha)
    if family.kind == FAMILY_ANISOTROPIC:
        return KernelSpec(ANISOTROPIC_P, dim, alpha, p_norm=family.p)
    return KernelSpec(MATRIX_TRANSFORMED, dim, alpha, lambda_diag=family.lambda_diag)


def _prefactor(family: SweepFamily, dim: int, omega: Optional[float]) -> float:
    if family.kind == FAMILY_EXPONENTIAL:
        w = omega if omega is not None else calibrate_omega_n(dim)
        return 4.0 * dim / w
    if family.kind == FAMILY_ANISOTROPIC:
        # The paired Taylor expansion halves the second-order term, so the
        # raw C_n = 1 operator tends to -(1/2) C_{n,p} Laplacian u; the
        # factor 2 restores the -C_{n,p} Laplacian u normalization the limit
        # is stated against.
        return 2.0
    return 2.0 * dim / sphere_surface(dim)


def _reference(family: SweepFamily, u: Field, x) -> float:
    hess = np.asarray(u.hessian(x), dtype=float)
    diag = np.diag(hess)
    if family.kind == FAMILY_MATRIX_DIAG:
        lams = np.asarray(family.lambda_diag, dtype=float)
        return float(-np.sum(lams ** 2 * diag))
    if family.kind == FAMILY_ANISOTROPIC:
        return float(-anisotropic_constant(u.dim, family.p) * np.sum(diag))
    return float(-np.sum(diag))


def sweep_alpha(
    u: Field,
    family: SweepFamily,
    x,
    alpha_list: Sequence[float] = DEFAULT_ALPHAS,
    cfg: Optional[QuadratureConfig] = None,
    omega: Optional[float] = None,
) -> AlphaSweepReport:
    """Evaluate the scaled operator along alpha_list and extrapolate to 2.

    The inner-ball radius shrinks like sqrt(2 - alpha) along the sweep so the
    local Taylor error stays uniform while the singularity strengthens; a
    sweep value that fails to converge is retried with a halved radius before
    giving up.  The report is flagged when the linear and quadratic
    extrapolants disagree by more than 1%.
    """
    if u.grid is not None:
        raise ValidationError("alpha sweep needs a smooth closed-form field")
    alphas = [float(a) for a in alpha_list]
    if sorted(alphas) != alphas or len(set(alphas)) != len(alphas):
        raise ValidationError("alpha_list must be strictly increasing")
    if not alphas or max(alphas) < 1.9:
        raise ValidationError("alpha_list must reach at least 1.9")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != u.dim:
        raise ValidationError("point dimension mismatch")
    base = cfg if cfg is not None else QuadratureConfig()
    pref = _prefactor(family, u.dim, omega)
    gap0 = 2.0 - alphas[0]
    values = []
    for a in alphas:
        eps = base.eps_inner * math.sqrt((2.0 - a) / gap0)
        attempt = replace(base, eps_inner=eps)
        spec = _kernel_for(family, u.dim, a)
        for retry in range(4):
            try:
                res = eval_LK(u, spec, x, attempt)
                break
            except NonConvergenceError:
                if retry == 3:
                    raise
                attempt = replace(attempt, eps_inner=attempt.eps_inner / 2.0)
        values.append(pref * res.value)
    gaps = [2.0 - a for a in alphas]
    quad, lin = richardson_fit(gaps, values)
    scale = max(abs(quad), 1e-12)
    flagged = abs(quad - lin) > 0.01 * scale
    ref = _reference(family, u, x)
    rel = abs(quad - ref) / abs(ref) if ref != 0.0 else None
    return AlphaSweepReport(
        alpha_list=tuple(alphas),
        values=tuple(values),
        extrapolated_limit=float(quad),
        reference=ref,
        rel_error=rel,
        flagged=bool(flagged),
        family=family,
    )


# ----------------------------------------------------------------------------
# The anisotropic constant C_{n,p} and its norm-equivalence bracket
# ----------------------------------------------------------------------------


def _sphere_pnorm_integral(n: int, p: float, exponent: float, quad_tol: float) -> float:
    """Integral over the unit sphere of ||theta||_p^(-exponent).

    The integrand repeats on coordinate octants (coordinates enter through
    their absolute values), so quadrature runs on one octant with
    Gauss-Legendre nodes — away from octant corners the integrand is smooth,
    and node doubling with a settle check controls the mild endpoint
    behaviour of |cos|^p for non-integer p.
    """
    if n == 1:
        return 2.0
    if n == 2:
        m = 64
        prev = None
        while m <= 8192:
            nodes, weights = np.polynomial.legendre.leggauss(m)
            t = 0.25 * math.pi * (nodes + 1.0)
            f = (np.cos(t) ** p + np.sin(t) ** p) ** (-exponent / p)
            cur = float(np.sum(f * weights) * 0.25 * math.pi) * 4.0
            if prev is not None and abs(cur - prev) <= quad_tol * max(1.0, abs(cur)):
                return cur
            prev = cur
            m *= 2
        raise NonConvergenceError("sphere integral did not settle", prev, abs(cur - prev))
    if n == 3:
        m = 32
        prev = None
        while m <= 2048:
            zn, zw = np.polynomial.legendre.leggauss(m)
            an, aw = np.polynomial.legendre.leggauss(m)
            z = 0.5 * (zn + 1.0)  # polar cosine on [0,1]; z -> -z symmetric
            phi = 0.25 * math.pi * (an + 1.0)
            st = np.sqrt(1.0 - z ** 2)[:, None]
            xs = st * np.cos(phi)[None, :]
            ys = st * np.sin(phi)[None, :]
            zs = np.broadcast_to(z[:, None], xs.shape)
            norm_p = (xs ** p + ys ** p + zs ** p) ** (1.0 / p)
            f = norm_p ** (-exponent)
            cur = float(np.einsum("ij,i,j->", f, zw, aw)) * 0.5 * 0.25 * math.pi
            cur *= 2.0 * 4.0  # both hemispheres, four azimuthal quadrants
            if prev is not None and abs(cur - prev) <= quad_tol * max(1.0, abs(cur)):
                return cur
            prev = cur
            m *= 2
        raise NonConvergenceError("sphere integral did not settle", prev, abs(cur - prev))
    raise ValidationError("only dimensions 1..3 are supported")


def anisotropic_constant(n: int, p: float, quad_tol: float = 1e-10) -> float:
    """C_{n,p}: the alpha -> 2 coefficient of the p-norm kernel limit.

    Defined as (1/n) lim (2-alpha) * integral over the unit ball of
    |y|^2 / ||y||_p^(n+alpha).  In polar form the radial factor integrates
    exactly to 1/(2-alpha), so each sweep value reduces to the sphere
    integral of ||theta||_p^(-(n+alpha)); those are evaluated at
    alpha in {1.9, 1.95, 1.99} and Richardson-extrapolated to alpha = 2.
    """
    if p < 1.0:
        raise ValidationError("p must be at least 1")
    if int(n) != n or n < 1:
        raise ValidationError("n must be a positive integer")
    n = int(n)
    vals = [
        _sphere_pnorm_integral(n, p, n + a, quad_tol) / n for a in DEFAULT_ALPHAS
    ]
    gaps = [2.0 - a for a in DEFAULT_ALPHAS]
    quad, _lin = richardson_fit(gaps, vals)
    return float(quad)


def norm_equivalence_bracket(n: int, p: float) -> Tuple[float, float]:
    """[lower, upper] for C_{n,p} from c|y| <= ||y||_p <= c'|y|.

    On the unit sphere the p-norm ranges between 1 (axis directions) and
    n^(1/p - 1/2) (diagonal), in whichever order the exponent puts them.
    """
    if p < 1.0:
        raise ValidationError("p must be at least 1")
    a = 1.0
    b = float(n) ** (1.0 / p - 0.5)
    c_lo, c_hi = min(a, b), max(a, b)
    sigma = sphere_surface(n)
    return (sigma / n * c_hi ** -(n + 2), sigma / n * c_lo ** -(n + 2))


def calibrate_omega_n(n: int, tolerance: float = 0.02) -> float:
    """Decide empirically whether omega_n means sphere surface or ball volume.

    Runs the Gaussian-field sweep with the 4n/W prefactor for both candidate
    measures and returns the one whose extrapolated limit lands on 2n within
    tolerance; the winner is cached in memory and on disk.  Raises when
    neither candidate comes within 5% — that would be a genuine open finding,
    not something to paper over.
    """
    if n not in (1, 2, 3):
        raise ValidationError("calibration covers n in {1,2,3}")
    if n in _OMEGA_CACHE:
        return _OMEGA_CACHE[n]
    file_cache = _load_file_cache()
    if n in file_cache:
        _OMEGA_CACHE[n] = file_cache[n]
        return file_cache[n]

    from .fields import gaussian_bump

    u = gaussian_bump(n)
    x = np.zeros(n)
    target = 2.0 * n
    candidates = [
        ("sphere", sphere_surface(n)),
        ("ball", ball_volume(n)),
    ]
    best = None
    for _name, w in candidates:
        rep = sweep_alpha(u, exponential_scaled(), x, omega=w)
        rel = abs(rep.extrapolated_limit - target) / target
        if best is None or rel < best[1]:
            best = (w, rel)
        if rel <= tolerance:
            _OMEGA_CACHE[n] = w
            file_cache[n] = w
            _store_file_cache(file_cache)
            return w
    if best is not None and best[1] <= 0.05:
        _OMEGA_CACHE[n] = best[0]
        file_cache[n] = best[0]
        _store_file_cache(file_cache)
        return best[0]
    raise NonConvergenceError(
        "neither sphere-surface nor ball-volume measure reproduces the "
        f"Laplacian limit for n={n} (best rel error {best[1]:.3f})"
    )


def inner_ball_ratio(
    u: Field,
    x,
    eps: float,
    alpha: float = 1.99,
    omega: Optional[float] = None,
) -> Tuple[float, float]:
    """Scaled inner-ball contribution divided by -Laplacian u(x).

    Near the limit the whole operator localizes to the inner ball and the
    Gaussian kernel weight pins the ratio inside [exp(-eps^2), 1]; returns
    (ratio, quadrature error share)."""
    if u.grid is not None:
        raise ValidationError("inner-ball ratio needs a smooth field")
    x = np.asarray(x, dtype=float).reshape(-1)
    pref = 4.0 * u.dim / (omega if omega is not None else calibrate_omega_n(u.dim))
    spec = KernelSpec(EXPONENTIAL, u.dim, alpha)
    res = eval_LK(u, spec, x, QuadratureConfig(eps_inner=eps))
    denom = -float(np.trace(np.asarray(u.hessian(x), dtype=float)))
    if denom == 0.0:
        raise ValidationError("reference Laplacian vanishes at this point")
    return pref * res.inner_contribution / denom, pref * res.err_estimate / abs(denom)
