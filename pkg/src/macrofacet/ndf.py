"""Normal-distribution machinery for statistical surfaces.

A squared-exponential random field with std-dev sigma and per-axis
correlation lengths (lx, ly, lz) induces slope roughness
alpha_i = sqrt(2) * sigma / l_i.  The height-field limit is az = 0
(lz -> infinity), where the classic anisotropic Beckmann model applies;
for az > 0 the surface grows holes and overhangs and its normals cover
the full sphere, handled by the generalized distribution below.

Direction convention: `wo` is always the propagation direction of the
traced ray, so visibility weights use v = -wo.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from .core import SQRT_PI, TWO_PI, build_frame, dot, erf, erfc, normalize
from .errors import (
    DegenerateVisibilityError,
    GrazingSingularityError,
    NumericFailureError,
    ParameterDomainError,
)

_PI_32 = np.pi ** 1.5


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel statistics: field std-dev and correlation
    lengths, all in world length units."""

    sigma: float
    lx: float
    ly: float
    lz: float

    def __post_init__(self):
        for name in ("sigma", "lx", "ly", "lz"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0.0):
                raise ParameterDomainError(f"KernelParams.{name} must be finite and > 0, got {v}")


@dataclass(frozen=True)
class RoughnessTriple:
    """Unitless slope roughness per axis; az = 0 encodes the height-field
    limit."""

    ax: float
    ay: float
    az: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.ax) and self.ax > 0.0):
            raise ParameterDomainError(f"ax must be finite and > 0, got {self.ax}")
        if not (np.isfinite(self.ay) and self.ay > 0.0):
            raise ParameterDomainError(f"ay must be finite and > 0, got {self.ay}")
        if not (np.isfinite(self.az) and self.az >= 0.0):
            raise ParameterDomainError(f"az must be finite and >= 0, got {self.az}")


class NdfKind(enum.Enum):
    BECKMANN = "beckmann"
    GGX = "ggx"
    GENERALIZED = "generalized"


def roughness_from_kernel(kernel: KernelParams) -> RoughnessTriple:
    """Per-axis roughness sqrt(2)*sigma/l of the kernel."""
    s = np.sqrt(2.0) * kernel.sigma
    return RoughnessTriple(s / kernel.lx, s / kernel.ly, s / kernel.lz)


# ---------------------------------------------------------------------------
# height-field distributions


def beckmann_ndf(wm, ax, ay):
    """Anisotropic Beckmann density per projected solid angle; zero below
    the horizon."""
    wm = np.asarray(wm, dtype=np.float64)
    z = wm[..., 2]
    up = z > 0.0
    z2 = np.where(up, z * z, 1.0)
    e = (wm[..., 0] / ax) ** 2 + (wm[..., 1] / ay) ** 2
    d = np.exp(-e / z2) / (np.pi * ax * ay * z2 * z2)
    return np.where(up, d, 0.0)[()]


def ggx_ndf(wm, ax, ay):
    """Anisotropic Trowbridge-Reitz density; zero below the horizon."""
    wm = np.asarray(wm, dtype=np.float64)
    z = wm[..., 2]
    up = z > 0.0
    t = (wm[..., 0] / ax) ** 2 + (wm[..., 1] / ay) ** 2 + np.where(up, z * z, 1.0)
    return np.where(up, 1.0 / (np.pi * ax * ay * t * t), 0.0)[()]


# ---------------------------------------------------------------------------
# generalized Smith Lambda and projected area


def _aniso_components(w, a3: RoughnessTriple):
    # s = sqrt(ax^2 wx^2 + ay^2 wy^2 + az^2 wz^2), the direction-dependent
    # slope scale; a = wz / s
    w = np.asarray(w, dtype=np.float64)
    s = np.sqrt(
        (a3.ax * w[..., 0]) ** 2 + (a3.ay * w[..., 1]) ** 2 + (a3.az * w[..., 2]) ** 2
    )
    return s, w[..., 2]


def _lambda_of_a(a):
    # (erf(a) - 1)/2 written through erfc so the a >> 1 tail keeps
    # relative accuracy instead of rounding to zero
    return np.exp(-a * a) / (2.0 * a * SQRT_PI) - 0.5 * erfc(a)


def generalized_lambda_dir(w, a3: RoughnessTriple):
    """Smith Lambda for a unit propagation direction array."""
    s, z = _aniso_components(w, a3)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(s > 0.0, z / np.where(s > 0.0, s, 1.0), np.inf * np.sign(z))
    if np.any(np.abs(a) < 1e-9):
        raise GrazingSingularityError(
            "Lambda is singular at grazing (|a| < 1e-9); use projected_area"
        )
    return _lambda_of_a(a)[()]


def generalized_lambda(theta, phi, a3: RoughnessTriple):
    """Smith Lambda of the statistical surface for a direction (theta, phi).

    Diverges at exactly grazing directions (a -> 0); use projected_area
    there, which re-associates Lambda*cos(theta) into a finite form.
    """
    return generalized_lambda_dir(_sph_dir(theta, phi), a3)


def _sph_dir(theta, phi):
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    st = np.sin(theta)
    return np.stack(
        np.broadcast_arrays(st * np.cos(phi), st * np.sin(phi), np.cos(theta)), axis=-1
    )


def _projected_area_erf(w, a3: RoughnessTriple):
    # stable re-association of Lambda(w) * cos(theta); finite and continuous
    # across the horizon, >= 0 for every direction
    s, z = _aniso_components(w, a3)
    pos = s > 0.0
    a = np.where(pos, z / np.where(pos, s, 1.0), np.where(z >= 0.0, np.inf, -np.inf))
    ea2 = np.where(np.isfinite(a), np.exp(-a * a), 0.0)
    sigma = s * ea2 / (2.0 * SQRT_PI) - 0.5 * z * erfc(a)
    return np.maximum(sigma, 0.0)


def _projected_area_ggx(w, ax, ay):
    w = np.asarray(w, dtype=np.float64)
    z = w[..., 2]
    t = np.sqrt(z * z + (ax * w[..., 0]) ** 2 + (ay * w[..., 1]) ** 2)
    return 0.5 * (t - z)


def projected_area(theta, phi, a3: RoughnessTriple):
    """Projected blocker area sigma(w) = Lambda(w) cos(theta), evaluated in
    the algebraically stable form (total, including exactly grazing)."""
    return _projected_area_erf(_sph_dir(theta, phi), a3)[()]


def projected_area_dir(wo, kind: NdfKind, a3: RoughnessTriple):
    """sigma(wo) for a propagation direction array, dispatched on NDF kind."""
    if kind is NdfKind.GGX:
        return _projected_area_ggx(wo, a3.ax, a3.ay)[()]
    if kind is NdfKind.BECKMANN:
        a3 = RoughnessTriple(a3.ax, a3.ay, 0.0)
    return _projected_area_erf(np.asarray(wo, dtype=np.float64), a3)[()]


def projected_area_bound(kind: NdfKind, a3: RoughnessTriple) -> float:
    """Safe upper bound of sigma(w) over all directions (for majorants)."""
    if kind is NdfKind.GGX:
        return 0.5 * (max(1.0, a3.ax, a3.ay) + 1.0)
    az = a3.az if kind is NdfKind.GENERALIZED else 0.0
    return np.sqrt(a3.ax**2 + a3.ay**2 + az**2) / (2.0 * SQRT_PI) + 1.0


# ---------------------------------------------------------------------------
# generalized (full-sphere) NDF


def _abc(wm, a3: RoughnessTriple):
    wm = np.asarray(wm, dtype=np.float64)
    a = (wm[..., 0] / a3.ax) ** 2 + (wm[..., 1] / a3.ay) ** 2 + (wm[..., 2] / a3.az) ** 2
    b = wm[..., 2] / a3.az**2
    c = 1.0 / a3.az**2
    return a, b, c


def generalized_ndf_dir(wm, a3: RoughnessTriple):
    """Full-sphere normal density for az > 0, direction-array form."""
    if a3.az <= 0.0:
        raise ParameterDomainError("generalized NDF requires az > 0; use beckmann_ndf for az = 0")
    a, b, c = _abc(wm, a3)
    b2a = b * b / a
    # both exponents are <= 0 (a*c >= b^2), so nothing here can overflow
    term1 = np.exp(-c) * (b2a + 1.0) / (2.0 * a * a)
    term2 = (
        np.exp(b2a - c)
        * (b * SQRT_PI / (2.0 * a**2.5))
        * (b2a + 1.5)
        * erfc(-b / np.sqrt(a))
    )
    d = (term1 + term2) / (_PI_32 * a3.ax * a3.ay * a3.az)
    return np.maximum(d, 0.0)[()]


def generalized_ndf(theta_m, phi_m, a3: RoughnessTriple):
    """Full-sphere normal density at spherical angles (theta_m, phi_m)."""
    return generalized_ndf_dir(_sph_dir(theta_m, phi_m), a3)


def gdf_pdf(g, a3: RoughnessTriple):
    """Density of the surface gradient conditioned on a zero crossing:
    Gaussian with mean (0,0,1) and per-axis variances alpha_i^2 / 2."""
    if a3.az <= 0.0:
        raise ParameterDomainError("gdf_pdf requires az > 0")
    g = np.asarray(g, dtype=np.float64)
    e = (g[..., 0] / a3.ax) ** 2 + (g[..., 1] / a3.ay) ** 2 + ((g[..., 2] - 1.0) / a3.az) ** 2
    return (np.exp(-e) / (_PI_32 * a3.ax * a3.ay * a3.az))[()]


def sample_gdf(a3: RoughnessTriple, rng, n: int):
    """Draw n gradients from the conditioned gradient distribution."""
    z = rng.normal((n, 3))
    scale = np.array([a3.ax, a3.ay, a3.az]) / np.sqrt(2.0)
    return z * scale + np.array([0.0, 0.0, 1.0])


@lru_cache(maxsize=8)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def ndf_from_gdf_quadrature(theta_m, phi_m, a3: RoughnessTriple, rel_tol=1e-8):
    """Radial quadrature of the gradient distribution: integrates
    t^3 * gdf(t * wm) over t in (0, inf).

    This is the independent oracle for generalized_ndf; adaptive
    Gauss-Legendre with interval doubling until the relative change drops
    below rel_tol, truncated where the Gaussian factor is below 1e-14 of
    its peak.
    """
    if a3.az <= 0.0:
        raise ParameterDomainError("quadrature requires az > 0")
    wm = _sph_dir(theta_m, phi_m)
    if wm.ndim != 1:
        raise ParameterDomainError("quadrature evaluates one direction at a time")
    a, b, c = _abc(wm, a3)
    a, b, c = float(a), float(b), float(c)
    t_peak = max(b / a, 0.0)
    # exponent drops by >= 37 (ln 1e-14 plus margin for the t^3 factor)
    t_max = t_peak + np.sqrt(44.0 / a)
    shift = b * b / a - c if b > 0.0 else -c  # peak log of the Gaussian factor

    nodes, weights = _leggauss(32)
    prev = None
    for n_sub in (1, 2, 4, 8, 16, 32, 64, 128):
        edges = np.linspace(0.0, t_max, n_sub + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        half = 0.5 * (edges[1] - edges[0])
        t = mid + half * nodes[None, :]
        # factor the peak out of the exponent so tiny densities integrate
        # with full relative accuracy
        f = t**3 * np.exp(-(a * t * t - 2.0 * b * t + c) - shift)
        total = float(np.sum(f * weights[None, :]) * half)
        if prev is not None and abs(total - prev) <= rel_tol * abs(total):
            return total * np.exp(shift) / (_PI_32 * a3.ax * a3.ay * a3.az)
        prev = total
    raise NumericFailureError(
        f"radial NDF quadrature did not converge (theta={theta_m}, phi={phi_m}, "
        f"alpha=({a3.ax},{a3.ay},{a3.az}), last={prev})"
    )


# ---------------------------------------------------------------------------
# visible-normal distribution


def _ndf_dispatch(wm, kind: NdfKind, a3: RoughnessTriple):
    if kind is NdfKind.BECKMANN:
        return beckmann_ndf(wm, a3.ax, a3.ay)
    if kind is NdfKind.GGX:
        return ggx_ndf(wm, a3.ax, a3.ay)
    return generalized_ndf_dir(wm, a3)


def vndf_eval(wm, wo, kind: NdfKind, a3: RoughnessTriple):
    """Visible-normal density toward -wo: <-wo, wm> D(wm) / sigma(wo)."""
    wm = np.asarray(wm, dtype=np.float64)
    wo = np.asarray(wo, dtype=np.float64)
    sigma = projected_area_dir(wo, kind, a3)
    if np.any(np.asarray(sigma) < 1e-12):
        raise DegenerateVisibilityError("projected area is numerically zero toward wo")
    cos_v = np.maximum(dot(-wo, wm), 0.0)
    return (cos_v * _ndf_dispatch(wm, kind, a3) / sigma)[()]


def _sample_visible_slope_11(cos_theta, sin_theta, u1, u2):
    # visible slopes of the unit-roughness Beckmann surface from a view
    # with polar angle theta; marginal along the view azimuth is
    # proportional to (cos_theta - x sin_theta) e^{-x^2} on x <= cot(theta)
    cos_theta = np.asarray(cos_theta, dtype=np.float64)
    sin_theta = np.asarray(sin_theta, dtype=np.float64)
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)

    normal_inc = sin_theta < 1e-7
    safe_sin = np.where(normal_inc, 1.0, sin_theta)
    nu = cos_theta / safe_sin

    # 1 + erf(x) written as erfc(-x), relative-accurate for steep views
    g_top = cos_theta * (SQRT_PI / 2.0) * erfc(-nu) + 0.5 * sin_theta * np.exp(-nu * nu)
    target = u1 * g_top

    lo = np.minimum(nu, 0.0) - 9.0  # G(lo) < 2^-53 * G(nu) for any view
    hi = np.array(np.broadcast_to(nu, lo.shape), dtype=np.float64)
    x = 0.5 * (lo + hi)
    for _ in range(64):
        g = cos_theta * (SQRT_PI / 2.0) * erfc(-x) + 0.5 * sin_theta * np.exp(
            -x * x
        ) - target
        dg = (cos_theta - x * sin_theta) * np.exp(-x * x)
        hi = np.where(g > 0.0, x, hi)
        lo = np.where(g > 0.0, lo, x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xn = x - g / dg
        inside = np.isfinite(xn) & (xn > lo) & (xn < hi)
        x_next = np.where(inside, xn, 0.5 * (lo + hi))
        done = (hi - lo) <= 1e-14 * (1.0 + np.abs(hi))
        x = np.where(done, x, x_next)

    slope_x = np.where(normal_inc, np.sqrt(-np.log1p(-u1)) * np.cos(TWO_PI * u2), x)
    y_gauss = _sp.erfinv(2.0 * u2 - 1.0)
    slope_y = np.where(normal_inc, np.sqrt(-np.log1p(-u1)) * np.sin(TWO_PI * u2), y_gauss)
    return slope_x, slope_y


def sample_beckmann_vndf(v, ax, ay, u1, u2):
    """Sample a visible Beckmann normal for view vector v (any direction
    with positive projected area), via stretched slope space."""
    v = np.asarray(v, dtype=np.float64)
    vs = normalize(np.stack([ax * v[..., 0], ay * v[..., 1], v[..., 2]], axis=-1))
    cos_t = np.clip(vs[..., 2], -1.0, 1.0)
    sin_t = np.hypot(vs[..., 0], vs[..., 1])
    x11, y11 = _sample_visible_slope_11(cos_t, sin_t, u1, u2)
    azim = sin_t > 0.0
    inv = np.where(azim, sin_t, 1.0)
    cos_p = np.where(azim, vs[..., 0] / inv, 1.0)
    sin_p = np.where(azim, vs[..., 1] / inv, 0.0)
    sx = ax * (cos_p * x11 - sin_p * y11)
    sy = ay * (sin_p * x11 + cos_p * y11)
    return normalize(np.stack([-sx, -sy, np.ones_like(sx)], axis=-1))


def _uniform_hemisphere(axis, u1, u2):
    z = np.asarray(u1, dtype=np.float64)
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    phi = TWO_PI * np.asarray(u2, dtype=np.float64)
    local = np.stack(np.broadcast_arrays(r * np.cos(phi), r * np.sin(phi), z), axis=-1)
    return build_frame(axis).to_world(local)


def _vndf_sample_u(wo, a3: RoughnessTriple, mix_ratio, u):
    """Mixture sampling from pre-drawn uniforms u[..., 0:3]."""
    wo = np.asarray(wo, dtype=np.float64)
    v = -wo
    sigma_b = projected_area_dir(wo, NdfKind.BECKMANN, a3)
    # a view with no visible height-field normals cannot feed the guided
    # component; those (measure-zero) calls fall back to the uniform branch
    guided_ok = np.asarray(sigma_b) > 1e-12
    take_beck = (u[..., 0] < mix_ratio) & guided_ok

    wm_b = sample_beckmann_vndf(v, a3.ax, a3.ay, u[..., 1], u[..., 2])
    wm_u = _uniform_hemisphere(v, u[..., 1], u[..., 2])
    wm = np.where(take_beck[..., None], wm_b, wm_u)

    cos_v = np.maximum(dot(v, wm), 0.0)
    p_beck = np.where(
        guided_ok,
        cos_v * beckmann_ndf(wm, a3.ax, a3.ay) / np.where(guided_ok, sigma_b, 1.0),
        0.0,
    )
    p_unif = np.where(dot(v, wm) > 0.0, 1.0 / TWO_PI, 0.0)
    ratio = np.where(guided_ok, mix_ratio, 0.0)
    pdf = ratio * p_beck + (1.0 - ratio) * p_unif
    return wm, pdf[()]


def vndf_sample(wo, kind: NdfKind, a3: RoughnessTriple, mix_ratio, rng, n=None):
    """Draw visible normals for propagation direction wo.

    With probability mix_ratio the height-field Beckmann visible-normal
    sampler (roughness (ax, ay)) proposes, otherwise the uniform hemisphere
    about -wo; the returned pdf is the exact mixture density at the sample,
    so vndf_eval / pdf is an unbiased weight.  Keep mix_ratio < 1 whenever
    az > 0, since only the uniform component covers downward normals.
    """
    if not (0.0 <= mix_ratio <= 1.0):
        raise ParameterDomainError(f"mix_ratio must lie in [0, 1], got {mix_ratio}")
    wo = np.asarray(wo, dtype=np.float64)
    if np.any(np.asarray(projected_area_dir(wo, kind, a3)) <= 0.0):
        raise DegenerateVisibilityError("projected area is zero toward wo")
    shape = wo.shape[:-1] if n is None else (n,)
    u = rng.uniform(shape + (3,))
    if n is not None and wo.ndim == 1:
        wo = np.broadcast_to(wo, (n, 3))
    return _vndf_sample_u(wo, a3, mix_ratio, u)
