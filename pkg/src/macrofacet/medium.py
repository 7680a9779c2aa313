"""The macrofacet medium: pointwise physics of the shell volume.

A base surface with signed-distance field f and field std-dev sigma is
stretched into a shell of half-width 3*sigma.  Inside it, microflake
density rho(f) and the direction-dependent projected area combine into a
classic exponential extinction coefficient; scattering is specular
reflection off visible flake normals weighted by a conductor Fresnel
term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Frame, dot, gauss_cdf, gauss_pdf, log_gauss_cdf, normalize
from .errors import ParameterDomainError, UnsupportedGeometryError
from .ndf import (
    NdfKind,
    RoughnessTriple,
    _projected_area_erf,
    _vndf_sample_u,
    projected_area_dir,
    vndf_eval,
)

# gold-like conductor, an aesthetic default rather than measured data
DEFAULT_ETA = (0.2, 0.92, 1.1)
DEFAULT_K = (3.9, 2.45, 2.14)

_DENSITY_SERIES_CUT = -36.0  # below this u = f/sigma, Phi underflows; use the series


@dataclass(frozen=True)
class MacrofacetMedium:
    """Appearance parameters of one shell volume.

    The shell half-width is always 3 * sigma.  For kind BECKMANN or GGX the
    z roughness is treated as zero (height field); GENERALIZED requires
    az > 0.  fresnel_one switches the Fresnel term to exactly 1 for
    energy-conservation studies.
    """

    kind: NdfKind
    a3: RoughnessTriple
    sigma: float
    fresnel_eta: tuple = DEFAULT_ETA
    fresnel_k: tuple = DEFAULT_K
    mix_ratio: float = 0.5
    fresnel_one: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0.0):
            raise ParameterDomainError(f"sigma must be finite and > 0, got {self.sigma}")
        if not (0.0 <= self.mix_ratio <= 1.0):
            raise ParameterDomainError(f"mix_ratio must lie in [0, 1], got {self.mix_ratio}")
        if self.kind is NdfKind.GENERALIZED and self.a3.az <= 0.0:
            raise ParameterDomainError("GENERALIZED medium requires az > 0")
        if self.kind is not NdfKind.GENERALIZED and self.a3.az != 0.0:
            object.__setattr__(self, "a3", RoughnessTriple(self.a3.ax, self.a3.ay, 0.0))
        object.__setattr__(self, "fresnel_eta", tuple(float(v) for v in self.fresnel_eta))
        object.__setattr__(self, "fresnel_k", tuple(float(v) for v in self.fresnel_k))

    @property
    def shell_half_width(self):
        return 3.0 * self.sigma


def density(f, sigma):
    """Microflake density per unit length of field descent:
    pdf(f) / cdf(f) of the centered Gaussian with std-dev sigma.

    Monotone decreasing; deep below the surface (u = f/sigma << -1) the
    exact ratio underflows, so the inverse-Mills asymptotic series takes
    over (rho ~ -f/sigma^2 to leading order).
    """
    sigma = float(sigma)
    if not sigma > 0.0:
        raise ParameterDomainError(f"sigma must be > 0, got {sigma}")
    u = np.asarray(f, dtype=np.float64) / sigma
    safe = np.maximum(u, _DENSITY_SERIES_CUT)
    var = 1.0
    exact = gauss_pdf(safe, 0.0, var) / gauss_cdf(safe, 0.0, var)
    with np.errstate(divide="ignore"):
        iu2 = 1.0 / np.where(u < _DENSITY_SERIES_CUT, u * u, np.inf)
    series = -u / (1.0 - iu2 * (1.0 - iu2 * (3.0 - iu2 * (15.0 - 105.0 * iu2))))
    return (np.where(u < _DENSITY_SERIES_CUT, series, exact) / sigma)[()]


def extinction(wo, f, medium: MacrofacetMedium, local_frame: Frame):
    """Extinction coefficient rho(f) * sigma(wo), with wo measured against
    the local frame (normal = normalized base-field gradient)."""
    wo_local = local_frame.to_local(wo)
    return density(f, medium.sigma) * projected_area_dir(wo_local, medium.kind, medium.a3)


def planar_transmittance(h0, h1, theta, phi, medium: MacrofacetMedium):
    """Closed-form transmittance between field values h0 and h1 on a flat
    shell, for travel direction (theta, phi): the line integral of the
    extinction collapses to (cdf(h1)/cdf(h0)) ** (-Lambda).

    Horizontal rays (cos(theta) = 0) never change h and are not covered;
    use the stochastic estimator for those.
    """
    theta = np.asarray(theta, dtype=np.float64)
    cos_t = np.cos(theta)
    if np.any(np.abs(cos_t) < 1e-12):
        raise UnsupportedGeometryError("planar transmittance is undefined at cos(theta) = 0")
    a3 = medium.a3
    if medium.kind is NdfKind.GGX:
        raise UnsupportedGeometryError("closed-form transmittance covers the erf-family lambda only")
    if medium.kind is NdfKind.BECKMANN:
        a3 = RoughnessTriple(a3.ax, a3.ay, 0.0)
    w = np.stack(
        np.broadcast_arrays(
            np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), cos_t
        ),
        axis=-1,
    )
    lam = _projected_area_erf(w, a3) / cos_t
    var = medium.sigma**2
    dlog = log_gauss_cdf(h1, 0.0, var) - log_gauss_cdf(h0, 0.0, var)
    return np.exp(-lam * dlog)[()]


def fresnel_conductor(cos_i, eta, k):
    """Unpolarized conductor Fresnel reflectance (mean of s and p)."""
    c = np.clip(np.asarray(cos_i, dtype=np.float64), 0.0, 1.0)
    eta = np.asarray(eta, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    c2 = c * c
    s2 = 1.0 - c2
    t0 = eta * eta - k * k - s2
    a2b2 = np.sqrt(np.maximum(t0 * t0 + 4.0 * eta * eta * k * k, 0.0))
    t1 = a2b2 + c2
    a = np.sqrt(np.maximum(0.5 * (a2b2 + t0), 0.0))
    t2 = 2.0 * a * c
    # t1 + t2 vanishes only for the index-matched grazing corner, where the
    # reflectance is identically zero
    denom = t1 + t2
    ok = denom > 0.0
    rs = np.where(ok, (t1 - t2) / np.where(ok, denom, 1.0), 0.0)
    t3 = c2 * a2b2 + s2 * s2
    t4 = t2 * s2
    rp = rs * (t3 - t4) / np.where(t3 + t4 > 0.0, t3 + t4, 1.0)
    return (0.5 * (rs + rp))[()]


def _fresnel_rgb(medium: MacrofacetMedium, cos_i):
    if medium.fresnel_one:
        return np.ones(np.shape(cos_i) + (3,))
    eta = np.asarray(medium.fresnel_eta)
    k = np.asarray(medium.fresnel_k)
    return fresnel_conductor(np.asarray(cos_i)[..., None], eta, k)


def phase_eval(wo, wi, medium: MacrofacetMedium, local_frame: Frame):
    """Conductor phase function per steradian (3 channels).

    wo is the propagation direction of the traced ray, wi the scattered
    direction; the half vector sits between -wo and wi.  Degenerate half
    vectors (wi == wo) scatter nothing.
    """
    wo_local = local_frame.to_local(wo)
    v = -wo_local
    h = v + local_frame.to_local(wi)
    hn = np.linalg.norm(h, axis=-1)
    ok = hn > 1e-12
    # degenerate half vectors are masked out below; the placeholder only
    # keeps the density evaluation finite
    h = np.where(ok[..., None], h, np.array([0.0, 0.0, 1.0])) / np.where(
        ok[..., None], hn[..., None], 1.0
    )
    vh = np.abs(dot(v, h))
    dv = vndf_eval(h, wo_local, medium.kind, medium.a3)
    val = np.where(ok & (vh > 1e-12), dv / np.where(vh > 0, 4.0 * vh, 1.0), 0.0)
    return val[..., None] * _fresnel_rgb(medium, vh)


def _phase_sample_u(wo_local, medium: MacrofacetMedium, u):
    """Sample a scattered direction in the local frame from uniforms
    u[..., 0:3]; returns (wi_local, pdf, per-channel weight)."""
    v = -np.asarray(wo_local, dtype=np.float64)
    wm, pdf_m = _vndf_sample_u(wo_local, medium.a3, medium.mix_ratio, u)
    vh = dot(v, wm)
    wi = 2.0 * vh[..., None] * wm - v
    ok = vh > 1e-12
    pdf = np.where(ok, pdf_m / np.where(ok, 4.0 * vh, 1.0), 0.0)
    dv = vndf_eval(wm, wo_local, medium.kind, medium.a3)
    ratio = np.where(pdf > 0.0, dv / np.where(pdf_m > 0.0, pdf_m, 1.0), 0.0)
    weight = ratio[..., None] * _fresnel_rgb(medium, np.abs(vh))
    return wi, pdf, weight


def phase_sample(wo, medium: MacrofacetMedium, local_frame: Frame, rng, n=None):
    """Draw a scattered direction: a visible normal is sampled, the view
    reflected about it; pdf includes the half-vector measure change and
    weight = phase_eval / pdf (finite, non-negative, per channel)."""
    wo = np.asarray(wo, dtype=np.float64)
    wo_local = local_frame.to_local(wo)
    shape = wo_local.shape[:-1] if n is None else (n,)
    u = rng.uniform(shape + (3,))
    if n is not None and wo_local.ndim == 1:
        wo_local = np.broadcast_to(wo_local, (n, 3))
    wi_l, pdf, weight = _phase_sample_u(wo_local, medium, u)
    return local_frame.to_world(wi_l), pdf, weight
