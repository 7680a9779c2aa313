"""Brute-force Gaussian-random-field oracle.

Periodic stationary fields are synthesized exactly by circulant embedding:
the wrapped kernel's DFT gives the mode variances, white noise is filtered
in the frequency domain, and the planar mean (z) is added analytically at
query time.  Everything here is desk-scale reference machinery for
validating the closed-form medium, not a production path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import dot, normalize, reflect
from .errors import ConfigError, ParameterDomainError
from .medium import fresnel_conductor
from .ndf import KernelParams

_HIT_BISECTIONS = 30


@dataclass(frozen=True)
class GridSpec:
    """Cubic periodic grid: n cells per axis, world spacing per cell,
    centered on the origin."""

    n: int
    spacing: float

    @property
    def extent(self):
        return self.n * self.spacing

    @property
    def origin(self):
        return -0.5 * self.extent


def default_grid(kernel: KernelParams, factor=8.5):
    """Smallest valid grid for the kernel: extent >= 8 * max(l), spacing
    <= min(l) / 4."""
    lmax = max(kernel.lx, kernel.ly, kernel.lz)
    lmin = min(kernel.lx, kernel.ly, kernel.lz)
    spacing = lmin / 4.0
    n = int(np.ceil(factor * lmax / spacing))
    n += n % 2
    return GridSpec(n=n, spacing=spacing)


def _validate_grid(kernel: KernelParams, spec: GridSpec):
    lmax = max(kernel.lx, kernel.ly, kernel.lz)
    lmin = min(kernel.lx, kernel.ly, kernel.lz)
    if spec.extent < 8.0 * lmax:
        raise ConfigError(
            f"grid extent {spec.extent:.4g} < 8 * max correlation {8*lmax:.4g}"
        )
    if spec.spacing > lmin / 4.0 + 1e-12:
        raise ConfigError(
            f"grid spacing {spec.spacing:.4g} > min correlation / 4 = {lmin/4:.4g}"
        )


@lru_cache(maxsize=8)
def _filter_sqrt(kernel: KernelParams, spec: GridSpec):
    # DFT eigenvalues of the wrapped squared-exponential covariance
    n, h = spec.n, spec.spacing
    lag = np.minimum(np.arange(n), n - np.arange(n)) * h
    ex = np.exp(-0.5 * (lag / kernel.lx) ** 2)
    ey = np.exp(-0.5 * (lag / kernel.ly) ** 2)
    ez = np.exp(-0.5 * (lag / kernel.lz) ** 2)
    cov = kernel.sigma**2 * ex[:, None, None] * ey[None, :, None] * ez[None, None, :]
    lam = np.fft.fftn(cov).real
    return np.sqrt(np.maximum(lam, 0.0))


@dataclass
class GpRealization:
    """One sampled field on a periodic grid; the planar mean is analytic."""

    grid: np.ndarray
    spec: GridSpec
    kernel: KernelParams
    mean: str  # "planar" (mu = z) or "zero"

    def _stationary_at(self, p):
        n, h = self.spec.n, self.spec.spacing
        u = (np.asarray(p, dtype=np.float64) - self.spec.origin) / h
        i0 = np.floor(u).astype(np.int64)
        t = u - i0
        g = self.grid.ravel()
        off = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1],
                        [1, 0, 0], [1, 0, 1], [1, 1, 0], [1, 1, 1]])
        acc = 0.0
        for ox, oy, oz in off:
            ix = (i0[..., 0] + ox) % n
            iy = (i0[..., 1] + oy) % n
            iz = (i0[..., 2] + oz) % n
            wgt = (
                (t[..., 0] if ox else 1.0 - t[..., 0])
                * (t[..., 1] if oy else 1.0 - t[..., 1])
                * (t[..., 2] if oz else 1.0 - t[..., 2])
            )
            acc = acc + wgt * g[(ix * n + iy) * n + iz]
        return acc

    def field_at(self, p):
        """Trilinear periodic interpolation plus the mean."""
        p = np.asarray(p, dtype=np.float64)
        base = self._stationary_at(p)
        if self.mean == "planar":
            return base + p[..., 2]
        return base

    def gradient_at(self, p):
        """Central differences of the interpolant (step = one cell)."""
        p = np.asarray(p, dtype=np.float64)
        h = self.spec.spacing
        g = np.empty(p.shape)
        for ax in range(3):
            e = np.zeros(3)
            e[ax] = h
            g[..., ax] = (self._stationary_at(p + e) - self._stationary_at(p - e)) / (
                2.0 * h
            )
        if self.mean == "planar":
            g[..., 2] += 1.0
        return g


def realize_gp(kernel: KernelParams, mean, spec: Optional[GridSpec], rng):
    """Draw one stationary field realization (frequency-domain filtering of
    white noise on the periodic grid) and bind the mean."""
    if mean not in ("planar", "zero"):
        raise ParameterDomainError(f"mean must be 'planar' or 'zero', got {mean!r}")
    if spec is None:
        spec = default_grid(kernel)
    _validate_grid(kernel, spec)
    n = spec.n
    white = rng.normal((n, n, n))
    field = np.fft.ifftn(np.fft.fftn(white) * _filter_sqrt(kernel, spec)).real
    return GpRealization(grid=field, spec=spec, kernel=kernel, mean=mean)


@dataclass
class FirstHit:
    """First zero crossings for a batch of rays (arrays over rays)."""

    hit: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    travel: np.ndarray


def first_hit(real: GpRealization, origins, directions, t_max):
    """Fixed-step march (min(l)/8) detecting the first sign change of the
    interpolated field, refined by bisection; the normal is the normalized
    central-difference gradient at the crossing."""
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    n_rays = origins.shape[0]
    k = real.kernel
    step = min(k.lx, k.ly, k.lz) / 8.0

    t_prev = np.zeros(n_rays)
    f_prev = real.field_at(origins)
    t_lo = np.full(n_rays, np.nan)
    t_hi = np.full(n_rays, np.nan)
    found = np.zeros(n_rays, dtype=bool)
    t = step
    while t <= t_max + step:
        live = ~found
        if not np.any(live):
            break
        p = origins[live] + t * directions[live]
        f = real.field_at(p)
        crossed = np.signbit(f) != np.signbit(f_prev[live])
        rows = np.flatnonzero(live)[crossed]
        t_lo[rows] = t_prev[rows]
        t_hi[rows] = t
        found[rows] = True
        f_prev[live] = f
        t_prev[live] = t
        t = t + step

    lo, hi = t_lo.copy(), t_hi.copy()
    if np.any(found):
        rows = np.flatnonzero(found)
        f_lo = real.field_at(origins[rows] + lo[rows, None] * directions[rows])
        for _ in range(_HIT_BISECTIONS):
            mid = 0.5 * (lo[rows] + hi[rows])
            fm = real.field_at(origins[rows] + mid[:, None] * directions[rows])
            same = np.signbit(fm) == np.signbit(f_lo)
            lo[rows] = np.where(same, mid, lo[rows])
            f_lo = np.where(same, fm, f_lo)
            hi[rows] = np.where(same, hi[rows], mid)

    travel = np.where(found, 0.5 * (lo + hi), np.inf)
    pos = origins + np.where(found, travel, 0.0)[:, None] * directions
    grad = real.gradient_at(pos)
    nr = np.linalg.norm(grad, axis=-1, keepdims=True)
    normal = grad / np.where(nr > 0.0, nr, 1.0)
    return FirstHit(hit=found, position=pos, normal=normal, travel=travel)


def empirical_transmittance(kernel, z0, theta, phi, t_grid, m_realizations, rng,
                            spec=None):
    """Fraction of realizations whose first crossing exceeds each t.

    Rays start at the fixed point (0, 0, z0) in every realization (the
    de-correlated comparison: the start is never re-conditioned on the
    surface).  Realizations whose start already lies inside the solid
    (f(x0) <= 0) carry no transmittance and are skipped; at z0 = 0 that is
    half of them, above the shell essentially none.  Returns rows of
    (t, Tr, std_error)."""
    if m_realizations < 64:
        raise ParameterDomainError("need at least 64 realizations")
    d = np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )
    o = np.array([0.0, 0.0, z0])
    t_grid = np.asarray(t_grid, dtype=np.float64)
    t_max = float(t_grid.max())
    crossings = []
    for i in range(m_realizations):
        real = realize_gp(kernel, "planar", spec, rng.derive(i))
        if real.field_at(o) <= 0.0:
            continue
        fh = first_hit(real, o[None, :], d[None, :], t_max)
        crossings.append(fh.travel[0])
    crossings = np.asarray(crossings)
    kept = len(crossings)
    rows = []
    for t in t_grid:
        p = float(np.mean(crossings > t))
        se = float(np.sqrt(max(p * (1.0 - p), 1e-12) / kept))
        rows.append((float(t), p, se))
    return rows


def empirical_vndf(kernel, wo, n_theta, n_phi, m_realizations, rng,
                   rays_per_realization=256, spec=None, z_start=None):
    """Histogram density of first-hit normals for parallel rays along wo.

    Raw hit counts already carry the projected-area weighting (a parallel
    beam hits a patch in proportion to its projected area), so no cosine
    re-weighting is applied.  Returns (hist (n_theta, n_phi), edges).
    Bins integrate to 1 after normalization.
    """
    wo = normalize(np.asarray(wo, dtype=np.float64))
    if spec is None:
        spec = default_grid(kernel)
    sigma = kernel.sigma
    if z_start is None:
        z_start = 5.0 * sigma
    # launch origins: random lateral offsets, pulled back along the ray so
    # every ray starts at z = z_start
    counts = np.zeros((n_theta, n_phi))
    t_max = (z_start + 4.0 * sigma) / max(1e-9, -wo[2]) if wo[2] < 0 else spec.extent
    for i in range(m_realizations):
        r = rng.derive(i)
        real = realize_gp(kernel, "planar", spec, r)
        lat = r.uniform((rays_per_realization, 2)) * spec.extent
        o = np.stack(
            [lat[:, 0], lat[:, 1], np.full(rays_per_realization, z_start)], axis=-1
        )
        fh = first_hit(real, o, np.broadcast_to(wo, o.shape), t_max)
        nm = fh.normal[fh.hit]
        th = np.arccos(np.clip(nm[:, 2], -1.0, 1.0))
        ph = np.mod(np.arctan2(nm[:, 1], nm[:, 0]), 2.0 * np.pi)
        h, _, _ = np.histogram2d(
            th, ph, bins=[n_theta, n_phi], range=[[0.0, np.pi], [0.0, 2.0 * np.pi]]
        )
        counts += h
    te = np.linspace(0.0, np.pi, n_theta + 1)
    pe = np.linspace(0.0, 2.0 * np.pi, n_phi + 1)
    solid = np.outer(np.cos(te[:-1]) - np.cos(te[1:]), np.diff(pe))
    total = counts.sum()
    dens = counts / (max(total, 1.0) * solid)
    return dens, (te, pe)


def multiplicativity_probe(kernel, origin, direction, split_t, t_end, m_realizations,
                           rng, spec=None, n_boot=1000):
    """Transmittance multiplicativity on shared realizations.

    Estimates Tr over (0, t_end], (0, split_t] and (split_t, t_end] (the
    sub-ray restarted at the split point, unconditioned) and the gap
    |Tr_xy - Tr_xz * Tr_zy| with a bootstrap standard error.
    """
    if m_realizations < 256:
        raise ParameterDomainError("need at least 256 realizations")
    o = np.asarray(origin, dtype=np.float64)
    d = normalize(np.asarray(direction, dtype=np.float64))
    o2 = o + split_t * d
    clear_a = np.empty(m_realizations, dtype=bool)
    clear_b = np.empty(m_realizations, dtype=bool)
    valid_a = np.empty(m_realizations, dtype=bool)
    valid_b = np.empty(m_realizations, dtype=bool)
    for i in range(m_realizations):
        real = realize_gp(kernel, "planar", spec, rng.derive(i))
        valid_a[i] = real.field_at(o) > 0.0
        valid_b[i] = real.field_at(o2) > 0.0
        fh_a = first_hit(real, o[None, :], d[None, :], split_t)
        fh_b = first_hit(real, o2[None, :], d[None, :], t_end - split_t)
        clear_a[i] = not fh_a.hit[0]
        clear_b[i] = not fh_b.hit[0]

    def stats(a, b, va, vb):
        # each segment transmittance conditions on its own start lying
        # outside the solid, matching empirical_transmittance
        xz = np.sum(a & va) / max(np.sum(va), 1)
        zy = np.sum(b & vb) / max(np.sum(vb), 1)
        xy = np.sum(a & b & va) / max(np.sum(va), 1)
        return xy, xz, zy

    tr_xy, tr_xz, tr_zy = stats(clear_a, clear_b, valid_a, valid_b)
    gap = abs(tr_xy - tr_xz * tr_zy)

    boot = rng.derive(0xB007)
    idx = (boot.uniform((n_boot, m_realizations)) * m_realizations).astype(np.int64)
    gaps = np.empty(n_boot)
    for k in range(n_boot):
        xy, xz, zy = stats(clear_a[idx[k]], clear_b[idx[k]], valid_a[idx[k]], valid_b[idx[k]])
        gaps[k] = abs(xy - xz * zy)
    se = float(np.std(gaps, ddof=1))
    return float(tr_xy), float(tr_xz), float(tr_zy), gap, se


def ensemble_radiance(kernel, camera, spp, m_realizations, rng, env_radiance=1.0,
                      fresnel=None, max_bounces=64, spec=None):
    """Ensemble-averaged radiance of a planar statistical surface patch.

    Each sample round uses one fresh realization shared by all pixels
    (per-pixel means stay unbiased); paths reflect specularly off
    first-hit normals until they escape upward, then gather the constant
    environment.  fresnel None means F = 1 (energy-conservation mode),
    otherwise (eta, k) tuples of 3 channels.
    """
    w, h = camera.width, camera.height
    if w * h > 64 * 64:
        raise ConfigError("ensemble radiance is desk-scale only (<= 64x64 pixels)")
    if m_realizations > 4096:
        raise ConfigError("realization cap is 4096")
    if spec is None:
        spec = default_grid(kernel)
    sigma = kernel.sigma
    img = np.zeros((h, w, 3))
    n_rounds = max(int(spp), 1)
    for s in range(n_rounds):
        r = rng.derive(s)
        real = realize_gp(kernel, "planar", spec, r.derive(1))
        yy, xx = np.mgrid[0:h, 0:w]
        jx = r.uniform((h, w))
        jy = r.uniform((h, w))
        o, d = camera.rays(xx, yy, jx, jy)
        o = o.reshape(-1, 3).copy()
        d = d.reshape(-1, 3).copy()
        n_rays = o.shape[0]
        throughput = np.ones((n_rays, 3))
        rad = np.zeros((n_rays, 3))
        alive = np.ones(n_rays, dtype=bool)
        eps = real.spec.spacing * 0.25
        for _ in range(max_bounces):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            up = d[idx, 2] > 0.0
            abv = real.field_at(o[idx]) > 4.0 * sigma
            esc = idx[up & abv]
            rad[esc] += throughput[esc] * env_radiance
            alive[esc] = False
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            t_cap = (6.0 * sigma + np.abs(o[idx, 2])) / np.maximum(np.abs(d[idx, 2]), 0.05)
            fh = first_hit(real, o[idx], d[idx], float(np.max(t_cap)))
            miss = idx[~fh.hit]
            rad[miss] += throughput[miss] * env_radiance
            alive[miss] = False
            rows = idx[fh.hit]
            if rows.size == 0:
                break
            nm = fh.normal[fh.hit]
            vin = d[rows]
            cos_i = np.abs(dot(-vin, nm))
            if fresnel is not None:
                eta, k = fresnel
                throughput[rows] *= fresnel_conductor(
                    cos_i[:, None], np.asarray(eta), np.asarray(k)
                )
            d[rows] = reflect(-vin, nm)
            o[rows] = fh.position[fh.hit] + eps * d[rows]
        img += rad.reshape(h, w, 3)
    return img / n_rounds
