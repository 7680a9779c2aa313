"""Renderable world: shell-extruded primitives, camera and lights."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import normalize
from .errors import ConfigError, NumericFailureError
from .medium import MacrofacetMedium
from .sdf import surface_distance

_MARCH_EPS = 1e-7
_MARCH_MAX_STEPS = 100000


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; y of the image maps to world up unless looking
    straight down an axis."""

    position: tuple
    look_at: tuple
    fov_deg: float
    width: int
    height: int

    def rays(self, px, py, jitter_x, jitter_y):
        """Rays through pixel centers (px, py) with sub-pixel jitter in
        [0, 1); arrays broadcast together."""
        pos = np.asarray(self.position, dtype=np.float64)
        fwd = normalize(np.asarray(self.look_at, dtype=np.float64) - pos)
        up = np.array([0.0, 0.0, 1.0])
        if abs(fwd @ up) > 0.999:
            up = np.array([0.0, 1.0, 0.0])
        right = normalize(np.cross(fwd, up))
        true_up = np.cross(right, fwd)
        half_h = np.tan(0.5 * np.deg2rad(self.fov_deg))
        half_w = half_h * self.width / self.height
        ndc_x = ((px + jitter_x) / self.width) * 2.0 - 1.0
        ndc_y = 1.0 - ((py + jitter_y) / self.height) * 2.0
        d = (
            fwd
            + ndc_x[..., None] * half_w * right
            + ndc_y[..., None] * half_h * true_up
        )
        d = normalize(d)
        o = np.broadcast_to(pos, d.shape)
        return o, d


@dataclass(frozen=True)
class Environment:
    """Environment light: constant radiance or a latitude-longitude map."""

    radiance: tuple = (1.0, 1.0, 1.0)
    latlong: Optional[np.ndarray] = None  # (H, W, 3) linear, theta down rows

    def eval(self, d):
        d = np.asarray(d, dtype=np.float64)
        if self.latlong is None:
            return np.broadcast_to(np.asarray(self.radiance), d.shape[:-1] + (3,))
        img = self.latlong
        h, w = img.shape[:2]
        theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2.0 * np.pi)
        fx = phi / (2.0 * np.pi) * w - 0.5
        fy = theta / np.pi * h - 0.5
        x0 = np.floor(fx).astype(int)
        y0 = np.floor(fy).astype(int)
        tx = fx - x0
        ty = fy - y0
        x0m, x1m = x0 % w, (x0 + 1) % w
        y0m = np.clip(y0, 0, h - 1)
        y1m = np.clip(y0 + 1, 0, h - 1)
        c = (
            img[y0m, x0m] * ((1 - tx) * (1 - ty))[..., None]
            + img[y0m, x1m] * (tx * (1 - ty))[..., None]
            + img[y1m, x0m] * ((1 - tx) * ty)[..., None]
            + img[y1m, x1m] * (tx * ty)[..., None]
        )
        return c


@dataclass(frozen=True)
class DirectionalLight:
    direction: tuple  # direction the light travels (unit, pointing away from the light)
    radiance: tuple

    def __post_init__(self):
        d = normalize(np.asarray(self.direction, dtype=np.float64))
        object.__setattr__(self, "direction", tuple(float(x) for x in d))
        object.__setattr__(self, "radiance", tuple(float(x) for x in self.radiance))


@dataclass(frozen=True)
class ShellPrimitive:
    sdf: object  # Plane | Sphere | Box
    medium: MacrofacetMedium


@dataclass(frozen=True)
class ShellScene:
    """Primitives with bound media, camera and lights.

    Shells of distinct primitives must not overlap: pairwise base-surface
    distance has to exceed the sum of the 3-sigma half-widths (checked at
    construction).
    """

    primitives: tuple
    camera: Camera
    environment: Environment = field(default_factory=Environment)
    sun: Optional[DirectionalLight] = None

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        prims = self.primitives
        for i in range(len(prims)):
            for j in range(i + 1, len(prims)):
                gap = surface_distance(prims[i].sdf, prims[j].sdf)
                need = prims[i].medium.shell_half_width + prims[j].medium.shell_half_width
                if gap <= need:
                    raise ConfigError(
                        f"shells of primitives {i} and {j} overlap: surface gap "
                        f"{gap:.6g} <= combined half-widths {need:.6g}"
                    )


def shell_intersect(origin, direction, scene: ShellScene, t_max=1e6):
    """Ordered disjoint ray intervals inside each primitive's 3-sigma shell.

    Sphere-traces |f| - 3*sigma with the conservative Lipschitz step and
    refines every boundary crossing by bisection.  Returns
    (intervals, deep): intervals is a list of (t_enter, t_exit, prim_index),
    deep is True when the ray reaches f < -3*sigma of some primitive.
    """
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    prims = scene.primitives
    if not prims:
        return [], False
    widths = [pr.medium.shell_half_width for pr in prims]

    def probe(t):
        p = origin + t * direction
        f = [float(pr.sdf.sdf(p)) for pr in prims]
        d = [abs(fi) - w for fi, w in zip(f, widths)]
        k = int(np.argmin(d))
        return f, d[k], k

    def refine(t_lo, t_hi, k):
        # bisect the sign change of |f_k| - width on [t_lo, t_hi]
        pr, w = prims[k], widths[k]
        g = lambda t: abs(float(pr.sdf.sdf(origin + t * direction))) - w
        g_lo = g(t_lo)
        for _ in range(60):
            tm = 0.5 * (t_lo + t_hi)
            if (g(tm) > 0.0) == (g_lo > 0.0):
                t_lo = tm
            else:
                t_hi = tm
        return 0.5 * (t_lo + t_hi)

    intervals = []
    deep = False
    min_step = _MARCH_EPS * max(1.0, float(np.linalg.norm(origin)))
    t_prev = 0.0
    f0, d0, k0 = probe(0.0)
    inside = k0 if d0 <= 0.0 else None
    if inside is not None:
        intervals.append([0.0, None, inside])
    deep = deep or any(fi < -w for fi, w in zip(f0, widths))
    t = max(abs(d0), min_step)
    for _ in range(_MARCH_MAX_STEPS):
        if t >= t_max:
            break
        f, d, k = probe(t)
        deep = deep or any(fi < -w for fi, w in zip(f, widths))
        if inside is None and d <= 0.0:
            intervals.append([refine(t_prev, t, k), None, k])
            inside = k
        elif inside is not None and d > 0.0:
            intervals[-1][1] = refine(t_prev, t, inside)
            inside = None
        if inside is None and d > 0.0:
            # outside every shell and locally receding from each primitive:
            # exteriors are convex, so no shell can be reached any more
            p = origin + t * direction
            if all(float(np.sum(pr.sdf.gradient(p) * direction)) >= 0.0 for pr in prims):
                break
        t_prev = t
        t = t + max(abs(d), min_step)
    else:
        raise NumericFailureError("shell_intersect exceeded its iteration cap")
    if intervals and intervals[-1][1] is None:
        intervals[-1][1] = min(t, t_max)
    return [tuple(iv) for iv in intervals], deep
