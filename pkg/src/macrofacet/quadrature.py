"""Deterministic sphere quadratures used by validation and tests.

Small-az normal distributions develop an exp(-|cos|/az^2) boundary layer
at the horizon, so the polar rules here support geometric grading toward
cos(theta) = 0; clamped integrals are taken in the frame of the view
vector, where the clamp becomes a smooth polar factor instead of a kink.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .core import TWO_PI, build_frame


@lru_cache(maxsize=8)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def _composite_gl(edges, n_nodes):
    x, w = _leggauss(n_nodes)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    return (mid + half * x[None, :]).ravel(), (half * w[None, :]).ravel()


def sphere_grid(n_cos=256, n_phi=512, graded=False, n_sub=32, n_nodes=24):
    """Quadrature nodes/weights over the unit sphere.

    graded=False: plain Gauss-Legendre in cos(theta).
    graded=True: composite Gauss-Legendre on a partition geometrically
    refined toward the horizon from both sides (resolves small-az NDFs);
    an edge sits exactly at cos(theta) = 0 so hemisphere clamps stay exact.
    Returns (directions (N, 3), weights (N,)) with sum(w) = 4*pi.
    """
    if graded:
        geo = np.geomspace(1e-9, 1.0, n_sub)
        edges = np.unique(np.concatenate([-geo[::-1], [0.0], geo]))
        ct, wct = _composite_gl(edges, n_nodes)
    else:
        ct, wct = _leggauss(n_cos)
    phi = (np.arange(n_phi) + 0.5) * TWO_PI / n_phi
    ctg, ph = np.meshgrid(ct, phi, indexing="ij")
    st = np.sqrt(np.maximum(1.0 - ctg**2, 0.0))
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), ctg], axis=-1).reshape(-1, 3)
    w = np.broadcast_to((wct * (TWO_PI / n_phi))[:, None], ctg.shape).ravel()
    return dirs, w


def sphere_integral(fn, **grid_kw):
    dirs, w = sphere_grid(**grid_kw)
    return float(np.sum(fn(dirs) * w))


def clamped_cosine_integral(fn, wo, n_sub=28, n_nodes=20, n_psi=320):
    """Integral of <-wo, wm> * fn(wm) over the sphere, parametrized about
    v = -wo so the clamp is the smooth polar coordinate u in (0, 1]."""
    wo = np.asarray(wo, dtype=np.float64)
    frame = build_frame(-wo)
    edges = np.concatenate([[0.0], np.geomspace(1e-9, 1.0, n_sub)])
    u, wu = _composite_gl(edges, n_nodes)
    psi = (np.arange(n_psi) + 0.5) * TWO_PI / n_psi
    uu, ps = np.meshgrid(u, psi, indexing="ij")
    r = np.sqrt(np.maximum(1.0 - uu**2, 0.0))
    local = np.stack([r * np.cos(ps), r * np.sin(ps), uu], axis=-1)
    wm = frame.to_world(local)
    return float(np.sum(uu * fn(wm) * wu[:, None] * (TWO_PI / n_psi)))
