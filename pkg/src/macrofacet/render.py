"""Deterministic volumetric path tracer.

Wavefront organization: every path owns a counter-based random stream
keyed by (seed, pixel index) with one disjoint counter block per sample,
so renders are byte-identical for any tile size, batch shape or worker
count.  Real collisions scatter through the conductor phase function;
escaping rays gather the environment; an optional directional light is
connected at every collision with a one-sample ratio-tracked shadow walk
(a delta light is invisible to phase sampling, so there is no double
counting).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ParameterDomainError
from .image import RadianceImage
from .medium import _phase_sample_u, phase_eval
from .rng import stream_base
from .scene import ShellScene
from .transport import BatchRng, build_frame, walk

_RR_START = 8
_SAMPLE_BLOCK = np.uint64(1) << np.uint64(28)  # counter block per sample
_MAX_SEGMENTS = 4096


def trace_paths(origins, directions, scene: ShellScene, max_bounces, brng: BatchRng):
    """Trace a wavefront of paths to completion; returns radiance (N, 3)."""
    if max_bounces < 1:
        raise ParameterDomainError(f"max_bounces must be >= 1, got {max_bounces}")
    pos = np.array(origins, dtype=np.float64)
    dirs = np.array(directions, dtype=np.float64)
    n = pos.shape[0]
    radiance = np.zeros((n, 3))
    throughput = np.ones((n, 3))
    alive = np.ones(n, dtype=bool)
    bounces = np.zeros(n, dtype=np.int64)
    sun = scene.sun

    for _ in range(_MAX_SEGMENTS):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        sub = BatchRng(brng.base[idx], brng.counter[idx])
        state, p_end, _, _, prim = walk(scene, pos[idx], dirs[idx], sub)
        brng.counter[idx] = sub.counter
        pos[idx] = p_end

        esc = idx[state == 0]
        if esc.size:
            radiance[esc] += throughput[esc] * scene.environment.eval(dirs[esc])
            alive[esc] = False
        alive[idx[state == 1]] = False

        sc = idx[state == 2]
        if sc.size == 0:
            continue
        picks = prim[state == 2]
        for j in range(len(scene.primitives)):
            rows = sc[picks == j]
            if rows.size == 0:
                continue
            medium = scene.primitives[j].medium
            frame = build_frame(scene.primitives[j].sdf.gradient(pos[rows]))

            if sun is not None:
                wl = -np.asarray(sun.direction)
                ph = phase_eval(dirs[rows], np.broadcast_to(wl, (rows.size, 3)), medium, frame)
                shadow = BatchRng(brng.base[rows], brng.counter[rows])
                s_state, _, _, s_weight, _ = walk(
                    scene, pos[rows], np.broadcast_to(wl, (rows.size, 3)), shadow, mode="ratio"
                )
                brng.counter[rows] = shadow.counter
                tr = np.where(s_state == 1, 0.0, s_weight)
                radiance[rows] += (
                    throughput[rows] * ph * tr[:, None] * np.asarray(sun.radiance)
                )

            su = BatchRng(brng.base[rows], brng.counter[rows])
            u = np.stack([su.draw(), su.draw(), su.draw()], axis=-1)
            brng.counter[rows] = su.counter
            wo_local = frame.to_local(dirs[rows])
            wi_local, _, weight = _phase_sample_u(wo_local, medium, u)
            dirs[rows] = frame.to_world(wi_local)
            throughput[rows] *= weight

        bounces[sc] += 1
        over = sc[bounces[sc] >= max_bounces]
        alive[over] = False

        rr = sc[(bounces[sc] > _RR_START) & alive[sc]]
        if rr.size:
            q = np.minimum(np.max(throughput[rr], axis=1), 1.0)
            rru = BatchRng(brng.base[rr], brng.counter[rr])
            u = rru.draw()
            brng.counter[rr] = rru.counter
            kill = u >= q
            alive[rr[kill]] = False
            keep = rr[~kill]
            throughput[keep] /= q[~kill][:, None]
    # paths still alive at the segment cap are dropped; the estimator stays
    # non-negative and finite
    return radiance


def trace_path(ray, scene: ShellScene, max_bounces, rng):
    """Single-path convenience wrapper; advances rng by one path."""
    origin, direction = ray
    bases = np.array([stream_base(np.uint64(rng.seed), np.uint64(rng.stream))])
    brng = BatchRng(bases, np.array([rng.counter], dtype=np.uint64))
    out = trace_paths(
        np.asarray(origin, dtype=np.float64)[None, :],
        np.asarray(direction, dtype=np.float64)[None, :],
        scene,
        max_bounces,
        brng,
    )
    rng.counter = int(brng.counter[0])
    return out[0]


def render(scene: ShellScene, spp, seed, max_bounces=64, threads=None, tile=32,
           scene_hash=""):
    """Render the scene camera; byte-identical output for identical
    (scene, spp, seed) regardless of MACROFACET_THREADS."""
    if spp < 1:
        raise ParameterDomainError(f"spp must be >= 1, got {spp}")
    cam = scene.camera
    w, h = cam.width, cam.height
    if threads is None:
        threads = int(os.environ.get("MACROFACET_THREADS", "1"))
    if threads < 1:
        raise ParameterDomainError(f"thread count must be >= 1, got {threads}")
    out = np.zeros((h, w, 3))

    # sample batching keeps wavefronts near ~10^5 paths
    block = max(1, min(spp, 131072 // max(1, tile * tile)))

    def do_tile(ys, xs):
        ye, xe = min(h, ys + tile), min(w, xs + tile)
        yy, xx = np.mgrid[ys:ye, xs:xe]
        pix = (yy * w + xx).ravel()
        npx = pix.size
        base = stream_base(np.uint64(seed), pix.astype(np.uint64))
        acc = np.zeros((npx, 3))
        for s0 in range(0, spp, block):
            ns = min(block, spp - s0)
            bases = np.repeat(base, ns)
            ctr = (
                (np.tile(np.arange(s0, s0 + ns, dtype=np.uint64), npx))
                * _SAMPLE_BLOCK
            )
            brng = BatchRng(bases, ctr)
            jx = brng.draw()
            jy = brng.draw()
            o, d = cam.rays(
                np.repeat(xx.ravel(), ns), np.repeat(yy.ravel(), ns), jx, jy
            )
            rad = trace_paths(o, d, scene, max_bounces, brng)
            acc += rad.reshape(npx, ns, 3).sum(axis=1)
        out[ys:ye, xs:xe] = (acc / spp).reshape(ye - ys, xe - xs, 3)

    jobs = [(ys, xs) for ys in range(0, h, tile) for xs in range(0, w, tile)]
    if threads == 1:
        for ys, xs in jobs:
            do_tile(ys, xs)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda j: do_tile(*j), jobs))

    img = RadianceImage(
        pixels=out, meta={"seed": int(seed), "spp": int(spp), "scene_hash": scene_hash}
    )
    img.validate()
    return img
