"""Null-scattering transport through shell media.

The walker advances rays with a moving Lipschitz band: base SDFs are exact
distances, so within a step of length delta the field value stays inside
[f - delta, f + delta] and density(f - delta) * sigma_bound majorizes the
extinction there.  Tentative collisions are classified real with
probability sigma_t / majorant (delta tracking) or accumulate
(1 - sigma_t / majorant) factors (ratio tracking for transmittance).

Regions, per primitive with field std-dev s:
  transmittance estimation integrates extinction over |f| <= 3s only
  (the shell proper); path tracing keeps the medium alive on [-6s, 3s],
  treats f > 3s as vacuum, and marks rays below -6s absorbed - the
  closed-form transmittance of the -3s..-6s slab is ~1e-6, which is the
  explicit termination rule an unbiased walker needs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Frame, build_frame, dot
from .errors import InternalConsistencyError
from .medium import density
from .ndf import projected_area_bound, projected_area_dir
from .rng import derive_bases, uniform_from
from .scene import ShellScene
from .sdf import Plane, Sphere

_MAX_WALK_ITERS = 200000


class EventKind(enum.Enum):
    ABSORBED_BY_EXIT = "absorbed_by_exit"
    REAL_SCATTER = "real_scatter"
    NULL_SCATTER = "null_scatter"


@dataclass(frozen=True)
class MediumEvent:
    kind: EventKind
    position: np.ndarray
    distance: float
    local_f: float
    local_frame: Frame
    prim_index: int = -1


class BatchRng:
    """Per-ray counter-based draws for a wavefront; each ray's counter
    advances only when that ray consumes a value, so results never depend
    on how rays are batched or scheduled."""

    def __init__(self, base, counter):
        self.base = np.asarray(base, dtype=np.uint64)
        self.counter = np.array(counter, dtype=np.uint64)

    def draw(self, mask=None):
        u = uniform_from(self.base, self.counter)
        if mask is None:
            self.counter = self.counter + np.uint64(1)
        else:
            self.counter = self.counter + np.asarray(mask, dtype=np.uint64)
        return u


def _dist_to_level(prim, pos, dirn, level):
    """Distance along the ray to the level set f = level: exact for plane
    and sphere (+inf when the ray never reaches it), 1-Lipschitz lower
    bound for boxes (always finite)."""
    if isinstance(prim, Plane):
        dz = dirn[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (level - prim.sdf(pos)) / dz
        return np.where(np.isfinite(t) & (t > 0.0), t, np.inf)
    if isinstance(prim, Sphere):
        radius = prim.radius + level
        if radius <= 0.0:
            return np.full(pos.shape[:-1], np.inf)
        oc = pos - np.asarray(prim.center)
        b = dot(oc, dirn)
        c = dot(oc, oc) - radius * radius
        disc = b * b - c
        sq = np.sqrt(np.maximum(disc, 0.0))
        t1 = -b - sq
        t2 = -b + sq
        t = np.where(t1 > 1e-12, t1, t2)
        return np.where((disc >= 0.0) & (t > 1e-12), t, np.inf)
    return np.abs(prim.sdf(pos) - level)


def _gap_and_done(prim, pos, dirn, f, lo, hi):
    """(distance to the slab lo<=f<=hi, permanently-unreachable flag) for
    rays outside the slab."""
    above = f > hi
    gap = np.where(
        above,
        _dist_to_level(prim, pos, dirn, hi),
        _dist_to_level(prim, pos, dirn, lo),
    )
    # plane/sphere report +inf exactly when the slab is unreachable; boxes
    # need the recede test (convex exterior: f can then never decrease)
    done = np.isinf(gap)
    if not isinstance(prim, (Plane, Sphere)):
        done = done | (above & (dot(prim.gradient(pos), dirn) >= 0.0))
    return gap, done


def _sigma_dir_bounds(scene: ShellScene, direction):
    """Per-primitive majorant factor for the projected area: exact for
    planes (constant frame along a segment), a direction-free bound for
    curved primitives."""
    direction = np.asarray(direction, dtype=np.float64)
    out = []
    for pr in scene.primitives:
        m = pr.medium
        if isinstance(pr.sdf, Plane):
            out.append(
                np.broadcast_to(
                    np.asarray(projected_area_dir(direction, m.kind, m.a3)),
                    direction.shape[:-1],
                )
            )
        else:
            out.append(
                np.full(direction.shape[:-1], projected_area_bound(m.kind, m.a3))
            )
    return np.stack(out, axis=0)


def _fields(scene, pos):
    return np.stack([np.asarray(pr.sdf.sdf(pos)) for pr in scene.primitives], axis=0)


def local_frame_at(scene: ShellScene, prim_index, pos):
    """Frame aligned with the base-field gradient of one primitive."""
    grad = scene.primitives[prim_index].sdf.gradient(pos)
    return build_frame(grad)


def walk(scene: ShellScene, pos, direction, rng: BatchRng, mode="collision", active=None):
    """Advance a wavefront until each ray reaches a terminal state.

    Returns (state, pos, travel, weight, prim_idx): state 0 = escaped,
    1 = absorbed below the depth cap, 2 = real collision ("collision" mode
    only).  weight carries the ratio-tracking transparency in "ratio" mode
    (1.0 otherwise); prim_idx names the scattering primitive for state 2.
    """
    n = np.asarray(pos).shape[0]
    prims = scene.primitives
    out_state = np.zeros(n, dtype=np.int8)
    out_pos = np.array(pos, dtype=np.float64)
    out_travel = np.zeros(n)
    out_weight = np.ones(n)
    out_prim = np.full(n, -1, dtype=np.int64)
    if not prims:
        return out_state, out_pos, out_travel, out_weight, out_prim
    sigmas = np.array([pr.medium.sigma for pr in prims])
    deltas = 0.5 * sigmas
    if mode == "ratio":
        f_lo, f_hi, absorb = -3.0 * sigmas, 3.0 * sigmas, False
    else:
        f_lo, f_hi, absorb = -6.0 * sigmas, 3.0 * sigmas, True
    min_skip = 1e-7 * float(np.min(sigmas))

    # live (compacted) wavefront; finished rays scatter back into out_*
    ids = np.arange(n) if active is None else np.flatnonzero(active)
    pos = out_pos[ids].copy()
    direction = np.asarray(direction, dtype=np.float64)[ids].copy()
    travel = np.zeros(ids.size)
    weight = np.ones(ids.size)
    ctr = rng.counter if np.ndim(rng.counter) else np.full(n, rng.counter, dtype=np.uint64)
    base = rng.base if rng.base.ndim else np.full(n, rng.base, dtype=np.uint64)
    ctr = np.array(ctr, dtype=np.uint64)
    base = base[ids].copy()
    cnt = ctr[ids].copy()
    sig_bound = _sigma_dir_bounds(scene, direction)  # (P, live)

    def retire(mask, code):
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            return
        out_state[ids[rows]] = code
        out_pos[ids[rows]] = pos[rows]
        out_travel[ids[rows]] = travel[rows]
        out_weight[ids[rows]] = weight[rows]
        ctr[ids[rows]] = cnt[rows]

    for _ in range(_MAX_WALK_ITERS):
        if ids.size == 0:
            rng.counter = ctr
            return out_state, out_pos, out_travel, out_weight, out_prim
        m_live = ids.size
        f = _fields(scene, pos)  # (P, live)
        drop = np.zeros(m_live, dtype=bool)

        if absorb:
            dead = np.any(f < f_lo[:, None], axis=0)
            retire(dead, 1)
            drop |= dead

        in_band = (f >= f_lo[:, None]) & (f <= f_hi[:, None])
        gaps = np.empty((len(prims), m_live))
        done_p = np.empty((len(prims), m_live), dtype=bool)
        for j, pr in enumerate(prims):
            g, d = _gap_and_done(pr.sdf, pos, direction, f[j], f_lo[j], f_hi[j])
            gaps[j] = np.where(in_band[j], np.inf, g)
            done_p[j] = ~in_band[j] & d
        any_band = np.any(in_band, axis=0)

        # vacuum rays: exact skip to the nearest band, or retire for good
        vac = ~any_band & ~drop
        esc = vac & np.all(done_p, axis=0)
        retire(esc, 0)
        drop |= esc
        move = vac & ~drop
        if np.any(move):
            skip = np.maximum(np.min(gaps, axis=0), min_skip)
            pos[move] += direction[move] * skip[move][:, None]
            travel[move] += skip[move]

        stepping = any_band & ~drop
        if np.any(stepping):
            band = in_band & stepping[None, :]
            majorant = np.zeros(m_live)
            for j in range(len(prims)):
                fb = np.maximum(f[j] - deltas[j], f_lo[j])
                majorant += np.where(band[j], density(fb, sigmas[j]) * sig_bound[j], 0.0)
            # the step may not cross into any other primitive's band
            step_cap = np.min(
                np.where(band, deltas[:, None], np.maximum(gaps, min_skip)), axis=0
            )

            u1 = uniform_from(base, cnt)
            cnt += stepping.astype(np.uint64)
            with np.errstate(divide="ignore", invalid="ignore"):
                dt = np.where(majorant > 0.0, -np.log1p(-u1) / majorant, np.inf)
            hit = stepping & (dt <= step_cap)
            adv = np.where(stepping, np.where(hit, dt, step_cap), 0.0)
            pos += direction * adv[:, None]
            travel += adv

            rows = np.flatnonzero(hit)
            if rows.size:
                p_h = pos[rows]
                d_h = direction[rows]
                sig_j = np.zeros((len(prims), rows.size))
                for j, pr in enumerate(prims):
                    m = pr.medium
                    f_c = np.asarray(pr.sdf.sdf(p_h))
                    inside = (f_c >= f_lo[j]) & (f_c <= f_hi[j])
                    if not np.any(inside):
                        continue
                    frame = build_frame(pr.sdf.gradient(p_h))
                    wl = frame.to_local(d_h)
                    sj = density(np.where(inside, f_c, 0.0), m.sigma) * projected_area_dir(
                        wl, m.kind, m.a3
                    )
                    sig_j[j] = np.where(inside, sj, 0.0)
                sig_t = np.sum(sig_j, axis=0)
                ratio = sig_t / majorant[rows]
                if np.any(ratio > 1.0 + 1e-9):
                    raise InternalConsistencyError(
                        f"extinction exceeded its majorant (ratio {float(np.max(ratio)):.6g})"
                    )
                if mode == "ratio":
                    weight[rows] *= np.maximum(1.0 - ratio, 0.0)
                else:
                    u2 = uniform_from(base[rows], cnt[rows])
                    cnt[rows] += np.uint64(1)
                    real = u2 < ratio
                    if np.any(real):
                        # u2 * majorant is uniform on (0, sig_t) given a real
                        # hit, so it doubles as the primitive selector
                        csum = np.cumsum(sig_j, axis=0)
                        pick = np.argmax(csum > (u2 * majorant[rows])[None, :], axis=0)
                        rr = rows[real]
                        out_prim[ids[rr]] = pick[real]
                        sc = np.zeros(m_live, dtype=bool)
                        sc[rr] = True
                        retire(sc, 2)
                        drop |= sc

        if np.any(drop):
            keep = ~drop
            ids = ids[keep]
            pos = pos[keep]
            direction = direction[keep]
            travel = travel[keep]
            weight = weight[keep]
            base = base[keep]
            cnt = cnt[keep]
            sig_bound = sig_bound[:, keep]
    raise InternalConsistencyError("walker exceeded its iteration cap")


def transmittance_estimate(ray, scene: ShellScene, n_samples, rng):
    """Unbiased ratio-tracking estimate of the transmittance through all
    shell intervals along the ray; returns (mean, std_error)."""
    origin, direction = ray
    n = int(n_samples)
    bases = derive_bases(rng.seed, rng.stream, np.arange(n))
    brng = BatchRng(bases, np.zeros(n, dtype=np.uint64))
    pos = np.broadcast_to(np.asarray(origin, dtype=np.float64), (n, 3))
    dirs = np.broadcast_to(np.asarray(direction, dtype=np.float64), (n, 3))
    state, _, _, weight, _ = walk(scene, pos, dirs, brng, mode="ratio")
    weight = np.where(state == 1, 0.0, weight)
    mean = float(np.mean(weight))
    se = float(np.std(weight, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, se


def sample_collision(ray, scene: ShellScene, rng):
    """Walk one ray to its next tentative collision (classified real or
    null with probability sigma_t / majorant) or out of the medium;
    returns a MediumEvent.  Majorant violations raise, never clamp.
    """
    origin, direction = ray
    pos = np.asarray(origin, dtype=np.float64)[None, :].copy()
    dirn = np.asarray(direction, dtype=np.float64)[None, :]
    bases = derive_bases(rng.seed, rng.stream, np.array([0]))
    brng = BatchRng(bases, np.array([rng.counter], dtype=np.uint64))
    ev = _single_tentative(scene, pos, dirn, brng)
    rng.counter = int(brng.counter[0])
    return ev


def _single_tentative(scene, pos, dirn, brng):
    prims = scene.primitives
    if not prims:
        return MediumEvent(
            EventKind.ABSORBED_BY_EXIT, pos[0].copy(), 0.0, np.inf,
            build_frame(np.array([0.0, 0.0, 1.0])), -1,
        )
    sigmas = np.array([pr.medium.sigma for pr in prims])
    deltas = 0.5 * sigmas
    f_lo = -6.0 * sigmas
    f_hi = 3.0 * sigmas
    min_skip = 1e-7 * float(np.min(sigmas))
    sig_bound = _sigma_dir_bounds(scene, dirn)
    travel = 0.0

    for _ in range(_MAX_WALK_ITERS):
        f = _fields(scene, pos)[:, 0]
        if np.any(f < f_lo):
            k = int(np.argmin(f - f_lo))
            return MediumEvent(
                EventKind.ABSORBED_BY_EXIT, pos[0].copy(), travel, float(f[k]),
                local_frame_at(scene, k, pos[0]), k,
            )
        in_band = (f >= f_lo) & (f <= f_hi)
        if not np.any(in_band):
            gaps = np.empty(len(prims))
            done = np.empty(len(prims), dtype=bool)
            for j, pr in enumerate(prims):
                g, d = _gap_and_done(pr.sdf, pos, dirn, np.array([f[j]]), f_lo[j], f_hi[j])
                gaps[j], done[j] = float(g[0]), bool(d[0])
            if done.all():
                k = int(np.argmin(np.abs(f)))
                return MediumEvent(
                    EventKind.ABSORBED_BY_EXIT, pos[0].copy(), travel, float(f[k]),
                    local_frame_at(scene, k, pos[0]), -1,
                )
            skip = max(float(np.min(gaps)), min_skip)
            pos[0] += dirn[0] * skip
            travel += skip
            continue

        majorant = 0.0
        step_cap = np.inf
        for j in range(len(prims)):
            if in_band[j]:
                fb = max(f[j] - deltas[j], f_lo[j])
                majorant += float(density(fb, sigmas[j])) * float(sig_bound[j, 0])
                step_cap = min(step_cap, deltas[j])
            else:
                g, _ = _gap_and_done(
                    prims[j].sdf, pos, dirn, np.array([f[j]]), f_lo[j], f_hi[j]
                )
                step_cap = min(step_cap, max(float(g[0]), min_skip))
        u1 = float(brng.draw()[0])
        dt = -np.log1p(-u1) / majorant if majorant > 0.0 else np.inf
        adv = min(dt, step_cap)
        pos[0] += dirn[0] * adv
        travel += adv
        if dt > step_cap:
            continue

        f_c = _fields(scene, pos)[:, 0]
        sig_parts = np.zeros(len(prims))
        for j, pr in enumerate(prims):
            if f_lo[j] <= f_c[j] <= f_hi[j]:
                m = pr.medium
                frame = local_frame_at(scene, j, pos[0])
                wl = frame.to_local(dirn[0])
                sig_parts[j] = float(density(f_c[j], m.sigma)) * float(
                    projected_area_dir(wl, m.kind, m.a3)
                )
        sig_t = float(sig_parts.sum())
        if sig_t > majorant * (1.0 + 1e-9):
            raise InternalConsistencyError(
                f"extinction {sig_t:.6g} exceeded majorant {majorant:.6g}"
            )
        u2 = float(brng.draw()[0])
        real = u2 < sig_t / majorant
        k = int(np.argmax(np.cumsum(sig_parts) > u2 * majorant)) if real else int(
            np.argmax(sig_parts)
        )
        return MediumEvent(
            EventKind.REAL_SCATTER if real else EventKind.NULL_SCATTER,
            pos[0].copy(), travel, float(f_c[k]), local_frame_at(scene, k, pos[0]), k,
        )
    raise InternalConsistencyError("collision walk exceeded its iteration cap")
