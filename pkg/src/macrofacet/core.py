"""Scalar special functions and spherical geometry helpers.

Conventions used package-wide:

* directions are unit vectors stored as float64 arrays of shape (..., 3),
  z-up, with the geometric normal at (0, 0, 1);
* spherical angles are (theta, phi) with theta in [0, pi] measured from +z
  and phi in [0, 2*pi); at the poles phi is canonicalized to 0;
* all math is double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import ParameterDomainError

SQRT_PI = 1.7724538509055160273
SQRT_TWO = 1.4142135623730951
TWO_PI = 6.283185307179586

_ERFC_TAIL_CUTOFF = 8.0
_ERFC_CF_DEPTH = 48  # continued-fraction depth, converged for x >= 8


def erf(x):
    """Error function, exactly odd, relative error below 1e-14."""
    x = np.asarray(x, dtype=np.float64)
    # evaluate on |x| and restore the sign so erf(-x) == -erf(x) bitwise
    return np.copysign(_sp.erf(np.abs(x)), x)[()]


def _exp_neg_sq(x):
    # e^{-x^2} with the squaring residual compensated (Veltkamp split),
    # keeps the tail of erfc relatively accurate near underflow
    s = x * x
    c = np.float64(134217729.0)  # 2^27 + 1
    xh = (x * c) - (x * c - x)
    xl = x - xh
    r = (xh * xh - s) + 2.0 * xh * xl + xl * xl
    return np.exp(-s) * (1.0 - r)


def _erfc_tail(x):
    # Laplace continued fraction erfc(x) = e^{-x^2}/sqrt(pi) / (x + 1/2/(x + 1/(x + ...)))
    f = np.zeros_like(x)
    for k in range(_ERFC_CF_DEPTH, 0, -1):
        f = (0.5 * k) / (x + f)
    return _exp_neg_sq(x) / (SQRT_PI * (x + f))


def erfc(x):
    """Complementary error function with a dedicated large-x tail.

    Relative (not absolute) accuracy holds throughout the tail; the
    crossover to the continued-fraction expansion is at x = 8.
    """
    x = np.asarray(x, dtype=np.float64)
    out = _sp.erfc(x)
    tail = x > _ERFC_TAIL_CUTOFF
    if np.any(tail):
        # beyond ~27 the result underflows; clamping keeps inf inputs finite
        xt = np.minimum(np.where(tail, x, _ERFC_TAIL_CUTOFF), 30.0)
        out = np.where(tail, _erfc_tail(xt), out)
    return out[()]


def gauss_pdf(x, mu, var):
    """Gaussian density with mean mu and variance var (> 0)."""
    var = np.asarray(var, dtype=np.float64)
    if np.any(var <= 0.0):
        raise ParameterDomainError(f"gauss_pdf requires var > 0, got {var}")
    x = np.asarray(x, dtype=np.float64)
    z = (x - mu) ** 2 / (2.0 * var)
    return (np.exp(-z) / np.sqrt(TWO_PI * var))[()]


def gauss_cdf(x, mu, var):
    """Gaussian CDF; evaluated through erfc so the lower tail keeps
    relative accuracy."""
    var = np.asarray(var, dtype=np.float64)
    if np.any(var <= 0.0):
        raise ParameterDomainError(f"gauss_cdf requires var > 0, got {var}")
    x = np.asarray(x, dtype=np.float64)
    z = (np.asarray(mu, dtype=np.float64) - x) / np.sqrt(2.0 * var)
    return (0.5 * erfc(z))[()]


def log_gauss_cdf(x, mu, var):
    """log of gauss_cdf, stable far into the lower tail."""
    var = np.asarray(var, dtype=np.float64)
    if np.any(var <= 0.0):
        raise ParameterDomainError(f"log_gauss_cdf requires var > 0, got {var}")
    z = (np.asarray(x, dtype=np.float64) - mu) / np.sqrt(var)
    return _sp.log_ndtr(z)[()]


def normalize(v):
    """Unit vector(s) along v; v must be nonzero."""
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def spherical_to_direction(theta, phi):
    """(theta, phi) -> unit direction, shape (..., 3)."""
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    st = np.sin(theta)
    return np.stack(
        np.broadcast_arrays(st * np.cos(phi), st * np.sin(phi), np.cos(theta)),
        axis=-1,
    )


def direction_to_spherical(w):
    """Unit direction -> (theta, phi); phi canonicalized to 0 at the poles."""
    w = np.asarray(w, dtype=np.float64)
    theta = np.arccos(np.clip(w[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(w[..., 1], w[..., 0]), TWO_PI)
    pole = np.hypot(w[..., 0], w[..., 1]) < 1e-14
    phi = np.where(pole, 0.0, phi)
    return theta[()], phi[()]


@dataclass(frozen=True)
class Frame:
    """Right-handed orthonormal frame; fields broadcast as (..., 3) arrays."""

    tangent: np.ndarray
    bitangent: np.ndarray
    normal: np.ndarray

    def to_local(self, w):
        w = np.asarray(w, dtype=np.float64)
        return np.stack(
            [dot(w, self.tangent), dot(w, self.bitangent), dot(w, self.normal)],
            axis=-1,
        )

    def to_world(self, w):
        w = np.asarray(w, dtype=np.float64)
        return (
            w[..., 0:1] * self.tangent
            + w[..., 1:2] * self.bitangent
            + w[..., 2:3] * self.normal
        )


def build_frame(n):
    """Branchless frame about unit normal n (Duff et al. construction).

    Deterministic across platforms; well-conditioned at both poles.
    """
    n = np.asarray(n, dtype=np.float64)
    sign = np.copysign(1.0, n[..., 2])
    a = -1.0 / (sign + n[..., 2])
    b = n[..., 0] * n[..., 1] * a
    tangent = np.stack(
        [1.0 + sign * n[..., 0] ** 2 * a, sign * b, -sign * n[..., 0]], axis=-1
    )
    bitangent = np.stack([b, sign + n[..., 1] ** 2 * a, -n[..., 1]], axis=-1)
    return Frame(tangent=tangent, bitangent=bitangent, normal=n)


def reflect(v, n):
    """Mirror v about n: 2 (v.n) n - v."""
    return 2.0 * dot(v, n)[..., None] * np.asarray(n) - np.asarray(v)
