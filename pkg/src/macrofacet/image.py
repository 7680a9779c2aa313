"""Radiance images and their on-disk formats.

PFM is the quantitative artifact with a bit-exact layout: header
"PF\\n<w> <h>\\n-1.0\\n" followed by 32-bit little-endian floats in
bottom-up row order.  PPM is 8-bit with the sRGB transfer at exposure 1
and exists for quick looks only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IoError, MacrofacetError, ParameterDomainError


@dataclass
class RadianceImage:
    """Linear RGB radiance with deterministic provenance."""

    pixels: np.ndarray  # (height, width, 3) float
    meta: dict = field(default_factory=dict)  # seed, spp, scene_hash

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ParameterDomainError("pixels must have shape (height, width, 3)")

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def validate(self):
        if not np.all(np.isfinite(self.pixels)):
            raise MacrofacetError("image contains non-finite values")
        if np.any(self.pixels < 0.0):
            raise MacrofacetError("image contains negative radiance")


def write_pfm(img: RadianceImage, path):
    data = np.flipud(img.pixels).astype("<f4")
    try:
        with open(path, "wb") as fh:
            fh.write(f"PF\n{img.width} {img.height}\n-1.0\n".encode("ascii"))
            fh.write(data.tobytes())
    except OSError as exc:
        raise IoError(f"failed to write PFM to {path}: {exc}") from exc


def read_pfm(path):
    try:
        with open(path, "rb") as fh:
            if fh.readline().strip() != b"PF":
                raise IoError(f"{path}: not a 3-channel PFM")
            w, h = (int(v) for v in fh.readline().split())
            scale = float(fh.readline())
            data = np.frombuffer(fh.read(w * h * 12), dtype="<f4" if scale < 0 else ">f4")
    except OSError as exc:
        raise IoError(f"failed to read PFM from {path}: {exc}") from exc
    pixels = np.flipud(data.reshape(h, w, 3)).astype(np.float64)
    return RadianceImage(pixels=pixels)


def _srgb_encode(x):
    x = np.clip(x, 0.0, 1.0)
    lo = 12.92 * x
    hi = 1.055 * np.power(x, 1.0 / 2.4) - 0.055
    return np.where(x <= 0.0031308, lo, hi)


def write_ppm(img: RadianceImage, path):
    q = np.clip(np.rint(_srgb_encode(img.pixels) * 255.0), 0, 255).astype(np.uint8)
    try:
        with open(path, "wb") as fh:
            fh.write(f"P6\n{img.width} {img.height}\n255\n".encode("ascii"))
            fh.write(q.tobytes())
    except OSError as exc:
        raise IoError(f"failed to write PPM to {path}: {exc}") from exc


def write_image(img: RadianceImage, path, fmt):
    """Write in the named format ("pfm" or "ppm")."""
    fmt = fmt.lower()
    if fmt == "pfm":
        write_pfm(img, path)
    elif fmt == "ppm":
        write_ppm(img, path)
    else:
        raise ParameterDomainError(f"unknown image format {fmt!r}")
