"""Flat sectioned key=value configuration documents.

Grammar: lines of `[section]` headers and `key = value` pairs; `#` starts
a comment; blank lines ignored.  Sections are kernel, medium, scene,
render and oracle.  Unknown sections or keys are hard errors, and the
kernel accepts either correlation lengths (sigma, lx, ly, lz) or a
roughness triple (sigma, ax, ay, az), never both.

Units: sigma and correlation lengths are world lengths; roughness values
are unitless slopes; angles are degrees; radiance is linear RGB.
"""

from __future__ import annotations

import hashlib

from .errors import ConfigError
from .medium import DEFAULT_ETA, DEFAULT_K, MacrofacetMedium
from .ndf import KernelParams, NdfKind, RoughnessTriple, roughness_from_kernel
from .scene import Camera, DirectionalLight, Environment, ShellPrimitive, ShellScene
from .sdf import Box, Plane, Sphere

_SECTIONS = ("kernel", "medium", "scene", "render", "oracle")

# key -> (default, documented unit); None defaults mean "absent"
_SCHEMA = {
    "kernel": {
        "sigma": ("1.0", "world length"),
        "lx": (None, "world length"),
        "ly": (None, "world length"),
        "lz": (None, "world length"),
        "ax": (None, "unitless slope"),
        "ay": (None, "unitless slope"),
        "az": (None, "unitless slope"),
    },
    "medium": {
        "kind": ("generalized", "beckmann|ggx|generalized"),
        "mix_ratio": ("0.5", "probability"),
        "eta": (",".join(str(v) for v in DEFAULT_ETA), "rgb refraction index"),
        "k": (",".join(str(v) for v in DEFAULT_K), "rgb extinction index"),
        "fresnel": ("conductor", "conductor|one"),
    },
    "scene": {
        "camera_position": ("0,0,10", "world point"),
        "camera_look_at": ("0,0,0", "world point"),
        "camera_fov_deg": ("40", "degrees"),
        "env_radiance": ("1,1,1", "linear rgb"),
        "env_map": (None, "path to a lat-long PFM"),
        "sun_direction": (None, "unit vector, direction of travel"),
        "sun_radiance": (None, "linear rgb"),
    },
    "render": {
        "width": ("64", "pixels"),
        "height": ("64", "pixels"),
        "spp": ("16", "samples per pixel"),
        "seed": ("0", "64-bit integer"),
        "max_bounces": ("64", "count"),
        "tile": ("32", "pixels"),
    },
    "oracle": {
        "grid_n": (None, "cells per axis (<= 192)"),
        "grid_spacing": (None, "world length"),
        "realizations": ("1024", "count (<= 4096)"),
        "seed": ("0", "64-bit integer"),
    },
}

_PRIM_KEYS = {
    "shape": (None, "plane|sphere|box"),
    "z0": ("0", "world length (plane)"),
    "center": ("0,0,0", "world point (sphere/box)"),
    "radius": ("1", "world length (sphere)"),
    "half_extents": ("1,1,1", "world lengths (box)"),
}


def parse_config(text):
    """Parse a config document into {section: {key: str}}; defaults filled
    in, unknown sections/keys rejected."""
    values = {s: {} for s in _SECTIONS}
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"line {ln}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key = value, got {raw!r}")
        if section is None:
            raise ConfigError(f"line {ln}: key outside any section")
        key, val = (part.strip() for part in line.split("=", 1))
        if not _key_known(section, key):
            raise ConfigError(f"line {ln}: unknown key {key!r} in [{section}]")
        if key in values[section]:
            raise ConfigError(f"line {ln}: duplicate key {key!r} in [{section}]")
        values[section][key] = val

    kern = values["kernel"]
    has_l = any(k in kern for k in ("lx", "ly", "lz"))
    has_a = any(k in kern for k in ("ax", "ay", "az"))
    if has_l and has_a:
        raise ConfigError("kernel accepts correlations or roughness, not both")
    for section, schema in _SCHEMA.items():
        for key, (default, _unit) in schema.items():
            if key not in values[section] and default is not None:
                values[section][key] = default
    if not has_l and not has_a:
        for k in ("ax", "ay", "az"):
            values["kernel"][k] = "1.0"
    return values


def _key_known(section, key):
    if key in _SCHEMA[section]:
        return True
    if section == "scene" and key.startswith("primitive"):
        head, _, tail = key.partition("_")
        return head[9:].isdigit() and tail in _PRIM_KEYS
    return False


def serialize_config(values):
    """Canonical text form; parse(serialize(parse(x))) == parse(x)."""
    out = []
    for section in _SECTIONS:
        out.append(f"[{section}]")
        for key in sorted(values.get(section, {})):
            out.append(f"{key} = {values[section][key]}")
        out.append("")
    return "\n".join(out)


def config_hash(values):
    return hashlib.sha256(serialize_config(values).encode()).hexdigest()[:16]


def _floats(text, n=None):
    parts = [float(p) for p in text.split(",")]
    if n is not None and len(parts) != n:
        raise ConfigError(f"expected {n} comma-separated numbers, got {text!r}")
    return parts


def kernel_from_config(values):
    kern = values["kernel"]
    sigma = float(kern["sigma"])
    if "lx" in kern:
        for k in ("lx", "ly", "lz"):
            if k not in kern:
                raise ConfigError(f"kernel is missing {k}")
        return KernelParams(sigma, float(kern["lx"]), float(kern["ly"]), float(kern["lz"]))
    return None


def roughness_from_config(values):
    kernel = kernel_from_config(values)
    if kernel is not None:
        return roughness_from_kernel(kernel), float(values["kernel"]["sigma"])
    kern = values["kernel"]
    a3 = RoughnessTriple(float(kern["ax"]), float(kern["ay"]), float(kern["az"]))
    return a3, float(kern["sigma"])


def medium_from_config(values):
    a3, sigma = roughness_from_config(values)
    med = values["medium"]
    try:
        kind = NdfKind(med["kind"])
    except ValueError:
        raise ConfigError(f"unknown NDF kind {med['kind']!r}") from None
    if kind is not NdfKind.GENERALIZED:
        a3 = RoughnessTriple(a3.ax, a3.ay, 0.0)
    return MacrofacetMedium(
        kind=kind,
        a3=a3,
        sigma=sigma,
        fresnel_eta=tuple(_floats(med["eta"], 3)),
        fresnel_k=tuple(_floats(med["k"], 3)),
        mix_ratio=float(med["mix_ratio"]),
        fresnel_one=med["fresnel"] == "one",
    )


def scene_from_config(values):
    medium = medium_from_config(values)
    sc = values["scene"]
    rd = values["render"]

    prim_ids = sorted(
        {int(k[len("primitive"):].split("_", 1)[0]) for k in sc if k.startswith("primitive")}
    )
    prims = []
    for pid in prim_ids:
        get = lambda name, default: sc.get(f"primitive{pid}_{name}", default)
        shape = get("shape", None)
        if shape is None:
            raise ConfigError(f"primitive{pid} is missing its shape")
        if shape == "plane":
            prims.append(Plane(float(get("z0", "0"))))
        elif shape == "sphere":
            prims.append(Sphere(tuple(_floats(get("center", "0,0,0"), 3)),
                                float(get("radius", "1"))))
        elif shape == "box":
            prims.append(Box(tuple(_floats(get("center", "0,0,0"), 3)),
                             tuple(_floats(get("half_extents", "1,1,1"), 3))))
        else:
            raise ConfigError(f"primitive{pid}: unknown shape {shape!r}")
    if not prims:
        prims = [Plane(0.0)]

    camera = Camera(
        position=tuple(_floats(sc["camera_position"], 3)),
        look_at=tuple(_floats(sc["camera_look_at"], 3)),
        fov_deg=float(sc["camera_fov_deg"]),
        width=int(rd["width"]),
        height=int(rd["height"]),
    )
    latlong = None
    if sc.get("env_map"):
        from .image import read_pfm

        latlong = read_pfm(sc["env_map"]).pixels
    env = Environment(radiance=tuple(_floats(sc["env_radiance"], 3)), latlong=latlong)
    sun = None
    if sc.get("sun_direction"):
        if not sc.get("sun_radiance"):
            raise ConfigError("sun_direction given without sun_radiance")
        sun = DirectionalLight(
            direction=tuple(_floats(sc["sun_direction"], 3)),
            radiance=tuple(_floats(sc["sun_radiance"], 3)),
        )
    return ShellScene(
        primitives=tuple(ShellPrimitive(p, medium) for p in prims),
        camera=camera,
        environment=env,
        sun=sun,
    )
