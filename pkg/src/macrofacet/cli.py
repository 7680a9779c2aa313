"""Command-line interface.

Exit codes: 0 success, 1 configuration or parameter error, 2 numeric
failure, 3 I/O failure, 4 validation failure.  MACROFACET_THREADS (a
positive integer) caps render workers.  Every CSV starts with comment
lines carrying the tool version, seed and a full parameter echo, then a
header row naming columns and units; values are written with 17
significant digits, '.' decimal, ',' separator and LF endings.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .config import (
    config_hash,
    kernel_from_config,
    medium_from_config,
    parse_config,
    roughness_from_config,
    scene_from_config,
)
from .errors import (
    ConfigError,
    IoError,
    MacrofacetError,
    ParameterDomainError,
    UnsupportedGeometryError,
)
from .gp import GridSpec, default_grid, empirical_transmittance, empirical_vndf, ensemble_radiance
from .image import RadianceImage, write_image, write_pfm
from .medium import planar_transmittance
from .ndf import (
    KernelParams,
    generalized_lambda,
    generalized_ndf,
    projected_area,
    vndf_eval,
)
from .render import render
from .rng import RandomStream
from .scene import Camera
from .validate import SUITES, run_suites

_EXIT_CONFIG = 1
_EXIT_NUMERIC = 2
_EXIT_IO = 3
_EXIT_VALIDATION = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _fmt(x):
    return f"{float(x):.17g}"


def write_csv(path, columns, rows, params, seed):
    lines = [f"# macrofacet {__version__}"]
    lines.append(f"# seed = {seed}")
    lines.append("# params: " + " ".join(f"{k}={v}" for k, v in sorted(params.items())))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"failed to write CSV to {path}: {exc}") from exc


def _load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _threads():
    raw = os.environ.get("MACROFACET_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"MACROFACET_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"MACROFACET_THREADS must be a positive integer, got {raw!r}")
    return value


def cmd_render(args):
    values = _load_config(args.config)
    if args.spp is not None:
        values["render"]["spp"] = str(args.spp)
    if args.seed is not None:
        values["render"]["seed"] = str(args.seed)
    scene = scene_from_config(values)
    spp = int(values["render"]["spp"])
    seed = int(values["render"]["seed"])
    t0 = time.time()
    img = render(
        scene,
        spp=spp,
        seed=seed,
        max_bounces=int(values["render"]["max_bounces"]),
        threads=_threads(),
        tile=int(values["render"]["tile"]),
        scene_hash=config_hash(values),
    )
    elapsed = time.time() - t0
    write_image(img, args.out, args.format)
    print(f"rendered {img.width}x{img.height} at {spp} spp in {elapsed:.2f} s -> {args.out}")
    return 0


def _curve_grid(args):
    return np.linspace(args.start, args.stop, args.steps)


def cmd_curves(args):
    values = _load_config(args.config) if args.config else parse_config("")
    a3, sigma = roughness_from_config(values)
    medium = medium_from_config(values)
    params = {
        "kind": args.kind, "ax": a3.ax, "ay": a3.ay, "az": a3.az, "sigma": sigma,
        "theta_deg": args.theta_deg, "phi_deg": args.phi_deg,
        "start": args.start, "stop": args.stop, "steps": args.steps,
    }
    rows = []
    if args.kind == "lambda":
        cols = ["theta_deg", "lambda_unitless"]
        for deg in _curve_grid(args):
            rows.append((deg, generalized_lambda(np.deg2rad(deg), np.deg2rad(args.phi_deg), a3)))
    elif args.kind == "projected-area":
        cols = ["theta_deg", "projected_area_unitless"]
        for deg in _curve_grid(args):
            rows.append((deg, projected_area(np.deg2rad(deg), np.deg2rad(args.phi_deg), a3)))
    elif args.kind == "ndf":
        cols = ["theta_m_deg", "ndf_per_sr"]
        for deg in _curve_grid(args):
            rows.append((deg, generalized_ndf(np.deg2rad(deg), np.deg2rad(args.phi_deg), a3)))
    elif args.kind == "vndf":
        cols = ["theta_m_deg", "vndf_per_sr"]
        inc = np.deg2rad(args.theta_deg)
        wo = np.array([np.sin(inc), 0.0, -np.cos(inc)])  # downward propagation
        for deg in _curve_grid(args):
            th = np.deg2rad(deg)
            wm = np.array([np.sin(th) * np.cos(np.deg2rad(args.phi_deg)),
                           np.sin(th) * np.sin(np.deg2rad(args.phi_deg)),
                           np.cos(th)])
            rows.append((deg, vndf_eval(wm, wo, medium.kind, a3)))
    elif args.kind == "transmittance":
        cols = ["t_world", "transmittance_unitless"]
        inc = np.deg2rad(args.theta_deg)
        z0 = args.z0
        for t in _curve_grid(args):
            h1 = z0 + t * np.cos(inc)
            rows.append((t, planar_transmittance(z0, h1, inc, np.deg2rad(args.phi_deg), medium)))
    else:
        raise ConfigError(f"unknown curve kind {args.kind!r}")
    write_csv(args.out, cols, rows, params, seed=0)
    print(f"wrote {len(rows)} rows -> {args.out}")
    return 0


def cmd_validate(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}")
    overrides = {}
    for item in args.tol or []:
        if "=" not in item:
            raise ConfigError(f"--tol expects name=value, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = float(val)
    ok = run_suites(names, overrides)
    print("validation " + ("PASSED" if ok else "FAILED"))
    return 0 if ok else _EXIT_VALIDATION


def _oracle_caps(args, kernel):
    if args.realizations > 4096:
        raise ConfigError(f"realization cap is 4096, got {args.realizations}")
    spec = None
    if args.grid_n is not None:
        if args.grid_n > 192:
            raise ConfigError(f"grid cap is 192^3, got {args.grid_n}^3")
        spacing = args.grid_spacing or min(kernel.lx, kernel.ly, kernel.lz) / 4.0
        spec = GridSpec(n=args.grid_n, spacing=spacing)
    else:
        spec = default_grid(kernel)
        if spec.n > 192:
            raise ConfigError(f"default grid {spec.n}^3 exceeds the 192^3 cap")
    return spec


def cmd_oracle(args):
    values = _load_config(args.config) if args.config else parse_config("")
    kernel = kernel_from_config(values)
    if kernel is None:
        k = values["kernel"]
        sigma = float(k["sigma"])
        kernel = KernelParams(
            sigma,
            np.sqrt(2.0) * sigma / float(k["ax"]),
            np.sqrt(2.0) * sigma / float(k["ay"]),
            np.sqrt(2.0) * sigma / float(k["az"]),
        )
    spec = _oracle_caps(args, kernel)
    rng = RandomStream(args.seed, 0)
    params = {
        "experiment": args.experiment, "sigma": kernel.sigma, "lx": kernel.lx,
        "ly": kernel.ly, "lz": kernel.lz, "grid_n": spec.n,
        "grid_spacing": spec.spacing, "realizations": args.realizations,
        "theta_deg": args.theta_deg,
    }

    if args.experiment == "gp-transmittance":
        t_grid = np.linspace(0.0, args.t_max, args.steps)
        rows = empirical_transmittance(
            kernel, args.z0, np.deg2rad(180.0 - args.theta_deg), 0.0, t_grid,
            args.realizations, rng, spec=spec,
        )
        write_csv(args.out, ["t_world", "transmittance_unitless", "std_error"],
                  rows, params, args.seed)
        print(f"wrote {len(rows)} rows -> {args.out}")
    elif args.experiment == "gp-vndf":
        inc = np.deg2rad(args.theta_deg)
        wo = np.array([np.sin(inc), 0.0, -np.cos(inc)])
        dens, (te, pe) = empirical_vndf(
            kernel, wo, args.bins_theta, args.bins_phi, args.realizations, rng,
            rays_per_realization=args.rays, spec=spec,
        )
        rows = []
        for i in range(args.bins_theta):
            for j in range(args.bins_phi):
                rows.append((
                    np.rad2deg(0.5 * (te[i] + te[i + 1])),
                    np.rad2deg(0.5 * (pe[j] + pe[j + 1])),
                    dens[i, j],
                ))
        solid = np.outer(np.cos(te[:-1]) - np.cos(te[1:]), np.diff(pe))
        total = float(np.sum(dens * solid))
        write_csv(args.out, ["theta_m_deg", "phi_m_deg", "density_per_sr"],
                  rows, params, args.seed)
        print(f"wrote {len(rows)} rows (integral {total:.6f}) -> {args.out}")
    elif args.experiment == "gp-ensemble":
        cam = Camera(position=(0, 0, 8 * kernel.sigma + 2), look_at=(1.0, 0, 0),
                     fov_deg=35, width=args.width, height=args.height)
        img = ensemble_radiance(kernel, cam, args.spp, args.realizations, rng, spec=spec)
        out_img = RadianceImage(pixels=img, meta={"seed": args.seed, "spp": args.spp})
        write_pfm(out_img, args.out)
        print(f"gp-ensemble mean pixel {float(img.mean()):.4f} -> {args.out}")
    else:
        raise ConfigError(f"unknown experiment {args.experiment!r}")
    return 0


def build_parser():
    p = _Parser(prog="macrofacet", description=__doc__)
    p.add_argument("--version", action="version", version=f"macrofacet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("render", help="render a scene config to an image")
    pr.add_argument("config")
    pr.add_argument("--spp", type=int)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out", required=True)
    pr.add_argument("--format", choices=("pfm", "ppm"), default="pfm")
    pr.set_defaults(fn=cmd_render)

    pc = sub.add_parser("curves", help="tabulate closed-form curves as CSV")
    pc.add_argument("kind", choices=("lambda", "ndf", "vndf", "transmittance", "projected-area"))
    pc.add_argument("--config")
    pc.add_argument("--theta-deg", type=float, default=45.0,
                    help="incidence from the surface normal (vndf/transmittance)")
    pc.add_argument("--phi-deg", type=float, default=0.0)
    pc.add_argument("--z0", type=float, default=0.0, help="start height (transmittance)")
    pc.add_argument("--start", type=float, default=0.0)
    pc.add_argument("--stop", type=float, default=89.0)
    pc.add_argument("--steps", type=int, default=90)
    pc.add_argument("--out", required=True)
    pc.set_defaults(fn=cmd_curves)

    pv = sub.add_parser("validate", help="run invariant suites")
    pv.add_argument("suite", choices=("all",) + SUITES)
    pv.add_argument("--tol", action="append", help="override: check_name=value")
    pv.set_defaults(fn=cmd_validate)

    po = sub.add_parser("oracle", help="brute-force field-realization experiments")
    po.add_argument("experiment", choices=("gp-transmittance", "gp-vndf", "gp-ensemble"))
    po.add_argument("--config")
    po.add_argument("--realizations", type=int, default=1024)
    po.add_argument("--seed", type=int, default=0)
    po.add_argument("--grid-n", type=int, dest="grid_n")
    po.add_argument("--grid-spacing", type=float, dest="grid_spacing")
    po.add_argument("--theta-deg", type=float, default=45.0)
    po.add_argument("--z0", type=float, default=0.0)
    po.add_argument("--t-max", type=float, default=6.0)
    po.add_argument("--steps", type=int, default=25)
    po.add_argument("--bins-theta", type=int, default=16)
    po.add_argument("--bins-phi", type=int, default=32)
    po.add_argument("--rays", type=int, default=256)
    po.add_argument("--width", type=int, default=16)
    po.add_argument("--height", type=int, default=16)
    po.add_argument("--spp", type=int, default=16)
    po.add_argument("--out", required=True)
    po.set_defaults(fn=cmd_oracle)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (ConfigError, ParameterDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_IO
    except UnsupportedGeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except MacrofacetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
