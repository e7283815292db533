"""Command-line front end: simulate scans, fit diameters, score images, plot overlays.

Exit codes are a stable contract: 0 success, 2 config error, 3 I/O error,
4 fit/consensus failure. The output directory resolves in priority order
--out flag, CYLSCAN_OUT environment variable, config output_dir, cwd.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .fitting import FitError, RansacConfig, fit_ellipse_direct, ransac_circle
from .metrics import RenderQualityReport, load_image, psnr, ssim
from .pipeline import (
    ConfigError,
    ExternalRegime,
    config_from_file,
    generate_cloud,
    overlay_data,
    run_pipeline_artifacts,
    write_report,
)
from .ply import PlyParseError, read_ply, write_ply
from .seeding import derive_seed
from .svgplot import render_overlay_svg

OUT_ENV_VAR = "CYLSCAN_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_FIT = 4


def _resolve_out(args, config=None) -> Path:
    out = args.out or os.environ.get(OUT_ENV_VAR)
    if out is None and config is not None and config.output_dir:
        out = config.output_dir
    path = Path(out) if out else Path.cwd()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(args):
    if not args.config:
        raise ConfigError("this command requires --config <path>")
    config = config_from_file(args.config)
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    return config


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    if isinstance(config.regime, ExternalRegime):
        raise ConfigError("simulate needs a generation regime (surface or multi-scan)")
    out = _resolve_out(args, config)
    cloud = generate_cloud(config)
    cloud_path = out / "cloud.ply"
    write_ply(cloud, cloud_path, mode="binary")
    print(f"wrote {len(cloud):,} points to {cloud_path}")
    return EXIT_OK


def _run_and_report(args, config) -> int:
    out = _resolve_out(args, config)
    report, cloud, result = run_pipeline_artifacts(config)
    report_path = out / "report.json"
    write_report(report, "json", report_path)
    if args.format == "csv":
        write_report(report, "csv", out / "report.csv")
    for line in report.summary_lines():
        print(line)
    if config.svg_overlay:
        pts2d, models = overlay_data(cloud, result)
        svg_path = out / "overlay.svg"
        render_overlay_svg(pts2d, models, svg_path)
        print(f"wrote overlay to {svg_path}")
    print(f"wrote report to {report_path}")
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    return _run_and_report(args, _load_config(args))


def _cmd_fit(args) -> int:
    config = _load_config(args)
    if not isinstance(config.regime, ExternalRegime):
        raise ConfigError("fit expects regime 'external'; use pipeline to generate and fit")
    return _run_and_report(args, config)


def _cmd_metrics(args) -> int:
    ref = load_image(args.reference)
    test = load_image(args.test)
    report = RenderQualityReport(psnr=psnr(ref, test), ssim=ssim(ref, test))
    out = _resolve_out(args)
    path = out / "quality.json"
    write_report(report, "json", path)
    if args.format == "csv":
        write_report(report, "csv", out / "quality.csv")
    print(f"psnr: {report.psnr} dB")
    print(f"ssim: {report.ssim}")
    print(f"wrote report to {path}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    cloud = read_ply(args.cloud)
    if args.config:
        config = _load_config(args)
        ransac = config.ransac
    else:
        ransac = RansacConfig()
    if args.seed is not None:
        from dataclasses import replace

        ransac = replace(ransac, seed=derive_seed(args.seed, "fit"))

    from .fitting import estimate_axis, project_slice

    axis = estimate_axis(cloud)
    s = cloud.points @ axis
    pts2d = project_slice(cloud, axis, float(s.min()), float(s.max()) + 1e-9)

    models = []
    try:
        models.append(ransac_circle(pts2d, ransac).model)
    except FitError as exc:
        print(f"circle fit skipped: {exc}", file=sys.stderr)
    try:
        models.append(fit_ellipse_direct(pts2d))
    except FitError as exc:
        print(f"ellipse fit skipped: {exc}", file=sys.stderr)

    out = _resolve_out(args)
    svg_path = out / "overlay.svg"
    render_overlay_svg(pts2d, models, svg_path)
    print(f"wrote overlay with {len(models)} model(s) to {svg_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cylscan",
        description="Simulate cylinder scans, fit diameters, and score reconstructions.",
        epilog=(
            "Config files are JSON; see README for the schema. Defaults: "
            "ransac iterations=1000, inlier_threshold=0.01 m, "
            "min_inliers=max(10, 5%% of points), n_slices=6, scan grid 32x256 "
            "with 90 deg vertical FOV, ring of 8 poses at 3 m radius / 0.8 m height. "
            f"Output dir: --out, then ${OUT_ENV_VAR}, then config output_dir."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=False):
        p.add_argument("--config", help="JSON config path", required=config_required)
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", help="output directory")
        p.add_argument(
            "--format", choices=("json", "csv"), default="json", help="report format"
        )

    p = sub.add_parser("simulate", help="generate a synthetic cloud and write a PLY")
    add_common(p, config_required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit a cylinder to an external PLY cloud")
    add_common(p, config_required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("metrics", help="PSNR/SSIM between two images")
    p.add_argument("reference", help="reference image (PNG/PGM/PPM)")
    p.add_argument("test", help="comparison image")
    add_common(p)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("pipeline", help="generate/load, crop, fit, and report")
    add_common(p, config_required=True)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("plot", help="project a PLY cloud and render an SVG overlay")
    p.add_argument("cloud", help="input PLY")
    add_common(p)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlyParseError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
