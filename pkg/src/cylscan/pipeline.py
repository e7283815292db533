"""End-to-end run orchestration: generate/load, crop, fit, score, report.

All stage randomness fans out from one master seed through
derive_seed(seed, stage_name), so a config file plus seed pins the whole
run byte-for-byte (wall time aside).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .cloud import Aabb, PointCloud, crop_aabb
from .fitting import (
    CircleModel,
    FitResult,
    RansacConfig,
    fit_cylinder_multislice,
    model_diameter,
)
from .geometry import orthonormal_basis
from .metrics import DiameterReport, RadialStats, diameter_error, radial_residual_stats
from .ply import read_ply
from .report import append_csv_row, dump_json
from .seeding import derive_seed
from .simulate import (
    CylinderSpec,
    PosePerturbation,
    ScanConfig,
    Scene,
    ring_poses,
    sample_cylinder_surface,
    simulate_multi_scan,
)


class ConfigError(ValueError):
    """Invalid or inconsistent pipeline configuration."""


@dataclass(frozen=True)
class SurfaceRegime:
    """Dense lateral-surface sampling (stand-in for exported neural geometry)."""

    n_points: int = 20000
    radial_noise_sigma: float = 0.0
    arc_deg: float = 360.0


@dataclass(frozen=True)
class MultiScanRegime:
    """Merged ray-cast frames from a pose ring with pose-estimate error."""

    scan: ScanConfig
    perturb: PosePerturbation
    n_poses: int = 8
    ring_radius: float = 3.0
    ring_height: float = 0.8


@dataclass(frozen=True)
class ExternalRegime:
    """Load an existing PLY instead of generating."""

    cloud: str


_REGIME_SECTIONS = {"surface": "surface", "multi-scan": "multi_scan", "external": "external"}


@dataclass(frozen=True)
class PipelineConfig:
    scene: Scene
    regime: SurfaceRegime | MultiScanRegime | ExternalRegime
    ransac: RansacConfig
    n_slices: int
    ground_truth_diameter: float
    seed: int
    crop: Aabb | None = None
    output_dir: str | None = None
    svg_overlay: bool = False

    def __post_init__(self):
        if self.n_slices < 1:
            raise ConfigError("n_slices must be >= 1")
        if not self.ground_truth_diameter > 0.0:
            raise ConfigError("ground_truth_diameter must be positive")

    @property
    def regime_name(self) -> str:
        if isinstance(self.regime, SurfaceRegime):
            return "surface"
        if isinstance(self.regime, MultiScanRegime):
            return "multi-scan"
        return "external"


def _require(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(f"config is missing required key {key!r}")
    return raw[key]


def config_from_dict(raw: dict) -> PipelineConfig:
    """Build a validated PipelineConfig from a parsed config mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        scene_raw = dict(_require(raw, "scene"))
        cylinder = CylinderSpec(
            diameter=float(_require(scene_raw, "diameter")),
            height=float(_require(scene_raw, "height")),
            base_center=np.asarray(scene_raw.get("base_center", [0.0, 0.0, 0.0])),
            axis=np.asarray(scene_raw.get("axis", [0.0, 0.0, 1.0])),
        )
        ground = scene_raw.get("ground_z", 0.0)
        scene = Scene(cylinder, None if ground is None else float(ground))

        regime_name = _require(raw, "regime")
        if regime_name not in _REGIME_SECTIONS:
            raise ConfigError(
                f"regime must be one of {sorted(_REGIME_SECTIONS)}, got {regime_name!r}"
            )
        extra = [
            sect
            for name, sect in _REGIME_SECTIONS.items()
            if name != regime_name and sect in raw
        ]
        if extra:
            raise ConfigError(
                f"regime sections {extra} conflict with regime={regime_name!r}"
            )
        section = raw.get(_REGIME_SECTIONS[regime_name], {})
        if regime_name == "surface":
            regime = SurfaceRegime(
                n_points=int(section.get("n_points", 20000)),
                radial_noise_sigma=float(section.get("radial_noise_sigma", 0.0)),
                arc_deg=float(section.get("arc_deg", 360.0)),
            )
        elif regime_name == "multi-scan":
            scan_raw = dict(section.get("scan", {}))
            scan = ScanConfig(
                n_elevation=int(scan_raw.get("n_elevation", 32)),
                n_azimuth=int(scan_raw.get("n_azimuth", 256)),
                vertical_fov_deg=float(scan_raw.get("vertical_fov_deg", 90.0)),
                max_range=float(scan_raw.get("max_range", 50.0)),
                range_noise_sigma=float(scan_raw.get("range_noise_sigma", 0.0)),
            )
            perturb_raw = dict(section.get("perturb", {}))
            perturb = PosePerturbation(
                translation_sigma=float(perturb_raw.get("translation_sigma", 0.0)),
                rotation_sigma_deg=float(perturb_raw.get("rotation_sigma_deg", 0.0)),
            )
            regime = MultiScanRegime(
                scan=scan,
                perturb=perturb,
                n_poses=int(section.get("n_poses", 8)),
                ring_radius=float(section.get("ring_radius", 3.0)),
                ring_height=float(section.get("ring_height", 0.8)),
            )
        else:
            regime = ExternalRegime(cloud=str(_require(section, "cloud")))

        ransac_raw = dict(raw.get("ransac", {}))
        min_inliers = ransac_raw.get("min_inliers")
        ransac = RansacConfig(
            iterations=int(ransac_raw.get("iterations", 1000)),
            inlier_threshold=float(ransac_raw.get("inlier_threshold", 0.01)),
            min_inliers=None if min_inliers is None else int(min_inliers),
        )

        crop = None
        if raw.get("crop") is not None:
            crop_raw = dict(raw["crop"])
            crop = Aabb(
                np.asarray(_require(crop_raw, "min")), np.asarray(_require(crop_raw, "max"))
            )

        return PipelineConfig(
            scene=scene,
            regime=regime,
            ransac=ransac,
            n_slices=int(raw.get("n_slices", 6)),
            ground_truth_diameter=float(_require(raw, "ground_truth_diameter")),
            seed=int(raw.get("seed", 0)),
            crop=crop,
            output_dir=raw.get("output_dir"),
            svg_overlay=bool(raw.get("svg_overlay", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def config_from_file(path) -> PipelineConfig:
    import json

    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_to_dict(config: PipelineConfig) -> dict:
    """Normalized config echo carried in reports (schema-stable key order)."""
    scene = {
        "diameter": config.scene.cylinder.diameter,
        "height": config.scene.cylinder.height,
        "base_center": list(config.scene.cylinder.base_center),
        "axis": list(config.scene.cylinder.axis),
        "ground_z": config.scene.ground_z,
    }
    out = {"scene": scene, "regime": config.regime_name}
    if isinstance(config.regime, SurfaceRegime):
        out["surface"] = {
            "n_points": config.regime.n_points,
            "radial_noise_sigma": config.regime.radial_noise_sigma,
            "arc_deg": config.regime.arc_deg,
        }
    elif isinstance(config.regime, MultiScanRegime):
        out["multi_scan"] = {
            "n_poses": config.regime.n_poses,
            "ring_radius": config.regime.ring_radius,
            "ring_height": config.regime.ring_height,
            "scan": {
                "n_elevation": config.regime.scan.n_elevation,
                "n_azimuth": config.regime.scan.n_azimuth,
                "vertical_fov_deg": config.regime.scan.vertical_fov_deg,
                "max_range": config.regime.scan.max_range,
                "range_noise_sigma": config.regime.scan.range_noise_sigma,
            },
            "perturb": {
                "translation_sigma": config.regime.perturb.translation_sigma,
                "rotation_sigma_deg": config.regime.perturb.rotation_sigma_deg,
            },
        }
    else:
        out["external"] = {"cloud": config.regime.cloud}
    if config.crop is not None:
        out["crop"] = {"min": list(config.crop.min), "max": list(config.crop.max)}
    out["ransac"] = {
        "iterations": config.ransac.iterations,
        "inlier_threshold": config.ransac.inlier_threshold,
        "min_inliers": config.ransac.min_inliers,
    }
    out["n_slices"] = config.n_slices
    out["ground_truth_diameter"] = config.ground_truth_diameter
    out["seed"] = config.seed
    return out


@dataclass(frozen=True)
class FitSummary:
    """JSON-friendly record of a cylinder fit."""

    diameter: float
    radius: float
    axis_point: list
    axis_dir: list
    z_extent: list
    inlier_count: int
    rms_residual: float
    iterations_used: int
    n_slices: int


@dataclass(frozen=True)
class RunReport:
    config: dict
    points_before_crop: int
    points_after_crop: int
    pct_reduction: float
    fit: FitSummary
    diameter: DiameterReport
    radial: RadialStats
    wall_time_s: float

    def to_dict(self, include_wall_time: bool = True) -> dict:
        from .report import to_jsonable

        out = {
            "config": self.config,
            "points_before_crop": self.points_before_crop,
            "points_after_crop": self.points_after_crop,
            "pct_reduction": self.pct_reduction,
            "fit": to_jsonable(self.fit),
            "diameter": to_jsonable(self.diameter),
            "radial": to_jsonable(self.radial),
        }
        if include_wall_time:
            out["wall_time_s"] = self.wall_time_s
        return to_jsonable(out)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunReport":
        return cls(
            config=raw["config"],
            points_before_crop=int(raw["points_before_crop"]),
            points_after_crop=int(raw["points_after_crop"]),
            pct_reduction=float(raw["pct_reduction"]),
            fit=FitSummary(**raw["fit"]),
            diameter=DiameterReport(**raw["diameter"]),
            radial=RadialStats(**raw["radial"]),
            wall_time_s=float(raw.get("wall_time_s", 0.0)),
        )

    def summary_lines(self) -> list[str]:
        d = self.diameter
        return [
            f"points: {self.points_before_crop:,} -> {self.points_after_crop:,} "
            f"({self.pct_reduction:.1f}% reduction)",
            f"diameter: {d.estimated:.4f} m "
            f"(truth {d.ground_truth:.4f} m, error {d.abs_error * 1000:.2f} mm, "
            f"{d.pct_error:.2f}%)",
            f"radial residuals: std {self.radial.std * 1000:.2f} mm, "
            f"rms {self.radial.rms * 1000:.2f} mm over {self.radial.count:,} points",
        ]

    def csv_columns(self) -> list[tuple[str, object]]:
        return [
            ("regime", self.config.get("regime")),
            ("seed", self.config.get("seed")),
            ("points_before_crop", self.points_before_crop),
            ("points_after_crop", self.points_after_crop),
            ("pct_reduction", self.pct_reduction),
            ("diameter_est_m", self.diameter.estimated),
            ("diameter_gt_m", self.diameter.ground_truth),
            ("abs_error_m", self.diameter.abs_error),
            ("pct_error", self.diameter.pct_error),
            ("radial_mean_m", self.radial.mean),
            ("radial_std_m", self.radial.std),
            ("radial_rms_m", self.radial.rms),
            ("inlier_count", self.fit.inlier_count),
            ("rms_residual_m", self.fit.rms_residual),
            ("iterations_used", self.fit.iterations_used),
            ("wall_time_s", self.wall_time_s),
        ]


def percent_reduction(before: int, after: int) -> float:
    if before <= 0:
        return 0.0
    return 100.0 * (1.0 - after / before)


def generate_cloud(config: PipelineConfig) -> PointCloud:
    """Produce the input cloud for a run (generation seeded from the master seed)."""
    seed = derive_seed(config.seed, "generate")
    regime = config.regime
    if isinstance(regime, SurfaceRegime):
        return sample_cylinder_surface(
            config.scene.cylinder,
            regime.n_points,
            regime.radial_noise_sigma,
            seed=seed,
            arc_rad=math.radians(regime.arc_deg),
        )
    if isinstance(regime, MultiScanRegime):
        base = config.scene.cylinder.base_center
        poses = ring_poses(
            regime.n_poses,
            regime.ring_radius,
            regime.ring_height,
            center=(base[0], base[1]),
        )
        return simulate_multi_scan(
            config.scene, poses, regime.scan, regime.perturb, seed=seed
        )
    return read_ply(regime.cloud)


class _Stage:
    """Re-raise stage failures with the stage name in the message."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None or isinstance(exc, OSError):
            return False
        if isinstance(exc, ValueError) and not str(exc).startswith("["):
            raise type(exc)(f"[{self.name}] {exc}") from exc
        return False


def run_pipeline_artifacts(
    config: PipelineConfig,
) -> tuple[RunReport, PointCloud, FitResult]:
    """run_pipeline plus the cropped cloud and FitResult, for overlay rendering."""
    start = time.perf_counter()
    with _Stage("generate"):
        cloud = generate_cloud(config)
    before = len(cloud)
    with _Stage("crop"):
        if config.crop is not None:
            cloud = crop_aabb(cloud, config.crop)
    after = len(cloud)

    with _Stage("fit"):
        fit_cfg = replace(config.ransac, seed=derive_seed(config.seed, "fit"))
        result = fit_cylinder_multislice(cloud, fit_cfg, config.n_slices)
    model = result.model

    with _Stage("metrics"):
        est = model_diameter(model)
        dia = diameter_error(est, config.ground_truth_diameter)
        radial = radial_residual_stats(cloud, model)
    fit = FitSummary(
        diameter=est,
        radius=model.radius,
        axis_point=[float(v) for v in model.axis_point],
        axis_dir=[float(v) for v in model.axis_dir],
        z_extent=[model.z_extent[0], model.z_extent[1]],
        inlier_count=int(len(result.inlier_indices)),
        rms_residual=result.rms_residual,
        iterations_used=result.iterations_used,
        n_slices=config.n_slices,
    )
    report = RunReport(
        config=config_to_dict(config),
        points_before_crop=before,
        points_after_crop=after,
        pct_reduction=percent_reduction(before, after),
        fit=fit,
        diameter=dia,
        radial=radial,
        wall_time_s=time.perf_counter() - start,
    )
    return report, cloud, result


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Generate/load, crop, fit and score one configuration."""
    return run_pipeline_artifacts(config)[0]


def overlay_data(cloud: PointCloud, result: FitResult):
    """2D projection of `cloud` along the fitted axis plus the fitted circle."""
    model = result.model
    u, v = orthonormal_basis(model.axis_dir)
    pts2d = np.column_stack([cloud.points @ u, cloud.points @ v])
    center2d = np.array([model.axis_point @ u, model.axis_point @ v])
    return pts2d, [CircleModel(center2d, model.radius)]


def write_report(report, fmt: str, path) -> None:
    """Write a report as stable JSON or append it as one CSV row."""
    if fmt == "json":
        if isinstance(report, RunReport):
            dump_json(report.to_dict(), path)
        else:
            dump_json(report, path)
    elif fmt == "csv":
        if isinstance(report, RunReport):
            append_csv_row(report.csv_columns(), path)
        else:
            from .report import to_jsonable

            payload = to_jsonable(report)
            if not isinstance(payload, dict):
                raise TypeError(f"cannot emit {type(report).__name__} as CSV")
            append_csv_row(list(payload.items()), path)
    else:
        raise ConfigError(f"format must be 'json' or 'csv', got {fmt!r}")
