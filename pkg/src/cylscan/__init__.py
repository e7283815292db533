"""cylscan: synthetic-scan cylinder metrology.

Simulates pipe scans (dense surface sampling and misaligned multi-frame
ray casting), fits circles/ellipses/cylinders robustly, and reports
diameter accuracy, radial noise statistics and image quality metrics.
"""

from .cloud import (
    Aabb,
    CloudStats,
    PointCloud,
    RigidTransform,
    apply_rigid_transform,
    cloud_stats,
    crop_aabb,
)
from .fitting import (
    CircleModel,
    ConsensusFailureError,
    CylinderModel,
    DegenerateSampleError,
    EllipseModel,
    FitError,
    FitResult,
    RansacConfig,
    circle_from_3_points,
    estimate_axis,
    fit_circle_algebraic,
    fit_cylinder_multislice,
    fit_ellipse_direct,
    model_diameter,
    project_slice,
    ransac_circle,
)
from .metrics import (
    DiameterReport,
    ImageGrid,
    RadialStats,
    RenderQualityReport,
    diameter_error,
    load_image,
    psnr,
    radial_residual_stats,
    ssim,
)
from .ply import PlyParseError, read_ply, write_ply
from .seeding import derive_seed
from .simulate import (
    CylinderSpec,
    PosePerturbation,
    ScanConfig,
    Scene,
    raycast_scan,
    ring_poses,
    sample_cylinder_surface,
    simulate_multi_scan,
)

__version__ = "0.1.0"
