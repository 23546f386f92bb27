"""voxfuse: registration, voxel-grid fusion, and coverage analysis for
aerial and street-level point clouds."""

from .cloud import PointCloud, SurfaceClass
from .errors import VoxfuseError
from .fileio import (
    PoseRecord,
    read_cloud,
    read_pairs,
    read_pose_table,
    read_transform,
    write_cloud,
    write_pairs,
    write_transform,
)
from .fusion import (
    CoverageStats,
    FusionPolicy,
    coverage_report,
    format_coverage_report,
    fuse,
    summarize_coverage,
    voxel_downsample,
)
from .geodesy import GeoOrigin, geodetic_to_enu
from .registration import (
    CorrespondenceSet,
    IcpParams,
    RegistrationResult,
    estimate_transform,
    refine_icp,
    residuals,
    rmse,
)
from .synth import (
    MmsParams,
    Scene,
    SceneSpec,
    UavParams,
    build_scene,
    default_misregistration,
    default_mms_params,
    default_scene_spec,
    default_uav_params,
    sample_mms,
    sample_uav,
    truth_cloud,
    visible,
)
from .transforms import (
    Decomposition,
    EulerAngles,
    Transform,
    apply_transform,
    axis_rotation,
    compose,
    decompose_transform,
    euler_to_rotation,
    invert_transform,
    make_transform,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
