"""Fast patchwork phase masks for 3D point-cloud holography, with a GS baseline and simulator."""

from ._backend import DEFAULT_BACKEND, HAVE_COMPILED, available_backends
from .assignment import CostMatrix, PatchAssignment, PatchSlot, assign, build_cost_matrix, solve_assignment
from .cloud import CapacityError, depth_planes, generate_cloud
from .efficiency import corner_case_efficiency, patch_mean_efficiency, regional_efficiency
from .gs import GSX1, GSX3, GsConfig, gs_compute, gs_decomposed, gs_for_cloud
from .metrics import SpotReport, accuracy, analyze_spots, contrast, efficiency, efficiency_from_contrast
from .optics import (
    ConfigError,
    OpticalConfig,
    PhaseMask,
    PointCloud,
    QuantizedMask,
    TargetPoint,
    VolumeBoundsError,
    dequantize,
    fov_axial,
    fov_lateral,
    patch_format,
    quantize,
    spot_axial,
    spot_lateral,
    steering_phase,
    steering_phase_grid,
)
from .patchwork import MaskResult, TimingReport, compute_masks
from .wave import IntensityVolume, build_target_volume, propagate_to_plane, render_volume

__version__ = "0.1.0"
