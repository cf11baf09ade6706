"""Direct sampling reconstruction for 2D inverse elastic scattering.

Layers, bottom up: geometry (parameterized boundaries and quadrature),
specfun (Bessel/Hankel/circular harmonics), elastic (medium, plane waves,
Green tensor and tractions), forward (Nystrom solver and MSR synthesis),
indicators (sampling functionals), aperture (limited-data machinery),
harness (configs, presets, artifact emission) and cli.
"""

from .geometry import (
    BoundaryCondition,
    BoundaryCurve,
    BoundaryKind,
    Scene,
    boundary_quadrature,
    curve_point,
    curve_tangent,
    outward_normal,
    scene_from_string,
)
from .elastic import (
    Medium,
    PlaneWave,
    PointSource,
    WaveMode,
    greens_tensor,
    greens_traction_kernel,
    perp,
    plane_wave_field,
    plane_wave_traction,
    point_source_farfield,
    wave_numbers,
)
from .forward import (
    Density,
    MSRMatrix,
    MsrDimensionError,
    MsrFormatError,
    MsrVersionError,
    NumericError,
    add_noise,
    assemble_dirichlet_system,
    assemble_neumann_system,
    assemble_system,
    direction_grid,
    farfield_from_density,
    load_msr,
    save_msr,
    solve_density,
    synthesize_msr,
)
from .indicators import (
    IndicatorField,
    IndicatorKind,
    SamplingGrid,
    indicator_ff,
    indicator_pp,
    indicator_ss,
    normalize_field,
    test_vectors,
)
from .aperture import (
    ApertureMask,
    MaskedMSR,
    antipode,
    apply_mask,
    limited_indicator,
    reciprocity_fill,
    tikhonov_retrieve,
)
from .harness import (
    ExperimentConfig,
    RunManifest,
    build_preset,
    emit_config,
    parse_config,
    preset_names,
    render_heatmap,
    run_experiment,
    run_preset,
)

__version__ = "0.1.0"
