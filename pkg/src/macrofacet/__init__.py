"""Statistical-surface rendering: surfaces as classic exponential media."""

__version__ = "0.1.0"

from .core import (
    Frame,
    build_frame,
    direction_to_spherical,
    erf,
    erfc,
    gauss_cdf,
    gauss_pdf,
    normalize,
    reflect,
    spherical_to_direction,
)
from .errors import (
    ConfigError,
    DegenerateVisibilityError,
    GrazingSingularityError,
    InternalConsistencyError,
    MacrofacetError,
    NumericFailureError,
    ParameterDomainError,
    UnsupportedGeometryError,
)
from .medium import (
    MacrofacetMedium,
    density,
    extinction,
    fresnel_conductor,
    phase_eval,
    phase_sample,
    planar_transmittance,
)
from .ndf import (
    KernelParams,
    NdfKind,
    RoughnessTriple,
    beckmann_ndf,
    gdf_pdf,
    generalized_lambda,
    generalized_ndf,
    ggx_ndf,
    ndf_from_gdf_quadrature,
    projected_area,
    projected_area_dir,
    roughness_from_kernel,
    sample_gdf,
    vndf_eval,
    vndf_sample,
)
from .gp import (
    FirstHit,
    GpRealization,
    GridSpec,
    default_grid,
    empirical_transmittance,
    empirical_vndf,
    ensemble_radiance,
    first_hit,
    multiplicativity_probe,
    realize_gp,
)
from .image import RadianceImage, read_pfm, write_image, write_pfm, write_ppm
from .render import render, trace_path, trace_paths
from .rng import RandomStream
from .scene import (
    Camera,
    DirectionalLight,
    Environment,
    ShellPrimitive,
    ShellScene,
    shell_intersect,
)
from .sdf import Box, Plane, Sphere
from .transport import (
    EventKind,
    MediumEvent,
    sample_collision,
    transmittance_estimate,
)
