"""Simulation workbench for intelligent omni-surface aided links."""

from .errors import ConfigError, DegenerateGeometryError, DomainError, OmniSurfError
from .geometry import IosGrid, Side, SphericalAngle, Vec3, angles_to, distance, element_position
from .element import (
    ElementPatternParams,
    ElementResponseTable,
    ElementState,
    Gamma,
    GammaRule,
    InteractionMode,
    SurfaceConfiguration,
    element_gain,
    lookup_gamma,
    radiation_taper,
)
from .channel import (
    Antenna,
    Direction,
    DirectLinkModel,
    Scenario,
    antenna_pattern,
    bs_to_element,
    check_cascade_reciprocity,
    check_channel_reciprocity,
    direct_link,
    effective_channel,
    element_to_user,
)
from .beamforming import (
    BeamModel,
    SweepGrid,
    beam_reciprocity_experiment,
    compare_beamforming_models,
    configure_surface,
    far_field_pattern,
    main_beam,
)

__version__ = "0.1.0"
