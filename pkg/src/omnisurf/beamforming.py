"""Far-field patterns, 1-bit surface configuration and beam experiments.

Patterns use the plane-wave limit of the link model: the 1/d amplitudes are
dropped and each element keeps the path phase ``exp(+j k u.r_m)`` for both
the incident direction and the departure direction, ``u`` being the unit
vector from the surface toward the far-away antenna. The pattern value for
incident direction ``a`` and departure direction ``b`` is then symmetric in
``(a, b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import Scenario
from .element import (
    ElementState,
    InteractionMode,
    SurfaceConfiguration,
    element_gain_array,
    radiation_taper,
)
from .errors import DomainError
from .geometry import Side, SphericalAngle, angular_distance_deg

__all__ = [
    "BeamModel",
    "SweepGrid",
    "PatternSweep",
    "BeamReport",
    "far_field_pattern",
    "field_at",
    "main_beam",
    "configure_surface",
    "best_binary_choice",
    "beam_reciprocity_experiment",
    "BeamReciprocityResult",
    "compare_beamforming_models",
    "ModelComparison",
    "THETA_CLAMP_DEG",
]

THETA_CLAMP_DEG = 89.9


class BeamModel(Enum):
    """Element phase model used when designing a configuration."""

    IDEAL_PHASE = "ideal"
    ANGLE_AWARE = "angle-aware"


@dataclass(frozen=True)
class SweepGrid:
    """Departure directions to evaluate; samples are ordered phi-major, theta-minor."""

    theta_start: float = 0.0
    theta_stop: float = 89.0
    theta_step: float = 1.0
    phis: tuple[float, ...] = (0.0, 180.0)

    def __post_init__(self):
        if not self.theta_step > 0:
            raise DomainError("theta step must be positive")
        if not 0.0 <= self.theta_start <= self.theta_stop:
            raise DomainError("theta range must satisfy 0 <= start <= stop")
        if not self.phis:
            raise DomainError("sweep needs at least one azimuth")
        object.__setattr__(self, "phis", tuple(float(p) % 360.0 for p in self.phis))

    @classmethod
    def cut(cls, step: float = 1.0) -> "SweepGrid":
        """The phi = 0 plane, both halves, elevation 0..89 deg."""
        return cls(0.0, 89.0, step, (0.0, 180.0))

    @classmethod
    def full(cls, step: float = 2.0) -> "SweepGrid":
        n = int(math.floor(360.0 / step + 1e-9))
        return cls(0.0, 89.0, step, tuple(i * step for i in range(n)))

    @property
    def step(self) -> float:
        return self.theta_step

    def thetas(self) -> np.ndarray:
        n = int(math.floor((self.theta_stop - self.theta_start) / self.theta_step + 1e-9))
        t = self.theta_start + self.theta_step * np.arange(n + 1)
        return np.minimum(t, THETA_CLAMP_DEG)

    def directions(self) -> tuple[np.ndarray, np.ndarray]:
        th = self.thetas()
        theta = np.tile(th, len(self.phis))
        phi = np.repeat(np.array(self.phis), len(th))
        return theta, phi


@dataclass(frozen=True)
class PatternSweep:
    mode: InteractionMode
    incident: SphericalAngle
    incident_side: Side
    grid: SweepGrid
    theta_deg: np.ndarray = field(repr=False)
    phi_deg: np.ndarray = field(repr=False)
    field_values: np.ndarray = field(repr=False)

    @property
    def departure_side(self) -> Side:
        return self.incident_side if self.mode is InteractionMode.REFLECT else self.incident_side.opposite()

    @property
    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.field_values))

    def __len__(self) -> int:
        return len(self.theta_deg)


@dataclass(frozen=True)
class BeamReport:
    main_beam: SphericalAngle
    side: Side
    peak_power_db: float
    pointing_error_deg: float | None = None
    gain_loss_db: float | None = None

    def as_dict(self) -> dict:
        return {
            "theta_deg": self.main_beam.elevation_deg,
            "phi_deg": self.main_beam.azimuth_deg,
            "side": self.side.value,
            "peak_power_db": self.peak_power_db,
            "pointing_error_deg": self.pointing_error_deg,
            "gain_loss_db": self.gain_loss_db,
        }


def _direction_vectors(theta_deg, phi_deg, side: Side) -> np.ndarray:
    th = np.radians(np.asarray(theta_deg, float))
    ph = np.radians(np.asarray(phi_deg, float))
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph),
                     side.sign * np.cos(th)], axis=-1)


def _path_phase(scn: Scenario, u: np.ndarray) -> np.ndarray:
    """Far-field per-element phase factor ``exp(+j k u.r_m)``; ``u`` is ``(..., 3)``."""
    k = 2.0 * math.pi / scn.wavelength
    arg = k * (u @ scn.element_positions.T)
    return np.cos(arg) + 1j * np.sin(arg)


def _state_responses(scn: Scenario, mode: InteractionMode, theta_inc, theta_dep,
                     model: BeamModel) -> tuple[np.ndarray, np.ndarray]:
    """Element response for OFF and ON under the given phase model.

    ``IDEAL_PHASE`` uses the table's normal-incidence coefficients for every
    angle; the taper still applies since it does not depend on the state.
    """
    if model is BeamModel.ANGLE_AWARE:
        g_off = element_gain_array(scn.element_params, scn.response_table, False, mode,
                                   theta_inc, theta_dep, scn.gamma_rule)
        g_on = element_gain_array(scn.element_params, scn.response_table, True, mode,
                                  theta_inc, theta_dep, scn.gamma_rule)
        return g_off, g_on
    p = scn.element_params
    amp = np.sqrt(p.gain * p.area_m2 * radiation_taper(p, theta_inc) * radiation_taper(p, theta_dep))
    out = []
    for state in (ElementState.OFF, ElementState.ON):
        beta, psi = scn.response_table.sample(state, mode, 0.0)
        out.append(amp * beta * np.exp(1j * math.radians(psi)))
    return out[0], out[1]


def _check_mode(incident_side: Side, mode: InteractionMode, departure_side: Side | None) -> Side:
    dep = incident_side if mode is InteractionMode.REFLECT else incident_side.opposite()
    if departure_side is not None and departure_side is not dep:
        raise DomainError(f"{mode.value} from the {incident_side.value} side cannot reach "
                          f"the {departure_side.value} side")
    return dep


def _fields(scn: Scenario, on_mask: np.ndarray, incident: SphericalAngle, incident_side: Side,
            mode: InteractionMode, theta_dep, phi_dep, model: BeamModel = BeamModel.ANGLE_AWARE):
    dep_side = _check_mode(incident_side, mode, None)
    a = _path_phase(scn, _direction_vectors(incident.elevation_deg, incident.azimuth_deg, incident_side))
    b = _path_phase(scn, _direction_vectors(theta_dep, phi_dep, dep_side))
    g_off, g_on = _state_responses(scn, mode, incident.elevation_deg, np.asarray(theta_dep, float), model)
    g = np.where(on_mask[None, :], np.asarray(g_on)[:, None], np.asarray(g_off)[:, None])
    return (b * g) @ a


def far_field_pattern(scn: Scenario, config: SurfaceConfiguration, incident: SphericalAngle,
                      incident_side: Side, mode: InteractionMode,
                      grid: SweepGrid | None = None, *,
                      departure_side: Side | None = None) -> PatternSweep:
    """Complex far-field response over ``grid`` for a plane wave from ``incident``.

    Departure directions lie on the incident side for reflection and on the
    opposite side for refraction; a ``departure_side`` that contradicts
    ``mode`` is rejected. The direct path is not part of a pattern.
    """
    grid = grid or SweepGrid.cut()
    _check_mode(incident_side, mode, departure_side)
    if len(config) != scn.num_elements:
        raise DomainError(f"configuration has {len(config)} states for {scn.num_elements} elements")
    theta, phi = grid.directions()
    values = _fields(scn, config.on_mask, incident, incident_side, mode, theta, phi)
    for arr in (theta, phi, values):
        arr.setflags(write=False)
    return PatternSweep(mode, incident, incident_side, grid, theta, phi, values)


def field_at(scn: Scenario, config: SurfaceConfiguration, incident: SphericalAngle,
             incident_side: Side, departure: SphericalAngle, departure_side: Side) -> complex:
    """Single-direction pattern value; the mode follows from the two sides."""
    mode = InteractionMode.REFLECT if incident_side is departure_side else InteractionMode.REFRACT
    v = _fields(scn, config.on_mask, incident, incident_side, mode,
                np.array([departure.elevation_deg]), np.array([departure.azimuth_deg]))
    return complex(v[0])


def main_beam(sweep: PatternSweep, target: SphericalAngle | None = None) -> BeamReport:
    """Grid argmax of power; ties go to the smallest elevation, then smallest azimuth."""
    if len(sweep) == 0:
        raise DomainError("empty sweep")
    power = np.abs(sweep.field_values)
    best = power.max()
    cand = np.flatnonzero(power == best)
    i = min(cand, key=lambda j: (sweep.theta_deg[j], sweep.phi_deg[j]))
    beam = SphericalAngle(float(sweep.theta_deg[i]), float(sweep.phi_deg[i]))
    err = None
    if target is not None:
        err = angular_distance_deg(beam, target, sweep.departure_side)
    with np.errstate(divide="ignore"):
        peak_db = float(20.0 * np.log10(best))
    return BeamReport(beam, sweep.departure_side, peak_db, err)


def best_binary_choice(c_off: np.ndarray, c_on: np.ndarray) -> np.ndarray:
    """ON/OFF mask maximizing ``|sum_m c_m(state_m)|`` over all 2**M choices.

    For a reference phase ``alpha`` each element independently takes the
    state whose contribution is closest in phase to ``alpha`` (largest
    projection onto ``exp(j alpha)``). The choice only changes where
    ``alpha`` crosses ``arg(c_on - c_off) +/- 90 deg``, so scanning one
    ``alpha`` per arc between those breakpoints covers every candidate and
    the best of them is the global optimum.
    """
    c_off = np.asarray(c_off, complex)
    c_on = np.asarray(c_on, complex)
    diff = c_on - c_off
    base = np.angle(diff)
    active = np.abs(diff) > 0
    if not np.any(active):
        return np.zeros(len(c_off), dtype=bool)
    bps = np.sort(np.mod(np.concatenate([base[active] + np.pi / 2, base[active] - np.pi / 2]), 2 * np.pi))
    nxt = np.append(bps[1:], bps[0] + 2 * np.pi)
    mids = 0.5 * (bps + nxt)
    # cover the wrap-around arc and degenerate coincident breakpoints
    alphas = np.unique(np.concatenate([mids, [0.0]]))
    ref = np.exp(1j * alphas)
    masks = (diff[None, :] * np.conj(ref[:, None])).real > 0
    totals = np.abs(np.where(masks, c_on[None, :], c_off[None, :]).sum(axis=1))
    best = totals.max()
    # deterministic pick among numerically equal optima: first in mask order
    winners = np.flatnonzero(totals >= best * (1.0 - 1e-12))
    choices = sorted(masks[winners].tolist(), key=lambda m: tuple(not b for b in m))
    return np.array(choices[0], dtype=bool)


def _target_contributions(scn: Scenario, incident: SphericalAngle, incident_side: Side,
                          target: SphericalAngle, target_side: Side, model: BeamModel):
    mode = InteractionMode.REFLECT if incident_side is target_side else InteractionMode.REFRACT
    a = _path_phase(scn, _direction_vectors(incident.elevation_deg, incident.azimuth_deg, incident_side))
    b = _path_phase(scn, _direction_vectors(target.elevation_deg, target.azimuth_deg, target_side))
    g_off, g_on = _state_responses(scn, mode, incident.elevation_deg, target.elevation_deg, model)
    return a * b * g_off, a * b * g_on


def configure_surface(scn: Scenario, incident: SphericalAngle, incident_side: Side,
                      target: SphericalAngle, target_side: Side,
                      model: BeamModel = BeamModel.ANGLE_AWARE) -> SurfaceConfiguration:
    """1-bit configuration steering a plane wave from ``incident`` toward ``target``.

    Each element's two candidate contributions at the target are formed from
    the steering phase and the element phases of ``model``; the state is then
    chosen per element by phase proximity to the best common reference.
    """
    c_off, c_on = _target_contributions(scn, incident, incident_side, target, target_side, model)
    return SurfaceConfiguration.from_mask(best_binary_choice(c_off, c_on))


@dataclass(frozen=True)
class BeamReciprocityResult:
    config: SurfaceConfiguration
    incident0: SphericalAngle
    incident_side: Side
    mode: InteractionMode
    target: SphericalAngle | None
    beam1: BeamReport
    beam2: BeamReport
    deviation_deg: float
    grid_step: float

    @property
    def reciprocal(self) -> bool:
        return self.deviation_deg <= self.grid_step + 1e-9

    @property
    def verdict(self) -> str:
        return "reciprocal" if self.reciprocal else "non-reciprocal"


def _default_target(scn, incident0, side, mode, grid, model):
    """Grid direction whose designed configuration gives the strongest swept peak."""
    dep_side = _check_mode(side, mode, None)
    theta, phi = grid.directions()
    best = None
    for t, p in zip(theta, phi):
        target = SphericalAngle(float(t), float(p))
        cfg = configure_surface(scn, incident0, side, target, dep_side, model)
        peak = float(np.abs(far_field_pattern(scn, cfg, incident0, side, mode, grid).field_values).max())
        if best is None or peak > best[0] * (1.0 + 1e-12):
            best = (peak, target, cfg)
    return best[1], best[2]


def beam_reciprocity_experiment(scn: Scenario, incident0: SphericalAngle, incident_side: Side,
                                mode: InteractionMode, grid: SweepGrid | None = None, *,
                                target: SphericalAngle | None = None,
                                config: SurfaceConfiguration | None = None,
                                model: BeamModel = BeamModel.ANGLE_AWARE) -> BeamReciprocityResult:
    """Round trip: incident0 -> main beam beam1, then beam1 -> main beam beam2.

    The configuration is held fixed for both legs. The surface is beam
    reciprocal for this input when beam2 lands within one grid step of
    incident0.
    """
    grid = grid or SweepGrid.cut()
    dep_side = _check_mode(incident_side, mode, None)
    if config is None:
        if target is None:
            target, config = _default_target(scn, incident0, incident_side, mode, grid, model)
        else:
            config = configure_surface(scn, incident0, incident_side, target, dep_side, model)
    sweep1 = far_field_pattern(scn, config, incident0, incident_side, mode, grid)
    beam1 = main_beam(sweep1, target)
    sweep2 = far_field_pattern(scn, config, beam1.main_beam, dep_side, mode, grid)
    beam2 = main_beam(sweep2, incident0)
    deviation = angular_distance_deg(beam2.main_beam, incident0, incident_side)
    return BeamReciprocityResult(config, incident0, incident_side, mode, target,
                                 beam1, beam2, deviation, grid.step)


@dataclass(frozen=True)
class ModelComparison:
    target: SphericalAngle
    target_side: Side
    configs: dict = field(repr=False)
    reports: dict = field(repr=False)
    target_power_db: dict = field(repr=False)

    @property
    def gain_loss_db(self) -> float:
        """Target-direction power of the angle-aware design minus the ideal-phase design."""
        return self.target_power_db[BeamModel.ANGLE_AWARE] - self.target_power_db[BeamModel.IDEAL_PHASE]

    def pointing_error_deg(self, model: BeamModel) -> float:
        return self.reports[model].pointing_error_deg


def compare_beamforming_models(scn: Scenario, incident: SphericalAngle, incident_side: Side,
                               target: SphericalAngle, target_side: Side,
                               grid: SweepGrid | None = None) -> ModelComparison:
    """Design with both phase models, then judge both under angle-aware physics."""
    grid = grid or SweepGrid.cut()
    mode = InteractionMode.REFLECT if incident_side is target_side else InteractionMode.REFRACT
    configs, reports, target_db = {}, {}, {}
    for model in (BeamModel.IDEAL_PHASE, BeamModel.ANGLE_AWARE):
        cfg = configure_surface(scn, incident, incident_side, target, target_side, model)
        sweep = far_field_pattern(scn, cfg, incident, incident_side, mode, grid)
        value = abs(field_at(scn, cfg, incident, incident_side, target, target_side))
        with np.errstate(divide="ignore"):
            target_db[model] = float(20.0 * np.log10(value))
        configs[model] = cfg
        reports[model] = main_beam(sweep, target)
    loss = target_db[BeamModel.ANGLE_AWARE] - target_db[BeamModel.IDEAL_PHASE]
    ideal = reports[BeamModel.IDEAL_PHASE]
    reports[BeamModel.IDEAL_PHASE] = BeamReport(ideal.main_beam, ideal.side, ideal.peak_power_db,
                                                ideal.pointing_error_deg, loss)
    aa = reports[BeamModel.ANGLE_AWARE]
    reports[BeamModel.ANGLE_AWARE] = BeamReport(aa.main_beam, aa.side, aa.peak_power_db,
                                                aa.pointing_error_deg, 0.0)
    return ModelComparison(target, target_side, configs, reports, target_db)
