"""Per-link and end-to-end channels of a surface-aided link.

Downlink runs base station -> element -> user, uplink the other way. The two
directions are evaluated by separate code paths: the uplink takes the user as
the incident endpoint and the base station as the departure endpoint, and
multiplies the cascade in its own order. Agreement between them is therefore
a check, not a tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .element import (
    ElementPatternParams,
    ElementResponseTable,
    GammaRule,
    InteractionMode,
    SurfaceConfiguration,
    element_gain_array,
    mode_between,
)
from .errors import DegenerateGeometryError, DomainError
from .geometry import IosGrid, Side, Vec3, element_angles

__all__ = [
    "SPEED_OF_LIGHT",
    "Antenna",
    "DirectLinkModel",
    "Direction",
    "LinkKind",
    "ComplexChannel",
    "Scenario",
    "antenna_pattern",
    "bs_to_element",
    "element_to_user",
    "direct_link",
    "effective_channel",
    "check_cascade_reciprocity",
    "check_channel_reciprocity",
    "CascadeReport",
    "PairResult",
    "ReciprocityReport",
    "relative_error",
]

SPEED_OF_LIGHT = 299_792_458.0


class Direction(Enum):
    DOWNLINK = "downlink"
    UPLINK = "uplink"


class LinkKind(Enum):
    BS_TO_ELEMENT = "bs_to_element"
    ELEMENT_TO_USER = "element_to_user"
    DIRECT = "direct"
    EFFECTIVE = "effective"


class DirectLinkModel(Enum):
    BLOCKED = "blocked"
    FREE_SPACE = "free-space"


@dataclass(frozen=True)
class ComplexChannel:
    value: complex
    link_kind: LinkKind
    direction: Direction

    def __post_init__(self):
        if not (math.isfinite(self.value.real) and math.isfinite(self.value.imag)):
            raise DomainError(f"non-finite {self.link_kind.value} channel")

    def __abs__(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class Antenna:
    position: Vec3
    gain: float = 1.0
    exponent: float = 0.0

    def __post_init__(self):
        if not self.gain > 0:
            raise DomainError(f"antenna gain must be positive, got {self.gain}")
        if not self.exponent >= 0:
            raise DomainError(f"antenna pattern exponent must be >= 0, got {self.exponent}")
        if self.position.z == 0.0:
            raise DegenerateGeometryError(f"antenna at {self.position} lies on the surface plane")


@dataclass(frozen=True)
class _Rays:
    """Distances and elevations from every element toward one antenna."""

    dist: np.ndarray
    elevation: np.ndarray
    side: Side


@dataclass(frozen=True)
class Scenario:
    frequency_hz: float
    grid: IosGrid
    bs_antennas: tuple[Antenna, ...]
    users: tuple[Antenna, ...]
    element_params: ElementPatternParams = field(default_factory=ElementPatternParams)
    response_table: ElementResponseTable = field(default_factory=ElementResponseTable.default, repr=False)
    direct_link: DirectLinkModel = DirectLinkModel.BLOCKED
    gamma_rule: GammaRule = GammaRule.OFFSET_PRODUCT

    def __post_init__(self):
        object.__setattr__(self, "bs_antennas", tuple(self.bs_antennas))
        object.__setattr__(self, "users", tuple(self.users))
        if not (self.frequency_hz > 0 and math.isfinite(self.frequency_hz)):
            raise DomainError(f"frequency must be positive, got {self.frequency_hz}")
        if not self.bs_antennas:
            raise DomainError("scenario needs at least one base-station antenna")
        if not self.users:
            raise DomainError("scenario needs at least one user")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    @property
    def num_elements(self) -> int:
        return self.grid.size

    @cached_property
    def element_positions(self) -> np.ndarray:
        pos = self.grid.positions()
        pos.setflags(write=False)
        return pos

    @cached_property
    def _bs_rays(self) -> tuple[_Rays, ...]:
        return tuple(self._rays(a) for a in self.bs_antennas)

    @cached_property
    def _user_rays(self) -> tuple[_Rays, ...]:
        return tuple(self._rays(a) for a in self.users)

    def _rays(self, antenna: Antenna) -> _Rays:
        dist, el, _, side = element_angles(self.element_positions, antenna.position)
        for a in (dist, el):
            a.setflags(write=False)
        return _Rays(dist, el, side)

    def mode_for(self, k: int, u: int) -> InteractionMode:
        return mode_between(self._bs_rays[k].side, self._user_rays[u].side)


def antenna_pattern(gain: float, exponent: float, theta_deg):
    """``G * cos(theta)**q``; ``q = 0`` is isotropic."""
    theta = np.abs(np.asarray(theta_deg, dtype=float))
    if np.any(theta > 90.0):
        raise DomainError("antenna pattern is only defined for |theta| <= 90 degrees")
    c = np.where(theta == 90.0, 0.0, np.cos(np.radians(theta)))
    out = gain * (c ** exponent if exponent else np.ones_like(c))
    return float(out) if out.ndim == 0 else out


def _phase(dist, wavelength):
    arg = -2.0 * np.pi * np.asarray(dist) / wavelength
    return np.cos(arg) + 1j * np.sin(arg)


def _bs_link_array(scn: Scenario, k: int) -> np.ndarray:
    """Base station antenna ``k`` to every element (same formula both directions)."""
    ant, rays = scn.bs_antennas[k], scn._bs_rays[k]
    amp = np.sqrt(antenna_pattern(ant.gain, ant.exponent, rays.elevation)) / (
        math.sqrt(4.0 * math.pi) * rays.dist)
    return amp * _phase(rays.dist, scn.wavelength)


def _user_link_array(scn: Scenario, u: int) -> np.ndarray:
    ant, rays = scn.users[u], scn._user_rays[u]
    lam = scn.wavelength
    amp = lam * np.sqrt(antenna_pattern(ant.gain, ant.exponent, rays.elevation)) / (
        4.0 * math.pi * rays.dist)
    return amp * _phase(rays.dist, lam)


def _check_index(i: int, n: int, what: str) -> None:
    if not 0 <= i < n:
        raise IndexError(f"{what} index {i} out of range (0..{n - 1})")


def bs_to_element(scn: Scenario, k: int, m: int, direction: Direction = Direction.DOWNLINK) -> ComplexChannel:
    _check_index(k, len(scn.bs_antennas), "antenna")
    _check_index(m, scn.num_elements, "element")
    return ComplexChannel(complex(_bs_link_array(scn, k)[m]), LinkKind.BS_TO_ELEMENT, direction)


def element_to_user(scn: Scenario, m: int, u: int, direction: Direction = Direction.DOWNLINK) -> ComplexChannel:
    _check_index(u, len(scn.users), "user")
    _check_index(m, scn.num_elements, "element")
    return ComplexChannel(complex(_user_link_array(scn, u)[m]), LinkKind.ELEMENT_TO_USER, direction)


def direct_link(scn: Scenario, k: int, u: int, direction: Direction = Direction.DOWNLINK) -> ComplexChannel:
    """Line-of-sight path that bypasses the surface.

    Patterns are evaluated at the elevation of the base-station/user line
    relative to the surface normal, which is the same at both ends.
    """
    _check_index(k, len(scn.bs_antennas), "antenna")
    _check_index(u, len(scn.users), "user")
    if scn.direct_link is DirectLinkModel.BLOCKED:
        return ComplexChannel(0j, LinkKind.DIRECT, direction)
    a, b = scn.bs_antennas[k], scn.users[u]
    d = b.position - a.position
    dist = math.sqrt(d.x * d.x + d.y * d.y + d.z * d.z)
    if dist == 0.0:
        raise DegenerateGeometryError("base station and user coincide")
    theta = math.degrees(math.atan2(math.hypot(d.x, d.y), abs(d.z)))
    lam = scn.wavelength
    amp = lam * math.sqrt(antenna_pattern(a.gain, a.exponent, theta)
                          * antenna_pattern(b.gain, b.exponent, theta)) / (4.0 * math.pi * dist)
    return ComplexChannel(complex(amp * _phase(dist, lam)), LinkKind.DIRECT, direction)


GainFn = Callable[..., np.ndarray]


def effective_channel(scn: Scenario, config: SurfaceConfiguration, k: int, u: int,
                      direction: Direction, *, gain_fn: GainFn = element_gain_array) -> ComplexChannel:
    """Direct path plus the sum over elements of link * element response * link.

    ``gain_fn`` has the signature of :func:`element_gain_array`; tests swap
    in a deliberately non-reciprocal response through it.
    """
    _check_index(k, len(scn.bs_antennas), "antenna")
    _check_index(u, len(scn.users), "user")
    if len(config) != scn.num_elements:
        raise DomainError(f"configuration has {len(config)} states for {scn.num_elements} elements")
    on = config.on_mask
    bs, usr = scn._bs_rays[k], scn._user_rays[u]
    h = direct_link(scn, k, u, direction).value
    if direction is Direction.DOWNLINK:
        mode = mode_between(bs.side, usr.side)
        g = gain_fn(scn.element_params, scn.response_table, on, mode,
                    bs.elevation, usr.elevation, scn.gamma_rule)
        terms = _bs_link_array(scn, k) * g * _user_link_array(scn, u)
    else:
        mode = mode_between(usr.side, bs.side)
        g = gain_fn(scn.element_params, scn.response_table, on, mode,
                    usr.elevation, bs.elevation, scn.gamma_rule)
        terms = _user_link_array(scn, u) * g * _bs_link_array(scn, k)
    return ComplexChannel(complex(h + terms.sum()), LinkKind.EFFECTIVE, direction)


def relative_error(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


@dataclass(frozen=True)
class CascadeReport:
    downlink_product: complex
    uplink_product: complex
    max_rel_err: float


def check_cascade_reciprocity(scn: Scenario, k: int, m: int, u: int) -> CascadeReport:
    """Compare the downlink cascade (BS link then user link) with the uplink one."""
    down = bs_to_element(scn, k, m, Direction.DOWNLINK).value * element_to_user(scn, m, u, Direction.DOWNLINK).value
    up = element_to_user(scn, m, u, Direction.UPLINK).value * bs_to_element(scn, k, m, Direction.UPLINK).value
    return CascadeReport(down, up, relative_error(down, up))


@dataclass(frozen=True)
class PairResult:
    k: int
    u: int
    downlink: complex
    uplink: complex
    rel_err: float


@dataclass(frozen=True)
class ReciprocityReport:
    pairs: tuple[PairResult, ...]
    tolerance: float

    @property
    def max_rel_err(self) -> float:
        return max((p.rel_err for p in self.pairs), default=0.0)

    @property
    def passed(self) -> bool:
        return all(p.rel_err <= self.tolerance for p in self.pairs)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def check_channel_reciprocity(scn: Scenario, config: SurfaceConfiguration, tolerance: float = 1e-10,
                              *, gain_fn: GainFn = element_gain_array,
                              pairs: Sequence[tuple[int, int]] | None = None) -> ReciprocityReport:
    if pairs is None:
        pairs = [(k, u) for k in range(len(scn.bs_antennas)) for u in range(len(scn.users))]
    results = []
    for k, u in sorted(pairs):
        down = effective_channel(scn, config, k, u, Direction.DOWNLINK, gain_fn=gain_fn).value
        up = effective_channel(scn, config, k, u, Direction.UPLINK, gain_fn=gain_fn).value
        # relative to |H_D|, matching the acceptance definition
        err = abs(down - up) / abs(down) if down != 0 else abs(up)
        results.append(PairResult(k, u, down, up, err))
    return ReciprocityReport(tuple(results), tolerance)
