"""Scene layout in the surface-local frame.

The surface lies on the z = 0 plane, centered on the origin, with its normal
along +z. Points with z > 0 are on the reflection side (the side the base
station normally sits on), points with z < 0 on the refraction side.
Elements are numbered row-major starting at the (-x, +y) corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateGeometryError, DomainError

__all__ = [
    "Side",
    "Vec3",
    "SphericalAngle",
    "IosGrid",
    "element_position",
    "angles_to",
    "distance",
    "unit_vector",
    "angular_distance_deg",
    "element_angles",
]


class Side(Enum):
    REFLECTION = "reflection"
    REFRACTION = "refraction"

    @property
    def sign(self) -> float:
        return 1.0 if self is Side.REFLECTION else -1.0

    def opposite(self) -> "Side":
        return Side.REFRACTION if self is Side.REFLECTION else Side.REFLECTION

    @classmethod
    def of(cls, z: float) -> "Side":
        if z > 0:
            return cls.REFLECTION
        if z < 0:
            return cls.REFRACTION
        raise DegenerateGeometryError("point lies on the surface plane z = 0")

    @classmethod
    def parse(cls, text: str) -> "Side":
        key = text.strip().lower()
        aliases = {"reflect": "reflection", "front": "reflection",
                   "refract": "refraction", "back": "refraction"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown side {text!r}") from None


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"Vec3.{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)


@dataclass(frozen=True)
class SphericalAngle:
    """Elevation from the surface normal on the relevant side, azimuth in the x-y plane.

    Elevation must lie in [0, 90); azimuth is wrapped into [0, 360).
    """

    elevation_deg: float
    azimuth_deg: float = 0.0

    def __post_init__(self):
        el = float(self.elevation_deg)
        az = float(self.azimuth_deg)
        if not (math.isfinite(el) and math.isfinite(az)):
            raise DomainError("angles must be finite")
        if not 0.0 <= el < 90.0:
            raise DomainError(f"elevation must be in [0, 90) degrees, got {el}")
        az = az % 360.0
        if az == 360.0:  # tiny negative inputs round up
            az = 0.0
        object.__setattr__(self, "elevation_deg", el)
        object.__setattr__(self, "azimuth_deg", az)


@dataclass(frozen=True)
class IosGrid:
    rows: int
    cols: int
    dx: float
    dy: float

    def __post_init__(self):
        if int(self.rows) != self.rows or int(self.cols) != self.cols:
            raise DomainError("grid rows/cols must be integers")
        if self.rows < 1 or self.cols < 1:
            raise DomainError("grid needs at least one element")
        if not (self.dx > 0 and self.dy > 0):
            raise DomainError("element pitch dx, dy must be positive")
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def element_area(self) -> float:
        return self.dx * self.dy

    @property
    def center(self) -> Vec3:
        return Vec3(0.0, 0.0, 0.0)

    def positions(self) -> np.ndarray:
        """All element centers as an ``(M, 3)`` array, row-major."""
        r, c = np.divmod(np.arange(self.size), self.cols)
        x = (c - (self.cols - 1) / 2.0) * self.dx
        y = ((self.rows - 1) / 2.0 - r) * self.dy
        return np.column_stack([x, y, np.zeros(self.size)])


def element_position(grid: IosGrid, m: int) -> Vec3:
    if not 0 <= m < grid.size:
        raise IndexError(f"element index {m} out of range for {grid.size} elements")
    r, c = divmod(m, grid.cols)
    return Vec3((c - (grid.cols - 1) / 2.0) * grid.dx,
                ((grid.rows - 1) / 2.0 - r) * grid.dy,
                0.0)


def distance(a: Vec3, b: Vec3) -> float:
    return math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))


def _elevation_azimuth(dx: float, dy: float, dz: float) -> tuple[float, float]:
    rho = math.hypot(dx, dy)
    elevation = math.degrees(math.atan2(rho, abs(dz)))
    azimuth = math.degrees(math.atan2(dy, dx)) % 360.0
    return elevation, azimuth


def angles_to(grid: IosGrid, m: int, p: Vec3) -> tuple[SphericalAngle, Side]:
    """Direction of point ``p`` as seen from element ``m``, plus the side it lies on."""
    e = element_position(grid, m)
    d = p - e
    if d.z == 0.0:
        if d.x == 0.0 and d.y == 0.0:
            raise DegenerateGeometryError(f"point {p} coincides with element {m}")
        raise DegenerateGeometryError(f"point {p} lies on the surface plane")
    elevation, azimuth = _elevation_azimuth(d.x, d.y, d.z)
    if elevation >= 90.0:
        raise DegenerateGeometryError(f"point {p} is at grazing incidence to element {m}")
    return SphericalAngle(elevation, azimuth), Side.of(d.z)


def element_angles(positions: np.ndarray, p: Vec3) -> tuple[np.ndarray, np.ndarray, np.ndarray, Side]:
    """Vectorized ``angles_to`` plus distances for every element at once.

    Returns ``(distance_m, elevation_deg, azimuth_deg, side)`` with one entry
    per row of ``positions``.
    """
    if p.z == 0.0:
        raise DegenerateGeometryError(f"point {p} lies on the surface plane")
    d = p.as_array()[None, :] - positions
    rho = np.hypot(d[:, 0], d[:, 1])
    dist = np.sqrt(rho * rho + d[:, 2] * d[:, 2])
    elevation = np.degrees(np.arctan2(rho, np.abs(d[:, 2])))
    azimuth = np.degrees(np.arctan2(d[:, 1], d[:, 0])) % 360.0
    if np.any(elevation >= 90.0):
        raise DegenerateGeometryError(f"point {p} is at grazing incidence to the surface")
    return dist, elevation, azimuth, Side.of(p.z)


def unit_vector(angle: SphericalAngle, side: Side) -> np.ndarray:
    """Unit vector pointing from the surface toward ``angle`` on ``side``."""
    th = math.radians(angle.elevation_deg)
    ph = math.radians(angle.azimuth_deg)
    return np.array([math.sin(th) * math.cos(ph),
                     math.sin(th) * math.sin(ph),
                     side.sign * math.cos(th)])


def angular_distance_deg(a: SphericalAngle, b: SphericalAngle, side_a: Side = Side.REFLECTION,
                         side_b: Side | None = None) -> float:
    ua = unit_vector(a, side_a)
    ub = unit_vector(b, side_a if side_b is None else side_b)
    # atan2 form stays accurate for nearly parallel vectors
    return math.degrees(math.atan2(np.linalg.norm(np.cross(ua, ub)), float(ua @ ub)))
