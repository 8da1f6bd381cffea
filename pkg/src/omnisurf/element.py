"""Angle-dependent response of a single 1-bit surface element.

The response of element ``m`` to a ray arriving at incident elevation
``theta_i`` and leaving at departure elevation ``theta_r`` is::

    g = sqrt(G * S * F(theta_i) * F(theta_r)) * Gamma(state, mode, theta_i, theta_r)

with ``F(theta) = cos(theta)**n`` and ``Gamma`` built from a sampled
single-angle coefficient table. The table is even in theta and is looked up
by linear interpolation in ``|theta|``.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import Side, SphericalAngle

__all__ = [
    "ElementState",
    "InteractionMode",
    "GammaRule",
    "ElementPatternParams",
    "ElementResponseTable",
    "Gamma",
    "lookup_gamma",
    "radiation_taper",
    "element_gain",
    "element_gain_array",
    "mode_between",
    "SurfaceConfiguration",
]

TABLE_ENV_VAR = "IOS_TABLE_PATH"


class ElementState(Enum):
    ON = "ON"
    OFF = "OFF"

    @classmethod
    def parse(cls, text: str) -> "ElementState":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ConfigError(f"unknown element state {text!r} (expected ON or OFF)") from None


class InteractionMode(Enum):
    REFLECT = "reflect"
    REFRACT = "refract"

    @classmethod
    def parse(cls, text: str) -> "InteractionMode":
        key = text.strip().lower()
        key = {"reflection": "reflect", "refraction": "refract"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown interaction mode {text!r}") from None


class GammaRule(Enum):
    """How two single-angle table lookups combine into one coefficient.

    ``OFFSET_PRODUCT``: Gamma(a) * Gamma(b) / Gamma(0), exact whenever one
    angle is zero. ``AVERAGE``: mean amplitude and mean phase of the two
    lookups, exact on the diagonal a == b.
    """

    OFFSET_PRODUCT = "offset-product"
    AVERAGE = "average"


def mode_between(side_a: Side, side_b: Side) -> InteractionMode:
    return InteractionMode.REFLECT if side_a is side_b else InteractionMode.REFRACT


@dataclass(frozen=True)
class ElementPatternParams:
    gain: float = 1.0
    area_m2: float = 1.0
    exponent_n: float = 1.0

    def __post_init__(self):
        if not self.gain > 0:
            raise DomainError(f"element gain must be positive, got {self.gain}")
        if not self.area_m2 > 0:
            raise DomainError(f"element area must be positive, got {self.area_m2}")
        if not self.exponent_n >= 0:
            raise DomainError(f"taper exponent must be >= 0, got {self.exponent_n}")


def radiation_taper(params: ElementPatternParams, theta_deg):
    """``cos(theta)**n``; exactly 1 at normal incidence and 0 at 90 degrees."""
    theta = np.abs(np.asarray(theta_deg, dtype=float))
    if np.any(theta > 90.0):
        raise DomainError("taper is only defined for |theta| <= 90 degrees")
    c = np.where(theta == 90.0, 0.0, np.cos(np.radians(theta)))
    out = c ** params.exponent_n if params.exponent_n else np.ones_like(c)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class _Curve:
    theta: np.ndarray
    psi: np.ndarray
    beta: np.ndarray

    def sample(self, theta_abs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # np.interp holds the end values outside the sampled range
        return (np.interp(theta_abs, self.theta, self.beta),
                np.interp(theta_abs, self.theta, self.psi))


@dataclass(frozen=True)
class ElementResponseTable:
    """Sampled coefficient ``beta * exp(j psi)`` per (state, mode) versus elevation."""

    curves: Mapping[tuple[ElementState, InteractionMode], _Curve] = field(repr=False)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple], source: str | None = None) -> "ElementResponseTable":
        """Build from ``(state, mode, theta_deg, psi_deg, beta[, line])`` tuples.

        Rows of each (state, mode) group must be strictly ascending in theta.
        Mirror rows at -theta are folded onto +theta and must agree with it.
        """
        groups: dict[tuple[ElementState, InteractionMode], list] = {}
        for row in rows:
            state, mode, theta, psi, beta = row[:5]
            line = row[5] if len(row) > 5 else None
            state = state if isinstance(state, ElementState) else ElementState.parse(state)
            mode = mode if isinstance(mode, InteractionMode) else InteractionMode.parse(mode)
            theta, psi, beta = float(theta), float(psi), float(beta)
            if not (math.isfinite(theta) and math.isfinite(psi) and math.isfinite(beta)):
                raise ConfigError("table values must be finite", line, source)
            if not abs(theta) < 90.0:
                raise ConfigError(f"table elevation {theta} outside (-90, 90)", line, source)
            if not 0.0 <= beta <= 1.0:
                raise ConfigError(f"amplitude beta={beta} outside [0, 1]", line, source)
            group = groups.setdefault((state, mode), [])
            if group and theta <= group[-1][0]:
                kind = "duplicate" if theta == group[-1][0] else "unsorted"
                raise ConfigError(f"{kind} row for {state.value},{mode.value},{theta:g}", line, source)
            group.append((theta, psi, beta, line))

        if not groups:
            raise ConfigError("response table is empty", None, source)
        curves = {}
        for key, group in groups.items():
            folded: dict[float, tuple[float, float, int | None]] = {}
            for theta, psi, beta, line in group:
                t = abs(theta)
                if t in folded and folded[t][:2] != (psi, beta):
                    raise ConfigError(
                        f"rows at +/-{t:g} deg differ for {key[0].value},{key[1].value}; "
                        "the element response must be even in theta", line, source)
                folded[t] = (psi, beta, line)
            thetas = sorted(folded)
            if thetas[0] != 0.0 or thetas[-1] < 20.0:
                raise ConfigError(
                    f"{key[0].value},{key[1].value} must cover at least 0..20 deg", None, source)
            arrs = [np.array(thetas), np.array([folded[t][0] for t in thetas]),
                    np.array([folded[t][1] for t in thetas])]
            for a in arrs:
                a.setflags(write=False)
            curves[key] = _Curve(*arrs)
        return cls(curves)

    @classmethod
    def from_csv(cls, text: str, source: str | None = None) -> "ElementResponseTable":
        """Parse ``state,mode,theta_deg,psi_deg,beta`` text; ``#`` lines are comments."""
        numbered = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1)
                    if ln.strip() and not ln.lstrip().startswith("#")]
        if not numbered:
            raise ConfigError("response table is empty", None, source)
        reader = csv.reader(io.StringIO("\n".join(ln for _, ln in numbered)))
        header = [h.strip() for h in next(reader)]
        expected = ["state", "mode", "theta_deg", "psi_deg", "beta"]
        if header != expected:
            raise ConfigError(f"table header must be {','.join(expected)}", numbered[0][0], source)
        rows = []
        for (line, _), rec in zip(numbered[1:], reader):
            if len(rec) != 5:
                raise ConfigError(f"expected 5 fields, got {len(rec)}", line, source)
            try:
                rows.append((rec[0], rec[1], float(rec[2]), float(rec[3]), float(rec[4]), line))
            except ValueError as exc:
                raise ConfigError(f"bad number: {exc}", line, source) from None
        return cls.from_rows(rows, source)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ElementResponseTable":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read(), source=str(path))

    @classmethod
    def bundled(cls) -> "ElementResponseTable":
        text = resources.files("omnisurf").joinpath("data/default_table.csv").read_text("utf-8")
        return cls.from_csv(text, source="default_table.csv")

    @classmethod
    def default(cls) -> "ElementResponseTable":
        """The bundled table, unless ``IOS_TABLE_PATH`` names another file."""
        override = os.environ.get(TABLE_ENV_VAR)
        if override:
            return cls.from_file(override)
        return cls.bundled()

    @classmethod
    def constant(cls, psi_on: float, psi_off: float, beta: float = 1.0) -> "ElementResponseTable":
        """Angle-independent table: the same phase pair for both modes at every elevation."""
        rows = []
        for mode in InteractionMode:
            for state, psi in ((ElementState.ON, psi_on), (ElementState.OFF, psi_off)):
                rows += [(state, mode, t, psi, beta) for t in (0.0, 10.0, 20.0)]
        return cls.from_rows(rows)

    def curve(self, state: ElementState, mode: InteractionMode) -> _Curve:
        try:
            return self.curves[(state, mode)]
        except KeyError:
            raise ConfigError(f"table has no entry for {state.value},{mode.value}") from None

    def sample(self, state: ElementState, mode: InteractionMode, theta_deg):
        """Interpolated ``(beta, psi_deg)`` at ``|theta_deg|``."""
        theta = np.abs(np.asarray(theta_deg, dtype=float))
        if np.any(theta >= 90.0):
            raise DomainError("incident elevation must satisfy |theta| < 90 degrees")
        beta, psi = self.curve(state, mode).sample(theta)
        if beta.ndim == 0:
            return float(beta), float(psi)
        return beta, psi

    def to_rows(self) -> list[tuple[str, str, float, float, float]]:
        out = []
        for (state, mode), c in self.curves.items():
            out += [(state.value, mode.value, float(t), float(p), float(b))
                    for t, p, b in zip(c.theta, c.psi, c.beta)]
        return out

    def shifted(self, mode: InteractionMode, offset_deg: float) -> "ElementResponseTable":
        """Copy with ``offset_deg`` added to both states' phases for ``mode``."""
        rows = [(s, m, t, p + (offset_deg if m == mode.value else 0.0), b)
                for s, m, t, p, b in self.to_rows()]
        return ElementResponseTable.from_rows(rows)


@dataclass(frozen=True)
class SurfaceConfiguration:
    """ON/OFF state of every element, indexed like the grid."""

    states: tuple[ElementState, ...]

    def __post_init__(self):
        states = tuple(s if isinstance(s, ElementState) else ElementState.parse(s) for s in self.states)
        if not states:
            raise DomainError("configuration needs at least one element")
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.states)

    @classmethod
    def from_mask(cls, on_mask) -> "SurfaceConfiguration":
        return cls(tuple(ElementState.ON if b else ElementState.OFF for b in np.asarray(on_mask, bool)))

    @classmethod
    def from_bits(cls, bits: str) -> "SurfaceConfiguration":
        """``"1"`` is ON, ``"0"`` is OFF; whitespace and underscores are ignored."""
        clean = "".join(ch for ch in bits if not ch.isspace() and ch != "_")
        if not clean or set(clean) - {"0", "1"}:
            raise ConfigError(f"configuration bits must be a non-empty 0/1 string, got {bits!r}")
        return cls.from_mask([ch == "1" for ch in clean])

    @classmethod
    def uniform(cls, m: int, state: ElementState = ElementState.OFF) -> "SurfaceConfiguration":
        return cls((state,) * m)

    @property
    def on_mask(self) -> np.ndarray:
        return np.array([s is ElementState.ON for s in self.states], dtype=bool)

    @property
    def bits(self) -> str:
        return "".join("1" if s is ElementState.ON else "0" for s in self.states)


@dataclass(frozen=True)
class Gamma:
    """Single-angle response coefficient; ``psi_deg`` is the tabulated phase as stored."""

    beta: float
    psi_deg: float

    @property
    def value(self) -> complex:
        psi = math.radians(self.psi_deg)
        return self.beta * complex(math.cos(psi), math.sin(psi))

    def __complex__(self) -> complex:
        return self.value


def lookup_gamma(table: ElementResponseTable, state: ElementState, mode: InteractionMode,
                 theta_inc_deg: float) -> Gamma:
    beta, psi = table.sample(state, mode, theta_inc_deg)
    return Gamma(beta, psi)


def _composed(table, state, mode, theta_i, theta_r, rule):
    """Amplitude and phase (degrees) of the two-angle coefficient."""
    b_i, p_i = table.sample(state, mode, theta_i)
    b_r, p_r = table.sample(state, mode, theta_r)
    if rule is GammaRule.AVERAGE:
        return 0.5 * (b_i + b_r), 0.5 * (p_i + p_r)
    b_0, p_0 = table.sample(state, mode, 0.0)
    if b_0 == 0.0:
        raise DomainError("offset-product rule needs a non-zero amplitude at 0 deg")
    return (b_i * b_r) / b_0, (p_i + p_r) - p_0


def element_gain_array(params: ElementPatternParams, table: ElementResponseTable, on_mask,
                       mode: InteractionMode, theta_inc_deg, theta_dep_deg,
                       rule: GammaRule = GammaRule.OFFSET_PRODUCT) -> np.ndarray:
    """Vectorized element response.

    ``on_mask`` selects the ON state per entry; all array arguments broadcast
    together. Elevations may be signed; only ``|theta|`` matters.
    """
    on = np.asarray(on_mask, dtype=bool)
    ti = np.abs(np.asarray(theta_inc_deg, dtype=float))
    tr = np.abs(np.asarray(theta_dep_deg, dtype=float))
    on, ti, tr = np.broadcast_arrays(on, ti, tr)
    taper = radiation_taper(params, ti) * radiation_taper(params, tr)
    amp = np.sqrt(params.gain * params.area_m2 * taper)
    b_on, p_on = _composed(table, ElementState.ON, mode, ti, tr, rule)
    b_off, p_off = _composed(table, ElementState.OFF, mode, ti, tr, rule)
    beta = np.where(on, b_on, b_off)
    psi = np.radians(np.where(on, p_on, p_off))
    return amp * beta * (np.cos(psi) + 1j * np.sin(psi))


def element_gain(params: ElementPatternParams, table: ElementResponseTable, state: ElementState,
                 mode: InteractionMode, inc: SphericalAngle, dep: SphericalAngle, *,
                 inc_side: Side | None = None, dep_side: Side | None = None,
                 rule: GammaRule = GammaRule.OFFSET_PRODUCT) -> complex:
    """Response ``g`` for one element; symmetric under swapping ``inc`` and ``dep``.

    When both sides are given they must agree with ``mode``: same side for
    reflection, opposite sides for refraction.
    """
    if inc_side is not None and dep_side is not None and mode_between(inc_side, dep_side) is not mode:
        raise DomainError(f"{mode.value} requested for endpoints on "
                          f"{inc_side.value}/{dep_side.value} sides")
    g = element_gain_array(params, table, state is ElementState.ON, mode,
                           inc.elevation_deg, dep.elevation_deg, rule)
    return complex(g)
