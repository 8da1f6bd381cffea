"""Scenario files and the seeded random-scenario generator.

Scenario files are sectioned key/value text::

    # comments start with '#'
    [scenario]
    frequency_hz = 3.6e9
    direct_link = blocked          # or free-space
    gamma_rule = offset-product    # or average

    [ios]
    rows = 3
    cols = 3
    dx = 0.0416
    dy = 0.0416

    [element]
    gain = 1.0
    area_m2 = 0.00173              # defaults to dx * dy
    exponent_n = 1

    [antenna]                      # repeat once per base-station antenna
    position = 0.5, 0.0, 0.866
    gain = 1.0
    exponent = 0

    [user]                         # repeat once per user
    position = -0.5, 0.0, -0.866

    [table]
    file = my_table.csv            # optional, relative to the scenario file

Units are meters, hertz and degrees throughout.
"""

from __future__ import annotations

import hashlib
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .channel import SPEED_OF_LIGHT, Antenna, DirectLinkModel, Scenario
from .element import ElementPatternParams, ElementResponseTable, GammaRule
from .errors import ConfigError, DomainError
from .geometry import IosGrid, Vec3

__all__ = [
    "parse_scenario",
    "load_scenario",
    "format_scenario",
    "scenario_hash",
    "random_scenario",
    "RawSection",
    "parse_sections",
]

_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_][\w-]*)\s*\]$")
_REPEATABLE = {"antenna", "user"}
_KNOWN = {
    "scenario": {"frequency_hz", "direct_link", "gamma_rule"},
    "ios": {"rows", "cols", "dx", "dy"},
    "element": {"gain", "area_m2", "exponent_n"},
    "antenna": {"position", "gain", "exponent"},
    "user": {"position", "gain", "exponent"},
    "table": {"file"},
}


@dataclass
class RawSection:
    name: str
    line: int
    values: dict[str, tuple[str, int]] = field(default_factory=dict)


def parse_sections(text: str, source: str | None = None) -> list[RawSection]:
    sections: list[RawSection] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1).lower()
            if name not in _KNOWN:
                raise ConfigError(f"unknown section [{name}]", lineno, source)
            if name in seen and name not in _REPEATABLE:
                raise ConfigError(f"section [{name}] may appear only once", lineno, source)
            seen.add(name)
            sections.append(RawSection(name, lineno))
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' or '[section]', got {line!r}", lineno, source)
        if not sections:
            raise ConfigError("key outside of any section", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        sec = sections[-1]
        if key not in _KNOWN[sec.name]:
            raise ConfigError(f"unknown key {key!r} in [{sec.name}]", lineno, source)
        if key in sec.values:
            raise ConfigError(f"duplicate key {key!r} in [{sec.name}]", lineno, source)
        sec.values[key] = (value, lineno)
    return sections


class _Reader:
    def __init__(self, source):
        self.source = source

    def number(self, sec: RawSection, key: str, default=None, *, integer=False):
        if key not in sec.values:
            if default is None:
                raise ConfigError(f"{key} required in [{sec.name}]", sec.line, self.source)
            return default
        text, line = sec.values[key]
        try:
            value = int(text) if integer else float(text)
        except ValueError:
            kind = "an integer" if integer else "a number"
            raise ConfigError(f"{key} must be {kind}, got {text!r}", line, self.source) from None
        if not math.isfinite(value):
            raise ConfigError(f"{key} must be finite", line, self.source)
        return value

    def position(self, sec: RawSection) -> Vec3:
        if "position" not in sec.values:
            raise ConfigError(f"position required in [{sec.name}]", sec.line, self.source)
        text, line = sec.values["position"]
        parts = [p.strip() for p in text.split(",")]
        try:
            x, y, z = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"position must be 'x, y, z', got {text!r}", line, self.source) from None
        return Vec3(x, y, z)

    def choice(self, sec, key, enum, default):
        if key not in sec.values:
            return default
        text, line = sec.values[key]
        try:
            return enum(text.strip().lower())
        except ValueError:
            allowed = ", ".join(e.value for e in enum)
            raise ConfigError(f"{key} must be one of {allowed}, got {text!r}", line, self.source) from None


def _apply_overrides(sections: list[RawSection], overrides: dict[str, str]) -> None:
    """``{"section.key": value}`` replaces or adds a key in the first such section."""
    for dotted, value in overrides.items():
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        name, key = dotted.lower().split(".", 1)
        if name not in _KNOWN or key not in _KNOWN[name]:
            raise ConfigError(f"unknown override target {dotted!r}")
        match = [s for s in sections if s.name == name]
        if not match:
            sec = RawSection(name, 0)
            sections.append(sec)
        else:
            sec = match[0]
        sec.values[key] = (str(value), 0)


def parse_scenario(text: str, *, source: str | None = None, base_dir: str | None = None,
                   overrides: dict[str, str] | None = None) -> Scenario:
    """Parse and fully validate a scenario file.

    Errors carry the offending line; ``overrides`` (from command-line flags)
    take precedence over file values.
    """
    sections = parse_sections(text, source)
    if overrides:
        _apply_overrides(sections, overrides)
    rd = _Reader(source)
    by_name: dict[str, RawSection] = {}
    for s in sections:
        by_name.setdefault(s.name, s)

    scn_sec = by_name.get("scenario")
    if scn_sec is None or "frequency_hz" not in scn_sec.values:
        raise ConfigError("frequency_hz required", scn_sec.line if scn_sec else None, source)
    freq = rd.number(scn_sec, "frequency_hz")
    if freq <= 0:
        raise ConfigError("frequency_hz must be positive", scn_sec.values["frequency_hz"][1], source)
    direct = rd.choice(scn_sec, "direct_link", DirectLinkModel, DirectLinkModel.BLOCKED)
    rule = rd.choice(scn_sec, "gamma_rule", GammaRule, GammaRule.OFFSET_PRODUCT)

    ios = by_name.get("ios")
    if ios is None:
        raise ConfigError("[ios] section required", None, source)
    rows = rd.number(ios, "rows", integer=True)
    cols = rd.number(ios, "cols", integer=True)
    dx = rd.number(ios, "dx")
    dy = rd.number(ios, "dy")
    try:
        grid = IosGrid(rows, cols, dx, dy)
    except DomainError as exc:
        raise ConfigError(str(exc), ios.line, source) from None

    el = by_name.get("element") or RawSection("element", 0)
    try:
        params = ElementPatternParams(rd.number(el, "gain", 1.0),
                                      rd.number(el, "area_m2", grid.element_area),
                                      rd.number(el, "exponent_n", 1.0))
    except DomainError as exc:
        raise ConfigError(str(exc), el.line or None, source) from None

    tab = by_name.get("table")
    if tab is not None and "file" in tab.values:
        path, line = tab.values["file"]
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            table = ElementResponseTable.from_file(path)
        except FileNotFoundError:
            raise ConfigError(f"table file {path!r} not found", line, source) from None
    else:
        table = ElementResponseTable.default()

    def antennas(kind: str, label: str) -> list[Antenna]:
        out = []
        for i, sec in enumerate(s for s in sections if s.name == kind):
            pos = rd.position(sec)
            gain = rd.number(sec, "gain", 1.0)
            exponent = rd.number(sec, "exponent", 0.0)
            where = sec.values.get("position", ("", sec.line))[1] or sec.line
            if pos.z == 0.0:
                raise ConfigError(f"{label} {i} at {pos.x:g},{pos.y:g},0 lies on the surface plane",
                                  where, source)
            if gain <= 0:
                raise ConfigError(f"{label} {i} gain must be positive", sec.values["gain"][1], source)
            if exponent < 0:
                raise ConfigError(f"{label} {i} exponent must be >= 0", sec.values["exponent"][1], source)
            out.append(Antenna(pos, gain, exponent))
        if not out:
            raise ConfigError(f"at least one [{kind}] section required", None, source)
        return out

    bs = antennas("antenna", "antenna")
    users = antennas("user", "user")
    return Scenario(freq, grid, tuple(bs), tuple(users), params, table, direct, rule)


def load_scenario(path: str, overrides: dict[str, str] | None = None) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, source=path, base_dir=os.path.dirname(os.path.abspath(path)),
                          overrides=overrides)


def _fmt(x: float) -> str:
    return repr(float(x))


def format_scenario(scn: Scenario, *, table_file: str | None = None, header: str | None = None) -> str:
    """Render a scenario in the file format; ``parse_scenario`` round-trips it."""
    lines = []
    if header:
        lines += [f"# {ln}" for ln in header.splitlines()]
    lines += ["[scenario]", f"frequency_hz = {_fmt(scn.frequency_hz)}",
              f"direct_link = {scn.direct_link.value}", f"gamma_rule = {scn.gamma_rule.value}", "",
              "[ios]", f"rows = {scn.grid.rows}", f"cols = {scn.grid.cols}",
              f"dx = {_fmt(scn.grid.dx)}", f"dy = {_fmt(scn.grid.dy)}", "",
              "[element]", f"gain = {_fmt(scn.element_params.gain)}",
              f"area_m2 = {_fmt(scn.element_params.area_m2)}",
              f"exponent_n = {_fmt(scn.element_params.exponent_n)}", ""]
    for kind, group in (("antenna", scn.bs_antennas), ("user", scn.users)):
        for a in group:
            p = a.position
            lines += [f"[{kind}]", f"position = {_fmt(p.x)}, {_fmt(p.y)}, {_fmt(p.z)}",
                      f"gain = {_fmt(a.gain)}", f"exponent = {_fmt(a.exponent)}", ""]
    if table_file:
        lines += ["[table]", f"file = {table_file}", ""]
    return "\n".join(lines)


def scenario_hash(scn: Scenario) -> str:
    """Short content hash over the scenario and its response table."""
    h = hashlib.sha256(format_scenario(scn).encode())
    for row in sorted(scn.response_table.to_rows()):
        h.update(repr(row).encode())
    return h.hexdigest()[:16]


def random_scenario(rng: np.random.Generator, *, max_grid: int = 8, max_antennas: int = 4,
                    max_users: int = 4, box: float = 1.0, min_abs_z: float = 0.05,
                    table: ElementResponseTable | None = None) -> Scenario:
    """Random geometry for property campaigns.

    Base-station antennas sit on the reflection side; users are spread over
    both sides with at least one on each when there are two or more. All
    coordinates are uniform in ``[-box, box]`` with ``|z| >= min_abs_z``.
    """
    freq = float(rng.uniform(1e9, 30e9))
    lam = SPEED_OF_LIGHT / freq
    grid = IosGrid(int(rng.integers(1, max_grid + 1)), int(rng.integers(1, max_grid + 1)),
                   float(rng.uniform(0.1, 0.6) * lam), float(rng.uniform(0.1, 0.6) * lam))

    def point(sign: float) -> Vec3:
        x, y = rng.uniform(-box, box, size=2)
        z = sign * rng.uniform(min_abs_z, box)
        return Vec3(float(x), float(y), float(z))

    def antenna(sign):
        return Antenna(point(sign), float(rng.uniform(0.5, 10.0)), float(rng.integers(0, 4)))

    bs = [antenna(1.0) for _ in range(int(rng.integers(1, max_antennas + 1)))]
    n_users = int(rng.integers(1, max_users + 1))
    signs = [1.0 if rng.random() < 0.5 else -1.0 for _ in range(n_users)]
    if n_users >= 2 and len(set(signs)) == 1:
        signs[0] = -signs[0]
    users = [antenna(s) for s in signs]
    params = ElementPatternParams(float(rng.uniform(0.5, 4.0)), grid.element_area, float(rng.integers(0, 4)))
    direct = DirectLinkModel.FREE_SPACE if rng.random() < 0.5 else DirectLinkModel.BLOCKED
    return Scenario(freq, grid, tuple(bs), tuple(users), params,
                    table or ElementResponseTable.default(), direct)
