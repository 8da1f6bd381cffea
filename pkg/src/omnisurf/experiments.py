"""Batch experiments and their plot-ready artifacts.

Every experiment first computes all of its artifacts in memory as
``{filename: text}`` and only then writes them, so a failure never leaves
half an output set behind.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

import numpy as np

from .beamforming import (
    BeamModel,
    BeamReport,
    PatternSweep,
    SweepGrid,
    beam_reciprocity_experiment,
    compare_beamforming_models,
    configure_surface,
    far_field_pattern,
    main_beam,
)
from .channel import Antenna, Direction, Scenario, check_channel_reciprocity, effective_channel
from .element import InteractionMode, SurfaceConfiguration
from .errors import ConfigError
from .geometry import Side, SphericalAngle, Vec3, unit_vector
from .scenario_io import format_scenario, load_scenario, parse_scenario, random_scenario, scenario_hash

__all__ = [
    "ExperimentKind",
    "ExperimentSpec",
    "run_experiment",
    "render_polar_csv",
    "emit_polar_csv",
    "render_reciprocity_csv",
    "render_beam_report",
    "s21_campaign",
    "S21Row",
    "channel_reciprocity_campaign",
    "bundled_scenario_text",
]


class ExperimentKind(Enum):
    PATTERN = "pattern"
    BEAMFORM = "beamform"
    CHANNEL_RECIPROCITY = "recip-channel"
    BEAM_RECIPROCITY = "recip-beam"
    MODEL_COMPARE = "compare-models"
    S21_CAMPAIGN = "s21-campaign"
    GEN_RANDOM = "gen-random"


@dataclass
class ExperimentSpec:
    """One experiment invocation.

    ``params`` keys by kind (angles in degrees, sides as 'reflection' or
    'refraction'):

    * pattern: incident, incident_side, mode, config (bits) or target/target_side
    * beamform: incident, incident_side, target, target_side
    * recip-channel: config (bits, optional), random (count), tolerance, workers
    * recip-beam: incident, incident_side, mode, target (optional), config (optional)
    * compare-models: incident, incident_side, targets (list), target_side
    * s21-campaign: range_m, elevations, antenna1_elevation
    * gen-random: count
    """

    kind: ExperimentKind
    out_dir: str
    scenario_path: str | None = None
    params: dict = field(default_factory=dict)
    grid_step: float = 1.0
    full_sweep: bool = False
    model: BeamModel = BeamModel.ANGLE_AWARE
    seed: int = 0
    overrides: dict = field(default_factory=dict)

    @property
    def grid(self) -> SweepGrid:
        return SweepGrid.full(self.grid_step) if self.full_sweep else SweepGrid.cut(self.grid_step)


def bundled_scenario_text(name: str) -> str:
    return resources.files("omnisurf").joinpath(f"data/{name}").read_text("utf-8")


def _num(x: float) -> str:
    return format(float(x), ".12g")


def _angle_text(a: SphericalAngle, side: Side | None = None) -> str:
    s = f"{_num(a.elevation_deg)},{_num(a.azimuth_deg)}"
    return f"{s} {side.value}" if side else s


def render_polar_csv(sweep: PatternSweep, *, scenario_id: str = "", model: BeamModel | None = None) -> str:
    """Pattern CSV normalized so the peak row reads 0 dB."""
    mags = np.abs(sweep.field_values)
    peak = float(mags.max()) if len(mags) else 0.0
    scale = 1.0 / peak if peak > 0 else 1.0
    lines = [f"# scenario_hash={scenario_id}",
             f"# model={model.value if model else 'n/a'}",
             f"# mode={sweep.mode.value}",
             f"# incident={_angle_text(sweep.incident, sweep.incident_side)}",
             f"# departure_side={sweep.departure_side.value}",
             "theta_deg,phi_deg,power_db,re,im"]
    for th, ph, v in zip(sweep.theta_deg, sweep.phi_deg, sweep.field_values):
        v = v * scale
        mag = abs(v)
        # +0.0 turns the peak's -0.0 into 0.0
        p_db = 20.0 * math.log10(mag) + 0.0 if mag > 0 else -math.inf
        lines.append(f"{_num(th)},{_num(ph)},{p_db:.6f},{v.real:.9e},{v.imag:.9e}")
    return "\n".join(lines) + "\n"


def emit_polar_csv(sweep: PatternSweep, path: str, **kwargs) -> None:
    _write_all({path: render_polar_csv(sweep, **kwargs)})


def render_reciprocity_csv(report) -> str:
    lines = ["k,u,direction,re,im,abs,phase_deg"]
    for p in report.pairs:
        for name, v in (("downlink", p.downlink), ("uplink", p.uplink)):
            lines.append(f"{p.k},{p.u},{name},{v.real:.17e},{v.imag:.17e},{abs(v):.17e},"
                         f"{math.degrees(math.atan2(v.imag, v.real)):.12f}")
    lines.append(f"# max_rel_err={report.max_rel_err:.3e} tolerance={report.tolerance:.1e} "
                 f"verdict={report.verdict}")
    return "\n".join(lines) + "\n"


def render_beam_report(report: BeamReport, extra: dict | None = None) -> str:
    items = dict(extra or {})
    items.update(report.as_dict())
    out = []
    for k, v in items.items():
        if isinstance(v, float):
            v = _num(v)
        elif v is None:
            v = "none"
        out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"


def _json_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False) + "\n"


def _write_all(files: dict[str, str], append: set[str] = frozenset()) -> None:
    written = []
    try:
        for path, text in files.items():
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            existed = os.path.exists(path)
            with open(path, "a" if path in append else "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            if not (path in append and existed):
                written.append(path)
    except OSError:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise


def _angle(params: dict, key: str, default=None) -> SphericalAngle:
    value = params.get(key, default)
    if value is None:
        raise ConfigError(f"missing parameter {key!r}")
    if isinstance(value, SphericalAngle):
        return value
    if isinstance(value, (int, float)):
        return SphericalAngle(float(value), 0.0)
    try:
        parts = [float(v) for v in str(value).split(",")]
    except ValueError:
        raise ConfigError(f"{key} must be 'theta' or 'theta,phi' in degrees, got {value!r}") from None
    if len(parts) not in (1, 2):
        raise ConfigError(f"{key} must be 'theta' or 'theta,phi' in degrees, got {value!r}")
    return SphericalAngle(parts[0], parts[1] if len(parts) == 2 else 0.0)


def _side(params: dict, key: str, default: Side) -> Side:
    value = params.get(key)
    if value is None:
        return default
    return value if isinstance(value, Side) else Side.parse(str(value))


def _mode(params: dict, default=InteractionMode.REFRACT) -> InteractionMode:
    value = params.get("mode")
    if value is None:
        return default
    return value if isinstance(value, InteractionMode) else InteractionMode.parse(str(value))


def _load(spec: ExperimentSpec, default_name: str | None = None) -> Scenario:
    path = spec.scenario_path
    if path and path.startswith("builtin:"):
        name = path.split(":", 1)[1]
        name = name if name.endswith(".ini") else name + ".ini"
        try:
            text = bundled_scenario_text(name)
        except FileNotFoundError:
            raise ConfigError(f"no bundled scenario named {name!r}") from None
        return parse_scenario(text, source=name, overrides=spec.overrides)
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"scenario file {path!r} not found")
        return load_scenario(path, spec.overrides)
    if default_name is None:
        raise ConfigError("--scenario is required for this experiment")
    return parse_scenario(bundled_scenario_text(default_name), source=default_name,
                          overrides=spec.overrides)


def _config_param(params: dict, scn: Scenario) -> SurfaceConfiguration | None:
    bits = params.get("config")
    if bits is None:
        return None
    cfg = bits if isinstance(bits, SurfaceConfiguration) else SurfaceConfiguration.from_bits(str(bits))
    if len(cfg) != scn.num_elements:
        raise ConfigError(f"configuration has {len(cfg)} bits for {scn.num_elements} elements")
    return cfg


def _out(spec: ExperimentSpec, name: str) -> str:
    return os.path.join(spec.out_dir, name)


# -- individual experiments ------------------------------------------------

def _run_pattern(spec: ExperimentSpec) -> dict[str, str]:
    scn = _load(spec)
    p = spec.params
    incident = _angle(p, "incident")
    side = _side(p, "incident_side", Side.REFLECTION)
    mode = _mode(p)
    cfg = _config_param(p, scn)
    if cfg is None and p.get("target") is not None:
        dep = side if mode is InteractionMode.REFLECT else side.opposite()
        cfg = configure_surface(scn, incident, side, _angle(p, "target"), dep, spec.model)
    if cfg is None:
        cfg = SurfaceConfiguration.uniform(scn.num_elements)
    sweep = far_field_pattern(scn, cfg, incident, side, mode, spec.grid)
    beam = main_beam(sweep)
    return {
        _out(spec, "pattern.csv"): render_polar_csv(sweep, scenario_id=scenario_hash(scn), model=spec.model),
        _out(spec, "beam_report.txt"): render_beam_report(beam, {"config": cfg.bits}),
    }


def _run_beamform(spec: ExperimentSpec) -> dict[str, str]:
    scn = _load(spec)
    p = spec.params
    incident = _angle(p, "incident")
    side = _side(p, "incident_side", Side.REFLECTION)
    target = _angle(p, "target")
    tside = _side(p, "target_side", side.opposite())
    cfg = configure_surface(scn, incident, side, target, tside, spec.model)
    mode = InteractionMode.REFLECT if side is tside else InteractionMode.REFRACT
    sweep = far_field_pattern(scn, cfg, incident, side, mode, spec.grid)
    beam = main_beam(sweep, target)
    extra = {"model": spec.model.value, "incident": _angle_text(incident, side),
             "target": _angle_text(target, tside), "config": cfg.bits}
    log = dict(extra, **beam.as_dict(), kind="beamform", scenario_hash=scenario_hash(scn))
    return {
        _out(spec, "config.txt"): cfg.bits + "\n",
        _out(spec, "pattern.csv"): render_polar_csv(sweep, scenario_id=scenario_hash(scn), model=spec.model),
        _out(spec, "beam_report.txt"): render_beam_report(beam, extra),
        _out(spec, "experiments.jsonl"): _json_line(log),
    }


def _campaign_item(args):
    seed_seq, tolerance = args
    rng = np.random.default_rng(seed_seq)
    scn = random_scenario(rng)
    cfg = SurfaceConfiguration.from_mask(rng.random(scn.num_elements) < 0.5)
    rep = check_channel_reciprocity(scn, cfg, tolerance)
    return scn, rep


def channel_reciprocity_campaign(count: int, seed: int, tolerance: float = 1e-10, workers: int = 1):
    """Seeded random scenarios with random configurations; results in index order."""
    children = np.random.SeedSequence(seed).spawn(count)
    jobs = [(c, tolerance) for c in children]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_campaign_item, jobs))
    return [_campaign_item(j) for j in jobs]


def _run_channel_reciprocity(spec: ExperimentSpec) -> dict[str, str]:
    p = spec.params
    tol = float(p.get("tolerance", 1e-10))
    count = p.get("random")
    if count:
        results = channel_reciprocity_campaign(int(count), spec.seed, tol, int(p.get("workers", 1)))
        lines = ["scenario,elements,antennas,users,direct_link,max_rel_err,verdict"]
        worst = 0.0
        for i, (scn, rep) in enumerate(results):
            worst = max(worst, rep.max_rel_err)
            lines.append(f"{i},{scn.num_elements},{len(scn.bs_antennas)},{len(scn.users)},"
                         f"{scn.direct_link.value},{rep.max_rel_err:.3e},{rep.verdict}")
        passed = sum(rep.passed for _, rep in results)
        verdict = "PASS" if passed == len(results) else "FAIL"
        lines.append(f"# seed={spec.seed} scenarios={len(results)} passed={passed} "
                     f"max_rel_err={worst:.3e} verdict={verdict}")
        return {_out(spec, "campaign.csv"): "\n".join(lines) + "\n",
                _out(spec, "verdict.txt"): f"{verdict} {worst:.3e}\n"}
    scn = _load(spec)
    cfg = _config_param(p, scn)
    if cfg is None:
        rng = np.random.default_rng(spec.seed)
        cfg = SurfaceConfiguration.from_mask(rng.random(scn.num_elements) < 0.5)
    rep = check_channel_reciprocity(scn, cfg, tol)
    return {_out(spec, "reciprocity.csv"): render_reciprocity_csv(rep),
            _out(spec, "verdict.txt"): f"{rep.verdict} {rep.max_rel_err:.3e}\n"}


def _run_beam_reciprocity(spec: ExperimentSpec) -> dict[str, str]:
    scn = _load(spec)
    p = spec.params
    inc = _angle(p, "incident", 60.0)
    side = _side(p, "incident_side", Side.REFLECTION)
    mode = _mode(p)
    target = _angle(p, "target") if p.get("target") is not None else None
    res = beam_reciprocity_experiment(scn, inc, side, mode, spec.grid, target=target,
                                      config=_config_param(p, scn), model=spec.model)
    entry = {
        "kind": "recip-beam",
        "scenario_hash": scenario_hash(scn),
        "model": spec.model.value,
        "mode": mode.value,
        "incident_side": side.value,
        "theta0": inc.elevation_deg, "phi0": inc.azimuth_deg,
        "theta1": res.beam1.main_beam.elevation_deg, "phi1": res.beam1.main_beam.azimuth_deg,
        "theta2": res.beam2.main_beam.elevation_deg, "phi2": res.beam2.main_beam.azimuth_deg,
        "target": None if res.target is None else [res.target.elevation_deg, res.target.azimuth_deg],
        "deviation_deg": round(res.deviation_deg, 9),
        "grid_step": res.grid_step,
        "config": res.config.bits,
        "verdict": res.verdict,
    }
    text = "\n".join(f"{k} = {v}" for k, v in entry.items()) + "\n"
    return {_out(spec, "beam_reciprocity.jsonl"): _json_line(entry),
            _out(spec, "beam_reciprocity.txt"): text}


def _run_model_compare(spec: ExperimentSpec) -> dict[str, str]:
    scn = _load(spec)
    p = spec.params
    inc = _angle(p, "incident", 0.0)
    side = _side(p, "incident_side", Side.REFLECTION)
    tside = _side(p, "target_side", side.opposite())
    targets = p.get("targets") or [p.get("target", 32.0)]
    lines = ["target_theta_deg,target_phi_deg,target_side,model,beam_theta_deg,beam_phi_deg,"
             "pointing_error_deg,target_power_db,gain_loss_db,config"]
    for t in targets:
        target = _angle({"t": t}, "t")
        cmp_ = compare_beamforming_models(scn, inc, side, target, tside, spec.grid)
        for model in (BeamModel.IDEAL_PHASE, BeamModel.ANGLE_AWARE):
            r = cmp_.reports[model]
            lines.append(f"{_num(target.elevation_deg)},{_num(target.azimuth_deg)},{tside.value},"
                         f"{model.value},{_num(r.main_beam.elevation_deg)},{_num(r.main_beam.azimuth_deg)},"
                         f"{r.pointing_error_deg:.6f},{cmp_.target_power_db[model]:.6f},"
                         f"{r.gain_loss_db:.6f},{cmp_.configs[model].bits}")
    return {_out(spec, "model_compare.csv"): "\n".join(lines) + "\n"}


@dataclass(frozen=True)
class S21Row:
    config_id: int
    config_target_deg: float
    config_side: Side
    antenna2_deg: float
    antenna2_side: Side
    s21: complex
    s12: complex
    rel_err: float
    equal: bool


def s21_campaign(scn: Scenario, range_m: float = 1.0, antenna1_deg: float = 30.0,
                 elevations=(30.0, 45.0), tolerance: float = 1e-10) -> list[S21Row]:
    """Two-antenna reciprocity campaign on the surface of ``scn``.

    Antenna 1 (treated as the user) sits at ``antenna1_deg`` in the phi = 0
    plane on the reflection side. Antenna 2 (the base station) is placed at
    each elevation on each side, in the phi = 180 half of the same plane.
    Four configurations steer antenna 1 toward 30/45 deg on the refraction
    side (1, 2) and the reflection side (3, 4). S21 is the uplink
    (antenna 1 -> antenna 2) and S12 the downlink.
    """
    a1_dir = SphericalAngle(antenna1_deg, 0.0)

    def place(angle: SphericalAngle, side: Side) -> Vec3:
        return Vec3(*(range_m * unit_vector(angle, side)))

    a1 = Antenna(place(a1_dir, Side.REFLECTION))
    targets = [(1, elevations[0], Side.REFRACTION), (2, elevations[1], Side.REFRACTION),
               (3, elevations[0], Side.REFLECTION), (4, elevations[1], Side.REFLECTION)]
    rows = []
    for cid, tdeg, tside in targets:
        cfg = configure_surface(scn, a1_dir, Side.REFLECTION, SphericalAngle(tdeg, 180.0), tside)
        for side in (Side.REFLECTION, Side.REFRACTION):
            for el in elevations:
                a2 = Antenna(place(SphericalAngle(el, 180.0), side))
                s = Scenario(scn.frequency_hz, scn.grid, (a2,), (a1,), scn.element_params,
                             scn.response_table, scn.direct_link, scn.gamma_rule)
                s21 = effective_channel(s, cfg, 0, 0, Direction.UPLINK).value
                s12 = effective_channel(s, cfg, 0, 0, Direction.DOWNLINK).value
                err = abs(s21 - s12) / abs(s12) if s12 != 0 else abs(s21)
                rows.append(S21Row(cid, tdeg, tside, el, side, s21, s12, err, err <= tolerance))
    return rows


def _run_s21(spec: ExperimentSpec) -> dict[str, str]:
    scn = _load(spec, "s21_replica.ini")
    p = spec.params
    rows = s21_campaign(scn, float(p.get("range_m", 1.0)), float(p.get("antenna1_elevation", 30.0)),
                        tuple(p.get("elevations", (30.0, 45.0))))
    lines = [f"# scenario_hash={scenario_hash(scn)} range_m={_num(p.get('range_m', 1.0))}",
             "config,config_target_deg,config_side,antenna2_theta_deg,antenna2_side,"
             "s21_abs_db,s21_phase_deg,s12_abs_db,s12_phase_deg,rel_err,equal"]
    for r in rows:
        def db(v):
            return 20.0 * math.log10(abs(v)) if v != 0 else -math.inf
        lines.append(f"{r.config_id},{_num(r.config_target_deg)},{r.config_side.value},"
                     f"{_num(r.antenna2_deg)},{r.antenna2_side.value},"
                     f"{db(r.s21):.9f},{math.degrees(math.atan2(r.s21.imag, r.s21.real)):.9f},"
                     f"{db(r.s12):.9f},{math.degrees(math.atan2(r.s12.imag, r.s12.real)):.9f},"
                     f"{r.rel_err:.3e},{str(r.equal).lower()}")
    verdict = "PASS" if all(r.equal for r in rows) else "FAIL"
    worst = max(r.rel_err for r in rows)
    return {_out(spec, "s21_campaign.csv"): "\n".join(lines) + "\n",
            _out(spec, "verdict.txt"): f"{verdict} {worst:.3e}\n"}


def _run_gen_random(spec: ExperimentSpec) -> dict[str, str]:
    count = int(spec.params.get("count", 1))
    if count < 1:
        raise ConfigError("count must be >= 1")
    files = {}
    for i, child in enumerate(np.random.SeedSequence(spec.seed).spawn(count)):
        scn = random_scenario(np.random.default_rng(child))
        header = f"random scenario {i} of {count}, seed {spec.seed}"
        files[_out(spec, f"scenario_{i:04d}.ini")] = format_scenario(scn, header=header)
    return files


_RUNNERS = {
    ExperimentKind.PATTERN: _run_pattern,
    ExperimentKind.BEAMFORM: _run_beamform,
    ExperimentKind.CHANNEL_RECIPROCITY: _run_channel_reciprocity,
    ExperimentKind.BEAM_RECIPROCITY: _run_beam_reciprocity,
    ExperimentKind.MODEL_COMPARE: _run_model_compare,
    ExperimentKind.S21_CAMPAIGN: _run_s21,
    ExperimentKind.GEN_RANDOM: _run_gen_random,
}


def compute_artifacts(spec: ExperimentSpec) -> dict[str, str]:
    return _RUNNERS[spec.kind](spec)


def run_experiment(spec: ExperimentSpec) -> dict[str, str]:
    """Compute, then write, every artifact of ``spec``; returns ``{path: text}``.

    JSON-lines experiment logs are appended to; all other files are replaced.
    """
    files = compute_artifacts(spec)
    _write_all(files, append={f for f in files if f.endswith(".jsonl")})
    return files
