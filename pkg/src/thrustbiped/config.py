"""Config file schema, validation and scenario resolution.

Configs are TOML (or JSON, which is what the resolved echo uses); unknown
keys are rejected with the offending path and, where possible, the line.
Every parameter has a shipped default; none of the numeric values come
from published data for this platform, so provenance is either
"standard" (physical constants) or "tuned" (implementation defaults).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .contact import GroundParams
from .gait import GaitConfig
from .morphology import RobotMorphology
from .simulate import Disturbance, Scenario
from .tracking import TrackerGains


class ConfigError(ValueError):
    """Schema violation; message names the offending key (and line)."""


@dataclass
class Violation:
    key: str
    message: str
    line: Optional[int] = None

    def __str__(self):
        loc = f" (line {self.line})" if self.line else ""
        return f"{self.key}{loc}: {self.message}"


def _vec3(v):
    a = [float(x) for x in v]
    if len(a) != 3:
        raise TypeError("expected a 3-vector")
    return a


def _mat3(v):
    a = np.asarray(v, dtype=float)
    if a.shape == (3,):
        a = np.diag(a)
    if a.shape != (3, 3):
        raise TypeError("expected a 3x3 matrix or 3-entry diagonal")
    return a.tolist()


# section -> key -> (default, converter, provenance, doc)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "morphology": {
        "l1_B": ([0.0, 0.06, -0.03], _vec3, "tuned", "body origin -> pelvis joint, left [m]"),
        "l2_P": ([0.0, 0.055, -0.04], _vec3, "tuned", "pelvis joint -> hip motor [m]"),
        "l3_H": ([0.0, 0.0, -0.22], _vec3, "tuned", "hip motor -> knee motor [m]"),
        "l4a": (0.03, float, "tuned", "lower-leg linkage fore-aft constant [m]"),
        "l4b": (0.25, float, "tuned", "lower-leg linkage shank length [m]"),
        "lt_B": ([0.0, 0.12, 0.18], _vec3, "tuned", "body origin -> thruster, left [m]"),
        "m_B": (3.0, float, "tuned", "torso mass incl. pelvis motors [kg]"),
        "m_H": (0.6, float, "tuned", "hip motor mass, each [kg]"),
        "m_K": (0.4, float, "tuned", "knee motor mass, each [kg]"),
        "I_B": ([0.040, 0.030, 0.020], _mat3, "tuned", "torso inertia, own frame [kg m^2]"),
        "I_H": ([5e-4, 5e-4, 3e-4], _mat3, "tuned", "hip motor inertia [kg m^2]"),
        "I_K": ([4e-4, 4e-4, 2e-4], _mat3, "tuned", "knee motor inertia [kg m^2]"),
        "g": (9.81, float, "standard", "gravitational acceleration [m/s^2]"),
        "thruster_frame": ("inertial", str, "tuned",
                           "'inertial' or 'body' (forces ride with the torso)"),
    },
    "ground": {
        "k_gp": (8000.0, float, "tuned", "ground spring [N/m]"),
        "k_gd": (300.0, float, "tuned", "ground damper, compression only [N s/m]"),
        "mu_c": (0.7, float, "tuned", "Coulomb friction coefficient"),
        "mu_s": (0.9, float, "tuned", "static friction coefficient"),
        "mu_v": (0.1, float, "tuned", "viscous friction [N s/m]"),
        "v_s": (0.01, float, "tuned", "Stribeck velocity [m/s]"),
    },
    "gait": {
        "t_step": (0.4, float, "tuned", "nominal step period [s]"),
        "step_width": (0.115, float, "tuned", "frontal stance offset [m]"),
        "thrust_fraction": (0.25, float, "tuned", "vertical thrust / weight, < 1"),
        "max_step_length": (0.30, float, "tuned", "step saturation radius [m]"),
        "z0": (0.45, float, "tuned", "held CoM height [m]"),
        "desired_speed": (0.0, float, "tuned", "sagittal speed command [m/s]"),
        "energy_trigger": (None, lambda v: None if v is None else float(v), "tuned",
                           "early-step orbital energy threshold [m^2/s^2]"),
        "min_stance_time": (0.05, float, "tuned", "contact debounce [s]"),
        "late_step_grace": (0.5, float, "tuned", "touchdown wait, fraction of t_step"),
        "double_air_grace": (0.10, float, "tuned", "flight time before fall flag [s]"),
        "swing_apex": (0.03, float, "tuned", "swing clearance [m]"),
        "settle_time": (0.5, float, "tuned", "standing time before stepping [s]"),
    },
    "gains": {
        "kp_hip": (80.0, float, "tuned", "hip torque PD [N m/rad]"),
        "kd_hip": (8.0, float, "tuned", ""),
        "kp_knee": (900.0, float, "tuned", "knee acceleration PD [1/s^2]"),
        "kd_knee": (60.0, float, "tuned", ""),
        "kp_att": (60.0, float, "tuned", "attitude PD [N m/rad]"),
        "kd_att": (10.0, float, "tuned", ""),
        "kp_len": (0.4, float, "tuned", "CoM height servo"),
        "kd_len": (0.6, float, "tuned", ""),
        "kp_bal": (250.0, float, "tuned", "standing balance thrust [N/m]"),
        "kd_bal": (90.0, float, "tuned", ""),
        "max_bal_force": (15.0, float, "tuned", "standing balance clamp [N]"),
        "gravity_ff": (True, bool, "tuned", "stance gravity feedforward"),
        "touchdown_press": (0.004, float, "tuned", "swing press-in at landing [m]"),
        "z_slew": (0.25, float, "tuned", "stance height target rate limit [m/s]"),
        "max_torque": (60.0, float, "tuned", "joint torque clamp [N m]"),
        "max_thrust": (40.0, float, "tuned", "per-thruster clamp [N]"),
    },
    "simulation": {
        "dt": (1e-4, float, "tuned", "physics step [s]"),
        "control_rate": (1000.0, float, "tuned", "controller rate [Hz]"),
        "log_rate": (500.0, float, "tuned", "log sample rate [Hz]"),
    },
}

SCENARIO_KEYS: Dict[str, tuple] = {
    "name": ("scenario", str, "scenario label"),
    "plant": ("vlip", str, "'vlip' or 'full_order'"),
    "duration": (10.0, float, "run length [s]"),
    "seed": (0, int, "reserved for randomized extensions"),
    "stepping": (True, bool, "False: stand on both feet"),
    "initial_stance": ("left", str, "'left' or 'right'"),
    "drop_height": (0.01, float, "full-order start height offset [m]"),
    "stance_stagger": (0.0, float, "standing fore-aft foot split [m]"),
    "vlip_start": ([0.0, 0.0, 0.0, 0.0], lambda v: [float(x) for x in v],
                   "x, y, xdot, ydot relative to the stance point"),
    "post_push_step_budget": (None, lambda v: None if v is None else int(v),
                              "freeze stepping N steps after a push"),
    "step_on_push": (False, bool, "start frozen; a push arms the step timer"),
    "pass_over_margin": (0.02, float, "forward-fall classifier margin [m]"),
    "disturbances": ([], None, "list of {time, impulse}"),
    "gait": ({}, None, "per-scenario gait overrides"),
    "gains": ({}, None, "per-scenario gain overrides"),
    "simulation": ({}, None, "per-scenario dt/rate overrides"),
}


def default_config() -> Dict[str, Any]:
    """Fully-populated config dict with shipped defaults and no scenarios."""
    cfg: Dict[str, Any] = {}
    for section, keys in SCHEMA.items():
        cfg[section] = {
            k: (spec[1](spec[0]) if spec[1] and spec[0] is not None else spec[0])
            for k, spec in keys.items()
        }
    cfg["scenarios"] = []
    return cfg


def provenance() -> Dict[str, str]:
    """Key path -> provenance tag for every schema parameter."""
    return {
        f"{section}.{k}": spec[2]
        for section, keys in SCHEMA.items()
        for k, spec in keys.items()
    }


def _find_line(text: Optional[str], key: str) -> Optional[int]:
    if not text:
        return None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if key in stripped:
            return i
    return None


def load_file(path) -> Dict[str, Any]:
    """Parse a TOML or JSON config file into a raw dict."""
    p = Path(path)
    data = p.read_bytes()
    if p.suffix == ".json" or p.name.endswith(".resolved"):
        return json.loads(data.decode())
    return tomllib.loads(data.decode())


def merge_config(raw: Dict[str, Any], source_text: Optional[str] = None) -> Dict[str, Any]:
    """Overlay a raw config onto the defaults, rejecting unknown keys."""
    cfg = default_config()
    violations: List[Violation] = []
    for section, content in raw.items():
        if section in ("scenarios", "provenance"):  # provenance echo is informational
            continue
        if section not in SCHEMA:
            violations.append(Violation(section, "unknown section",
                                        _find_line(source_text, section)))
            continue
        if not isinstance(content, dict):
            violations.append(Violation(section, "expected a table"))
            continue
        for k, v in content.items():
            if k not in SCHEMA[section]:
                violations.append(Violation(f"{section}.{k}", "unknown key",
                                            _find_line(source_text, k)))
                continue
            conv = SCHEMA[section][k][1]
            try:
                cfg[section][k] = conv(v) if conv else v
            except (TypeError, ValueError) as exc:
                violations.append(Violation(f"{section}.{k}", str(exc),
                                            _find_line(source_text, k)))
    for i, sc in enumerate(raw.get("scenarios", [])):
        merged = {k: spec[0] for k, spec in SCENARIO_KEYS.items()}
        for k, v in sc.items():
            if k not in SCENARIO_KEYS:
                violations.append(Violation(f"scenarios[{i}].{k}", "unknown key",
                                            _find_line(source_text, k)))
                continue
            conv = SCENARIO_KEYS[k][1]
            try:
                merged[k] = conv(v) if conv else v
            except (TypeError, ValueError) as exc:
                violations.append(Violation(f"scenarios[{i}].{k}", str(exc),
                                            _find_line(source_text, k)))
        for sub in ("gait", "gains", "simulation"):
            for k in merged[sub]:
                if k not in SCHEMA[sub]:
                    violations.append(Violation(f"scenarios[{i}].{sub}.{k}", "unknown key",
                                                _find_line(source_text, k)))
        cfg["scenarios"].append(merged)
    if violations:
        raise ConfigError("; ".join(str(v) for v in violations))
    return cfg


def load_config(path) -> Dict[str, Any]:
    p = Path(path)
    text = p.read_text()
    return merge_config(load_file(p), source_text=text)


def physics_violations(cfg: Dict[str, Any]) -> List[Violation]:
    """Physical-sanity checks on a merged config (aggregated, not first-fail)."""
    out: List[Violation] = []
    mo, gr, ga, si = cfg["morphology"], cfg["ground"], cfg["gait"], cfg["simulation"]
    for key in ("m_B", "m_H", "m_K"):
        if mo[key] <= 0.0:
            out.append(Violation(f"morphology.{key}", "mass must be positive"))
    for key in ("l4a", "l4b"):
        if mo[key] <= 0.0:
            out.append(Violation(f"morphology.{key}", "must be positive"))
    for key in ("I_B", "I_H", "I_K"):
        M = np.asarray(mo[key])
        if np.linalg.norm(M - M.T) > 1e-12 or np.any(np.linalg.eigvalsh(M) <= 0.0):
            out.append(Violation(f"morphology.{key}",
                                 "inertia must be symmetric positive definite"))
    if mo["g"] < 0.0:
        out.append(Violation("morphology.g", "must be non-negative"))
    if mo["thruster_frame"] not in ("inertial", "body"):
        out.append(Violation("morphology.thruster_frame",
                             "must be 'inertial' or 'body'"))
    if gr["k_gp"] <= 0.0:
        out.append(Violation("ground.k_gp", "must be positive"))
    if gr["k_gd"] < 0.0:
        out.append(Violation("ground.k_gd", "must be non-negative"))
    if not (gr["mu_s"] >= gr["mu_c"] >= 0.0):
        out.append(Violation("ground.mu_s", "Stribeck law needs mu_s >= mu_c >= 0"))
    if gr["v_s"] <= 0.0:
        out.append(Violation("ground.v_s", "must be positive"))
    if not 0.0 <= ga["thrust_fraction"] < 1.0:
        out.append(Violation("gait.thrust_fraction",
                             "effective gravity g' = g (1 - fraction) must stay positive"))
    if ga["t_step"] <= 0.0:
        out.append(Violation("gait.t_step", "must be positive"))
    if ga["z0"] <= 0.0:
        out.append(Violation("gait.z0", "must be positive"))
    if si["dt"] <= 0.0:
        out.append(Violation("simulation.dt", "must be positive"))
    elif si["control_rate"] * si["dt"] > 1.0 + 1e-12:
        out.append(Violation("simulation.control_rate",
                             "dt * control_rate must not exceed 1"))
    if si["log_rate"] > si["control_rate"]:
        out.append(Violation("simulation.log_rate", "must not exceed control_rate"))
    names = [sc["name"] for sc in cfg["scenarios"]]
    for name in set(names):
        if names.count(name) > 1:
            out.append(Violation(f"scenarios.{name}", "duplicate scenario name"))
    for i, sc in enumerate(cfg["scenarios"]):
        if sc["plant"] not in ("vlip", "full_order"):
            out.append(Violation(f"scenarios[{i}].plant", "must be 'vlip' or 'full_order'"))
        if sc["duration"] <= 0.0:
            out.append(Violation(f"scenarios[{i}].duration", "must be positive"))
        tf = sc["gait"].get("thrust_fraction", ga["thrust_fraction"])
        if not 0.0 <= tf < 1.0:
            out.append(Violation(f"scenarios[{i}].gait.thrust_fraction",
                                 "effective gravity g' must stay positive"))
    return out


def validate_config(path) -> List[Violation]:
    """Schema + physics report for a config file (empty list = clean)."""
    p = Path(path)
    text = p.read_text()
    try:
        cfg = merge_config(load_file(p), source_text=text)
    except ConfigError as exc:
        return [Violation("config", str(exc))]
    return physics_violations(cfg)


def _morphology_from(cfg) -> RobotMorphology:
    mo = cfg["morphology"]
    return RobotMorphology(
        l1_B=mo["l1_B"], l2_P=mo["l2_P"], l3_H=mo["l3_H"],
        l4a=mo["l4a"], l4b=mo["l4b"], lt_B=mo["lt_B"],
        m_B=mo["m_B"], m_H=mo["m_H"], m_K=mo["m_K"],
        I_B=np.asarray(mo["I_B"]), I_H=np.asarray(mo["I_H"]),
        I_K=np.asarray(mo["I_K"]), g=mo["g"],
        thruster_frame=mo["thruster_frame"],
    )


def resolve_scenario(cfg: Dict[str, Any], name: str) -> tuple:
    """(Scenario, resolved dict echo) for one named scenario."""
    matches = [sc for sc in cfg["scenarios"] if sc["name"] == name]
    if not matches:
        available = ", ".join(sc["name"] for sc in cfg["scenarios"]) or "(none)"
        raise ConfigError(f"scenario {name!r} not found; available: {available}")
    sc = matches[0]
    gait_d = dict(cfg["gait"]);     gait_d.update(sc["gait"])
    gains_d = dict(cfg["gains"]);   gains_d.update(sc["gains"])
    sim_d = dict(cfg["simulation"]); sim_d.update(sc["simulation"])

    scenario = Scenario(
        name=sc["name"],
        plant=sc["plant"],
        duration=sc["duration"],
        dt=sim_d["dt"],
        control_rate=sim_d["control_rate"],
        log_rate=sim_d["log_rate"],
        seed=sc["seed"],
        morphology=_morphology_from(cfg),
        ground=GroundParams(**cfg["ground"]),
        gait=GaitConfig(**gait_d),
        gains=TrackerGains(**gains_d),
        disturbances=[Disturbance(time=float(d["time"]), impulse=_vec3(d["impulse"]))
                      for d in sc["disturbances"]],
        stepping=sc["stepping"],
        initial_stance=sc["initial_stance"],
        drop_height=sc["drop_height"],
        stance_stagger=sc["stance_stagger"],
        vlip_start=tuple(sc["vlip_start"]),
        post_push_step_budget=sc["post_push_step_budget"],
        step_on_push=sc["step_on_push"],
        pass_over_margin=sc["pass_over_margin"],
    )
    resolved = {
        "morphology": cfg["morphology"],
        "ground": cfg["ground"],
        "gait": gait_d,
        "gains": gains_d,
        "simulation": sim_d,
        "scenarios": [{k: v for k, v in sc.items() if k not in ("gait", "gains", "simulation")}
                      | {"gait": {}, "gains": {}, "simulation": {}}],
        "provenance": provenance(),
    }
    return scenario, resolved


def set_by_path(cfg: Dict[str, Any], path: str, value) -> None:
    """Assign a dotted-path parameter (e.g. 'gait.thrust_fraction')."""
    parts = path.split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"parameter path {path!r} does not resolve")
        node = node[p]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"parameter path {path!r} does not resolve")
    section = parts[0]
    if section in SCHEMA and len(parts) == 2:
        conv = SCHEMA[section][leaf][1]
        node[leaf] = conv(value) if conv else value
    else:
        node[leaf] = type(node[leaf])(value) if node[leaf] is not None else value


def shipped_default_path() -> Path:
    return Path(__file__).parent / "data" / "default.toml"
