"""Declarative experiment descriptions loaded from INI-style text files.

Grammar: standard ``configparser`` sections and ``key = value`` lines, ``;``
or ``#`` comments.  Numeric values accept plain arithmetic and ``pi``
(``pi/2``, ``2*pi``); lists are comma separated.  Sections and keys:

    [scenario]     name, mode (open_loop | closed_loop), description
    [plant]        profile (paper), model (linear | nonlinear), output_scale,
                   and any of m_b r_b I_b g L d K_m T_m to override the profile
    [disturbance]  amplitude, frequency, phase, offset, omega_min, omega_max
    [controller]   k, sigma, observer_gains, alpha, rho, internal_model_freq,
                   lead_power, integrator, fade_steps
    [estimator]    K, tau, theta0, warmup, w_threshold
    [switching]    enabled, dwell_window, stability_tol, t_min_switch
    [sim]          step, duration, noise_std, rng_seed, strict_delay
    [output]       dir
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .controller import CompensatorConfig, ControllerConfigError, filter_polynomials
from .estimator import EstimatorConfig, EstimatorConfigError
from .lti import Polynomial, is_hurwitz
from .plants import PROFILES, BallPlateParams, LinearPlant, NonlinearAxisPlant, linearized_tf
from .signals import HarmonicDisturbance
from .simcore import SimConfig
from .switching import SwitchingConfig


class ScenarioError(ValueError):
    """Parse or validation failure; ``problems`` lists every issue found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


ALLOWED = {
    "scenario": {"name", "mode", "description"},
    "plant": {"profile", "model", "output_scale"} | {f.name for f in fields(BallPlateParams)},
    "disturbance": {"amplitude", "frequency", "phase", "offset", "omega_min", "omega_max"},
    "controller": {
        "k",
        "sigma",
        "observer_gains",
        "alpha",
        "rho",
        "internal_model_freq",
        "lead_power",
        "integrator",
        "fade_steps",
    },
    "estimator": {"K", "tau", "theta0", "warmup", "w_threshold"},
    "switching": {"enabled", "dwell_window", "stability_tol", "t_min_switch"},
    "sim": {"step", "duration", "noise_std", "rng_seed", "strict_delay"},
    "output": {"dir"},
}

SWEEPABLE = {
    "K": ("estimator", "K"),
    "tau": ("estimator", "tau"),
    "sigma": ("controller", "sigma"),
    "k": ("controller", "k"),
    "omega": ("disturbance", "frequency"),
}

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or simple arithmetic expression with ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"not a number: {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def parse_bool(text: str) -> bool:
    v = text.strip().lower()
    if v in {"1", "true", "yes", "on"}:
        return True
    if v in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class PlantSpec:
    profile: str = "paper"
    model: str = "linear"
    output_scale: float = 1.0
    params: BallPlateParams = field(default_factory=BallPlateParams)


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: str
    plant: PlantSpec
    disturbance: HarmonicDisturbance
    estimator: EstimatorConfig
    sim: SimConfig
    controller: CompensatorConfig | None = None
    switching: SwitchingConfig = field(default_factory=SwitchingConfig)
    switch_enabled: bool = True
    output_dir: str | None = None
    description: str = ""

    def build_plant(self):
        if self.plant.model == "nonlinear":
            return NonlinearAxisPlant(self.plant.params, self.plant.output_scale)
        return LinearPlant(linearized_tf(self.plant.params), self.plant.output_scale)

    def design_char_poly(self, omega: float) -> Polynomial:
        """Closed-loop polynomial of the implemented filter with an ideal observer."""
        cfg = self.controller
        tf = linearized_tf(self.plant.params)
        num, den = filter_polynomials(cfg, omega)
        return tf.den * den + cfg.k * self.plant.output_scale * (tf.num * num)


def _line_of(text: str, section: str, key: str) -> int | None:
    cur = None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            cur = m.group(1).strip()
            continue
        if cur == section and re.match(rf"{re.escape(key)}\s*[=:]", s, flags=re.IGNORECASE):
            return no
    return None


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, text: str, source: str):
        self.cp = cp
        self.text = text
        self.source = source
        self.problems: list[str] = []

    def where(self, section, key):
        line = _line_of(self.text, section, key)
        return f"{self.source}:{line}" if line else self.source

    def get(self, section, key, conv, default=None):
        if not self.cp.has_option(section, key):
            return default
        raw = self.cp.get(section, key).strip()
        if raw == "":
            return default
        try:
            return conv(raw)
        except ValueError as exc:
            self.problems.append(f"{self.where(section, key)}: [{section}] {key}: {exc}")
            return default


def _floats(text: str) -> tuple[float, ...]:
    return tuple(parse_number(p) for p in text.split(",") if p.strip())


def _int(text: str) -> int:
    v = parse_number(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError([f"parse error: {exc}"]) from exc
    rd = _Reader(cp, text, source)
    for sec in cp.sections():
        if sec not in ALLOWED:
            rd.problems.append(f"{rd.where(sec, '')}: unknown section [{sec}]")
            continue
        for key in cp[sec]:
            if key not in ALLOWED[sec]:
                rd.problems.append(f"{rd.where(sec, key)}: unknown key [{sec}] {key}")

    name = rd.get("scenario", "name", str, Path(source).stem)
    mode = rd.get("scenario", "mode", str, "closed_loop")
    if mode not in {"open_loop", "closed_loop"}:
        rd.problems.append(f"mode must be open_loop or closed_loop, got {mode!r}")
    description = rd.get("scenario", "description", str, "")

    profile = rd.get("plant", "profile", str, "paper")
    base = PROFILES.get(profile)
    if base is None:
        rd.problems.append(f"unknown plant profile {profile!r}")
        base = PROFILES["paper"]
    overrides = {}
    for f in fields(BallPlateParams):
        v = rd.get("plant", f.name, parse_number)
        if v is not None:
            overrides[f.name] = v
    try:
        params = replace(base, **overrides)
    except ValueError as exc:
        rd.problems.append(f"plant: {exc}")
        params = base
    model = rd.get("plant", "model", str, "linear")
    if model not in {"linear", "nonlinear"}:
        rd.problems.append(f"plant model must be linear or nonlinear, got {model!r}")
    output_scale = rd.get("plant", "output_scale", parse_number, 1.0)
    if not output_scale > 0:
        rd.problems.append("output_scale must be positive")
    plant = PlantSpec(profile, model, output_scale, params)

    omega_min = rd.get("disturbance", "omega_min", parse_number, 0.5)
    omega_max = rd.get("disturbance", "omega_max", parse_number, 10.0)
    try:
        dist = HarmonicDisturbance(
            amplitude=rd.get("disturbance", "amplitude", parse_number, 0.0),
            frequency=rd.get("disturbance", "frequency", parse_number, 1.0),
            phase=rd.get("disturbance", "phase", parse_number, 0.0),
            offset=rd.get("disturbance", "offset", parse_number, 0.0),
        )
    except ValueError as exc:
        rd.problems.append(f"disturbance: {exc}")
        dist = HarmonicDisturbance(0.0, 1.0)
    if not omega_min < dist.frequency < omega_max:
        rd.problems.append(
            f"disturbance frequency {dist.frequency:g} must lie in (omega_min, omega_max)"
        )

    est_kwargs = dict(
        gain_K=rd.get("estimator", "K", parse_number, 1.0),
        tau=rd.get("estimator", "tau", parse_number, 0.1),
        theta0=rd.get("estimator", "theta0", parse_number),
        warmup=rd.get("estimator", "warmup", parse_number, 2.0),
        w_threshold=rd.get("estimator", "w_threshold", parse_number, 0.9),
        omega_min=omega_min,
        omega_max=omega_max,
    )
    try:
        est = EstimatorConfig(**est_kwargs)
    except EstimatorConfigError as exc:
        rd.problems.extend(f"estimator: {p}" for p in str(exc).split("; "))
        est = None

    sim = SimConfig(
        step=rd.get("sim", "step", parse_number, 1e-3),
        duration=rd.get("sim", "duration", parse_number, 30.0),
        noise_std=rd.get("sim", "noise_std", parse_number, 0.0),
        rng_seed=rd.get("sim", "rng_seed", _int, 0),
        strict_delay=rd.get("sim", "strict_delay", parse_bool, True),
    )
    rd.problems.extend(f"sim: {p}" for p in sim.violations(est_kwargs["tau"]))

    controller = None
    if mode == "closed_loop":
        rho = rd.get("controller", "rho", _int, 3)
        ctrl_kwargs = dict(
            k=rd.get("controller", "k", parse_number, 1.2),
            sigma=rd.get("controller", "sigma", parse_number, 35.0),
            observer_gains=rd.get("controller", "observer_gains", _floats, (2.0, 5.0)),
            alpha=Polynomial(rd.get("controller", "alpha", _floats, (1.0, 3.0, 1.0))),
            internal_model_freq=rd.get(
                "controller", "internal_model_freq", parse_number, omega_min
            ),
            rho=rho,
            omega_min=omega_min,
            omega_max=omega_max,
            lead_power=rd.get("controller", "lead_power", _int, 2),
            integrator=rd.get("controller", "integrator", parse_bool, True),
            fade_steps=rd.get("controller", "fade_steps", _int, 10),
        )
        try:
            controller = CompensatorConfig(**ctrl_kwargs)
        except ControllerConfigError as exc:
            rd.problems.extend(f"controller: {p}" for p in str(exc).split("; "))

    switch_enabled = rd.get("switching", "enabled", parse_bool, mode == "closed_loop")
    try:
        switching = SwitchingConfig(
            dwell_window=rd.get("switching", "dwell_window", parse_number, 0.5),
            stability_tol=rd.get("switching", "stability_tol", parse_number, 1e-4),
            t_min_switch=rd.get("switching", "t_min_switch", parse_number),
        )
    except ValueError as exc:
        rd.problems.append(f"switching: {exc}")
        switching = SwitchingConfig()

    output_dir = rd.get("output", "dir", str)

    if rd.problems:
        raise ScenarioError(rd.problems)

    scn = Scenario(
        name=name,
        mode=mode,
        plant=plant,
        disturbance=dist,
        estimator=est,
        sim=sim,
        controller=controller,
        switching=switching,
        switch_enabled=switch_enabled,
        output_dir=output_dir,
        description=description,
    )
    if controller is not None:
        poly = scn.design_char_poly(controller.internal_model_freq)
        if not is_hurwitz(poly):
            raise ScenarioError(
                [
                    "closed-loop polynomial is not Hurwitz at the initial internal-model "
                    f"frequency {controller.internal_model_freq:g}"
                ]
            )
    return scn


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        bundled = bundled_path(str(path))
        if bundled is None:
            raise FileNotFoundError(path)
        path = bundled
    return loads_scenario(path.read_text(), source=str(path))


def bundled_names() -> list[str]:
    root = resources.files("harmonic_rejection") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def bundled_path(name: str) -> Path | None:
    root = resources.files("harmonic_rejection") / "scenarios"
    cand = root / f"{name}.ini"
    return Path(str(cand)) if cand.is_file() else None


def with_value(scn: Scenario, parameter: str, value: float) -> Scenario:
    """Copy of ``scn`` with one sweepable scalar replaced, re-validated."""
    if parameter not in SWEEPABLE:
        raise ScenarioError([f"{parameter!r} is not sweepable; choose from {sorted(SWEEPABLE)}"])
    problems: list[str] = []
    try:
        if parameter == "K":
            scn = replace(scn, estimator=replace(scn.estimator, gain_K=value))
        elif parameter == "tau":
            est = replace(scn.estimator, tau=value, theta0=None)
            problems += scn.sim.violations(value)
            scn = replace(scn, estimator=est)
        elif parameter in {"sigma", "k"}:
            if scn.controller is None:
                raise ScenarioError([f"{parameter} needs a closed-loop scenario"])
            scn = replace(scn, controller=replace(scn.controller, **{parameter: value}))
        elif parameter == "omega":
            est = scn.estimator
            if not est.omega_min < value < est.omega_max:
                problems.append(f"omega {value:g} outside (omega_min, omega_max)")
            scn = replace(scn, disturbance=replace(scn.disturbance, frequency=value))
    except (EstimatorConfigError, ControllerConfigError) as exc:
        problems.extend(str(exc).split("; "))
    if problems:
        raise ScenarioError(problems)
    return scn
