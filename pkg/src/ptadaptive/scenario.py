"""Scenario files: YAML documents validated against a strict schema.

Unknown keys are rejected. Errors carry the key path and, when it can be
found, the line and column in the source file.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from .backstepping import AdaptiveState, EpsilonSchedule, GainConfig
from .model import get_model
from .sim import CONTROLLERS, IntegrationOptions, Scenario, SimulationError
from .timescale import make_timescale

SCENARIO_SUFFIX = ".yaml"


class ScenarioError(ValueError):
    """Invalid scenario file; the message is a user-facing diagnostic."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSpec(_Strict):
    name: str
    overrides: dict = {}


class TimeScaleSpec(_Strict):
    kind: Literal["asymptotic", "prescribed_time", "exponential", "super_exponential"]
    T: Optional[float] = None
    lam1: Optional[float] = None
    lam2: Optional[float] = None


class EpsilonSpec(_Strict):
    scale: float = 1.0
    rate: float = -0.1


class GainSpec(_Strict):
    k: list[float]
    Gamma: Union[float, list[list[float]]] = 1.0
    gamma_delta: float = 0.01
    gamma_rho: float = 0.01
    epsilon: Union[float, EpsilonSpec] = 0.1


class InitialSpec(_Strict):
    x: list[float]
    theta_hat: Optional[list[float]] = None
    delta_hat: float = 0.0
    rho_hat: float = 1.0


class IntegrationSpec(_Strict):
    domain: Literal["t", "tau"] = "t"
    h: float = 1e-3
    c_h: float = 1e-2
    eta: Optional[float] = None
    h_tau: float = 1e-2
    t_end: Optional[float] = None
    nonstop: bool = False
    blowup: float = 1e12


class OutputSpec(_Strict):
    dir: str = "out"
    csv: Optional[str] = None
    plot_script: Optional[str] = None
    band: float = 0.01


class ScenarioSpec(_Strict):
    name: str
    model: ModelSpec
    controller: str
    timescale: TimeScaleSpec
    gains: GainSpec
    initial: InitialSpec
    integration: IntegrationSpec = IntegrationSpec()
    output: OutputSpec = OutputSpec()
    description: str = ""

    @field_validator("controller")
    @classmethod
    def _known_controller(cls, v):
        if v not in CONTROLLERS:
            raise ValueError(f"unknown controller {v!r}; expected one of {list(CONTROLLERS)}")
        return v


def _locate(node, loc) -> Optional[yaml.Mark]:
    """Walk a composed YAML node tree along a pydantic error location."""
    mark = node.start_mark if node is not None else None
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for key, val in node.value:
                if key.value == str(part):
                    nxt = (key, val)
                    break
            if nxt is None:
                return mark
            mark = nxt[0].start_mark
            node = nxt[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            mark = node.start_mark
        else:
            return mark
    return mark


def _where(mark: Optional[yaml.Mark], source: str) -> str:
    if mark is None:
        return source
    return f"{source}:{mark.line + 1}:{mark.column + 1}"


def parse_scenario_text(text: str, source: str = "<string>") -> ScenarioSpec:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.MarkedYAMLError as e:
        raise ScenarioError(f"{_where(e.problem_mark, source)}: YAML error: {e.problem}") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: expected a mapping at top level")
    try:
        return ScenarioSpec.model_validate(data)
    except ValidationError as e:
        branches = ("float", "list[list[float]]", "EpsilonSpec")
        errs = [(tuple(p for p in err["loc"] if p not in branches), err) for err in e.errors()]
        # a union reports every branch; keep only the branch that got further
        errs = [(loc, err) for loc, err in errs
                if not any(len(o) > len(loc) and o[:len(loc)] == loc for o, _ in errs)]
        lines = []
        for loc, err in errs:
            key = ".".join(str(p) for p in loc)
            msg = "unknown key" if err["type"] == "extra_forbidden" else err["msg"]
            lines.append(f"{_where(_locate(node, loc), source)}: {key}: {msg}")
        raise ScenarioError("\n".join(dict.fromkeys(lines))) from None


def build_scenario(spec: ScenarioSpec) -> Scenario:
    """Turn a validated spec into a runnable :class:`Scenario`."""
    try:
        model = get_model(spec.model.name, **spec.model.overrides)
        ts_params = {k: v for k, v in spec.timescale.model_dump().items() if k != "kind" and v is not None}
        ts = make_timescale(spec.timescale.kind, **ts_params)
        g = spec.gains
        Gamma = np.asarray(g.Gamma, dtype=float)
        if Gamma.ndim == 0:
            Gamma = float(Gamma) * np.eye(model.q)
        eps = g.epsilon if isinstance(g.epsilon, float) else EpsilonSchedule(g.epsilon.scale, g.epsilon.rate)
        gains = GainConfig(k=tuple(g.k), Gamma=Gamma, gamma_delta=g.gamma_delta, gamma_rho=g.gamma_rho, epsilon=eps)
        ini = spec.initial
        th0 = ini.theta_hat if ini.theta_hat is not None else [0.0] * model.q
        a0 = AdaptiveState(th0, ini.delta_hat, ini.rho_hat)
        opts = IntegrationOptions(**spec.integration.model_dump())
        return Scenario(model, spec.controller, gains, ts, np.asarray(ini.x, dtype=float), a0, opts, name=spec.name)
    except (ValueError, TypeError, SimulationError) as e:
        raise ScenarioError(f"{spec.name}: {e}") from None


def bundled_names() -> list[str]:
    root = resources.files("ptadaptive") / "scenarios"
    return sorted(p.name[: -len(SCENARIO_SUFFIX)] for p in root.iterdir() if p.name.endswith(SCENARIO_SUFFIX))


def resolve(path_or_name: str) -> tuple[str, str]:
    """Return (text, source label) for a file path or a bundled scenario name."""
    p = Path(path_or_name)
    if p.is_file():
        return p.read_text(), str(p)
    name = path_or_name[: -len(SCENARIO_SUFFIX)] if path_or_name.endswith(SCENARIO_SUFFIX) else path_or_name
    res = resources.files("ptadaptive") / "scenarios" / (name + SCENARIO_SUFFIX)
    if res.is_file():
        return res.read_text(), f"<bundled {name}>"
    raise ScenarioError(f"no scenario file {path_or_name!r} and no bundled scenario of that name "
                        f"(bundled: {', '.join(bundled_names())})")


def load_spec(path_or_name: str) -> ScenarioSpec:
    text, source = resolve(path_or_name)
    return parse_scenario_text(text, source)


def load(path_or_name: str) -> Scenario:
    return build_scenario(load_spec(path_or_name))
