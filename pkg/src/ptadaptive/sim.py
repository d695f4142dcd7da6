"""Closed-loop simulation through the singular gain.

Integration is classic RK4 on a node grid fixed ahead of time. In the t-domain
the step shrinks like c_h / g(t), so near the prescribed time it is
proportional to T - t. In the tau-domain the step is uniform and the
right-hand side is divided by beta(tau).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .backstepping import (AdaptiveState, ControlOutput, GainConfig, control_law,
                           validate_gains)
from .model import StrictFeedbackModel
from .normalform import GainPolynomialFilter, check_filter_gains, control_law_nf
from .timescale import PrescribedTime, TimeScale

CONTROLLERS = ("theorem1", "theorem2", "corollary3", "corollary4", "asymptotic")
_REQUIRED_KIND = {
    "theorem2": "prescribed_time",
    "corollary3": "exponential",
    "corollary4": "super_exponential",
    "asymptotic": "asymptotic",
}


class SimulationError(RuntimeError):
    """Raised on blow-up, refused configurations, or inconsistent scenarios."""


@dataclass
class IntegrationOptions:
    domain: str = "t"
    h: float = 1e-3
    c_h: float = 1e-2
    eta: float | None = None          # default 1e-3 * T
    h_tau: float = 1e-2
    t_end: float | None = None        # default T - eta, or 5 s without a horizon
    nonstop: bool = False
    blowup: float = 1e12
    record_times: tuple = ()

    def __post_init__(self):
        if self.domain not in ("t", "tau"):
            raise ValueError("domain must be 't' or 'tau'")
        if not (self.h > 0 and self.c_h > 0 and self.h_tau > 0):
            raise ValueError("step sizes must be positive")
        if self.eta is not None and not self.eta > 0:
            raise ValueError("stop margin eta must be positive")


@dataclass
class Scenario:
    model: StrictFeedbackModel
    controller: str
    gains: GainConfig
    timescale: TimeScale
    x0: np.ndarray
    a0: AdaptiveState
    options: IntegrationOptions = field(default_factory=IntegrationOptions)
    name: str = "scenario"

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.controller not in CONTROLLERS:
            raise SimulationError(f"unknown controller {self.controller!r}; expected one of {CONTROLLERS}")
        need = _REQUIRED_KIND.get(self.controller)
        if need is not None and self.timescale.kind != need:
            raise SimulationError(f"controller {self.controller} needs a {need} time scale, got {self.timescale.kind}")
        if self.x0.shape != (self.model.n,):
            raise SimulationError(f"x0 must have {self.model.n} entries")
        if self.a0.theta_hat.shape != (self.model.q,):
            raise SimulationError(f"theta_hat(0) must have {self.model.q} entries")

    @property
    def uses_filter(self) -> bool:
        if self.controller == "theorem1":
            return False
        if self.controller == "asymptotic":
            return self.model.normal_form
        return True

    @property
    def eta(self) -> float | None:
        T = self.timescale.horizon
        if T is None:
            return None
        return self.options.eta if self.options.eta is not None else 1e-3 * T

    @property
    def switch_time(self) -> float | None:
        """Time at which the loop is opened (prescribed-time runs only)."""
        T = self.timescale.horizon
        return None if T is None else T - self.eta

    @property
    def t_end(self) -> float:
        o = self.options
        T = self.timescale.horizon
        if T is None:
            return o.t_end if o.t_end is not None else 5.0
        if o.t_end is None:
            return 2.0 * T if o.nonstop else T - self.eta
        if o.t_end > T - self.eta + 1e-15 and not o.nonstop:
            raise SimulationError(f"t_end={o.t_end} exceeds T - eta = {T - self.eta}; enable nonstop to run past it")
        return o.t_end


@dataclass
class Trajectory:
    t: np.ndarray
    tau: np.ndarray
    x: np.ndarray
    u: np.ndarray
    u_bar: np.ndarray
    theta_hat: np.ndarray
    delta_hat: np.ndarray
    rho_hat: np.ndarray
    K: np.ndarray
    surface: np.ndarray
    z: np.ndarray
    Psi: np.ndarray
    closed_loop: np.ndarray
    name: str = ""

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.theta_hat.shape[1]

    def __len__(self):
        return len(self.t)

    def at(self, t: float) -> int:
        """Index of the recorded sample closest to t."""
        return int(np.argmin(np.abs(self.t - t)))


def _law(scenario: Scenario) -> Callable:
    m, cfg, ts = scenario.model, scenario.gains, scenario.timescale
    if scenario.uses_filter:
        filt = GainPolynomialFilter(cfg.k[:-1], m.n)
        return lambda x, a, t: control_law_nf(m, cfg, x, a, t, ts, filt)
    return lambda x, a, t: control_law(m, cfg, x, a, t, ts)


def check_scenario(scenario: Scenario) -> list[str]:
    rep = validate_gains(scenario.gains, scenario.model, scenario.a0.rho_hat)
    out = list(rep.violations)
    if scenario.uses_filter:
        if not scenario.model.normal_form:
            out.append(f"model {scenario.model.name} is not in normal form; use theorem1")
        out.extend(check_filter_gains(scenario.gains.k[:-1], scenario.model.n).violations)
    if scenario.a0.delta_hat < 0:
        out.append("delta_hat(0) must be nonnegative")
    return out


def _t_nodes(scenario: Scenario, t_stop: float, extra: Sequence[float]) -> np.ndarray:
    o = scenario.options
    ts = scenario.timescale
    nodes = [0.0]
    t = 0.0
    while t < t_stop:
        g = float(ts.mu(t))
        step = min(o.h, o.c_h / g) if g > 0 else o.h
        t = t + step
        if t >= t_stop or t_stop - t < 1e-12 * max(1.0, t_stop):
            t = t_stop
        nodes.append(t)
    grid = np.array(nodes)
    extra = [e for e in extra if 0 < e < t_stop]
    if extra:
        grid = np.unique(np.concatenate([grid, extra]))
    return grid


def integrate(scenario: Scenario) -> Trajectory:
    """Simulate plant, controller and estimators; see :class:`IntegrationOptions`."""
    problems = check_scenario(scenario)
    if problems:
        raise SimulationError("gain validation failed: " + "; ".join(problems))
    o = scenario.options
    if o.domain == "tau":
        return _integrate_tau(scenario)
    return _integrate_t(scenario)


class _Loop:
    """Augmented right-hand side with the open-loop switch after t_switch."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.m = scenario.model
        self.law = _law(scenario)
        self.n, self.q = self.m.n, self.m.q
        self.t_switch = scenario.switch_time

    def closed(self, t: float) -> bool:
        return self.t_switch is None or t < self.t_switch or math.isclose(t, self.t_switch, rel_tol=0, abs_tol=1e-14)

    def split(self, X):
        n, q = self.n, self.q
        return X[:n], AdaptiveState(X[n:n + q], X[n + q], X[n + q + 1])

    def __call__(self, t: float, X: np.ndarray):
        x, a = self.split(X)
        if self.closed(t):
            out = self.law(x, a, t)
            dx = self.m.plant_rhs(x, out.u, t)
            d = np.concatenate([dx, out.theta_rate, [out.delta_rate, out.rho_rate]])
            return d, out
        dx = self.m.plant_rhs(x, 0.0, t)
        return np.concatenate([dx, np.zeros(self.q + 2)]), None


def _march(loop: _Loop, nodes: np.ndarray, rhs: Callable, X0: np.ndarray, name: str, to_t: Callable):
    """RK4 over the node grid; ``rhs(s, X)`` returns (dX/ds, ControlOutput|None)."""
    blowup = loop.sc.options.blowup
    N = len(nodes)
    states = np.empty((N, len(X0)))
    outs: list[ControlOutput | None] = [None] * N
    X = X0.copy()
    for i in range(N):
        s = nodes[i]
        if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > blowup:
            raise SimulationError(f"{name}: state blow-up at t={to_t(s):.6g} (max |state| = {np.max(np.abs(X)):.3g})")
        k1, out = rhs(s, X)
        if out is not None and out.overflow:
            raise SimulationError(f"{name}: non-finite control at t={to_t(s):.6g}")
        states[i] = X
        outs[i] = out
        if i == N - 1:
            break
        h = nodes[i + 1] - s
        k2, _ = rhs(s + 0.5 * h, X + 0.5 * h * k1)
        k3, _ = rhs(s + 0.5 * h, X + 0.5 * h * k2)
        k4, _ = rhs(s + h, X + h * k3)
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return states, outs


def _pack(loop: _Loop, t: np.ndarray, tau: np.ndarray, states: np.ndarray, outs, name: str) -> Trajectory:
    n, q = loop.n, loop.q
    N = len(t)
    u = np.zeros(N)
    ub = np.zeros(N)
    K = np.full(N, np.nan)
    surf = np.full(N, np.nan)
    Psi = np.full(N, np.nan)
    z = np.full((N, n), np.nan)
    closed = np.zeros(N, dtype=bool)
    for i, out in enumerate(outs):
        if out is None:
            continue
        closed[i] = True
        u[i], ub[i], K[i], surf[i], Psi[i] = out.u, out.u_bar, out.K, out.surface, out.Psi
        z[i] = out.z
    return Trajectory(
        t=t, tau=tau, x=states[:, :n], u=u, u_bar=ub,
        theta_hat=states[:, n:n + q], delta_hat=states[:, n + q], rho_hat=states[:, n + q + 1],
        K=K, surface=surf, z=z, Psi=Psi, closed_loop=closed, name=name,
    )


def _initial(scenario: Scenario) -> np.ndarray:
    return np.concatenate([scenario.x0, scenario.a0.pack()])


def _tau_of(ts: TimeScale, t: np.ndarray) -> np.ndarray:
    if not isinstance(ts, PrescribedTime):
        return np.full(len(t), np.nan)
    tau = np.full(len(t), np.nan)
    inside = t < ts.T
    tau[inside] = ts.t_to_tau(t[inside])
    return tau


def _integrate_t(scenario: Scenario) -> Trajectory:
    loop = _Loop(scenario)
    t_end = scenario.t_end
    extra = list(scenario.options.record_times)
    t_sw = scenario.switch_time
    if t_sw is not None and t_end > t_sw:
        first = _t_nodes(scenario, t_sw, [e for e in extra if e < t_sw])
        h = scenario.options.h
        m = max(1, int(math.ceil((t_end - t_sw) / h - 1e-9)))
        rest = np.linspace(t_sw, t_end, m + 1)[1:]
        extra_rest = [e for e in extra if t_sw < e < t_end]
        nodes = np.unique(np.concatenate([first, rest, extra_rest]))
    else:
        nodes = _t_nodes(scenario, t_end, extra)
    states, outs = _march(loop, nodes, loop, _initial(scenario), scenario.name, lambda s: s)
    return _pack(loop, nodes, _tau_of(scenario.timescale, nodes), states, outs, scenario.name)


def _integrate_tau(scenario: Scenario) -> Trajectory:
    ts = scenario.timescale
    if not isinstance(ts, PrescribedTime):
        raise SimulationError("tau-domain integration needs a prescribed-time scale")
    if scenario.options.nonstop:
        raise SimulationError("tau-domain integration covers [0, T - eta] only; use the t-domain for nonstop runs")
    loop = _Loop(scenario)
    tau_end = ts.t_to_tau(scenario.t_end)
    m = max(1, int(math.ceil(tau_end / scenario.options.h_tau - 1e-9)))
    nodes = np.linspace(0.0, tau_end, m + 1)
    extra = [ts.t_to_tau(e) for e in scenario.options.record_times if 0 < e < scenario.t_end]
    if extra:
        nodes = np.unique(np.concatenate([nodes, extra]))

    def rhs(tau, X):
        t = ts.tau_to_t(tau)
        d, out = loop(t, X)
        return d / ts.beta(tau), out

    states, outs = _march(loop, nodes, rhs, _initial(scenario), scenario.name, ts.tau_to_t)
    return _pack(loop, ts.tau_to_t(nodes), nodes, states, outs, scenario.name)


# -- metrics ----------------------------------------------------------------


def band_entry_time(t: np.ndarray, y: np.ndarray, band: float) -> float | None:
    """Time after which |y| stays within band; None if the last sample is outside."""
    a = np.abs(np.asarray(y, dtype=float))
    out = np.nonzero(a > band)[0]
    if len(out) == 0:
        return 0.0
    k = out[-1]
    if k == len(a) - 1:
        return None
    # linear interpolation of |y| across the final crossing
    a0, a1 = a[k], a[k + 1]
    frac = (a0 - band) / (a0 - a1) if a0 != a1 else 1.0
    return float(t[k] + frac * (t[k + 1] - t[k]))


@dataclass
class Metrics:
    settle: list            # per state, seconds or None (not settled)
    peak_u: float
    terminal_x: np.ndarray
    terminal_norm: float
    terminal_theta_hat: np.ndarray
    terminal_delta_hat: float
    terminal_rho_hat: float
    band: float

    def settle_label(self, i: int) -> str:
        v = self.settle[i]
        return "not settled" if v is None else f"{v:.6g}"


def metrics(traj: Trajectory, band: float = 0.01) -> Metrics:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    settle = [band_entry_time(traj.t, traj.x[:, i], band) for i in range(traj.n)]
    return Metrics(
        settle=settle,
        peak_u=float(np.max(np.abs(traj.u))),
        terminal_x=traj.x[-1].copy(),
        terminal_norm=float(np.linalg.norm(traj.x[-1])),
        terminal_theta_hat=traj.theta_hat[-1].copy(),
        terminal_delta_hat=float(traj.delta_hat[-1]),
        terminal_rho_hat=float(traj.rho_hat[-1]),
        band=band,
    )
