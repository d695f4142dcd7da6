"""Adaptive backstepping controller with tuning functions and congealed parameters.

The recursion builds virtual controls alpha_1..alpha_{n-1}, each a function of
the state, the parameter estimates and the gain derivatives mu, mu', ... Stage
``i`` needs exact partials of alpha_{i-1}, and those partials are themselves
differentiated by later stages, so every alpha is carried as a truncated Taylor
jet of sufficient order (see :mod:`ptadaptive.jet`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jet as J
from .model import StrictFeedbackModel
from .timescale import TimeScale


@dataclass(frozen=True)
class EpsilonSchedule:
    """Robustness level eps(t) = scale * exp(rate * t)."""

    scale: float = 1.0
    rate: float = -0.1

    def __call__(self, t: float) -> float:
        return self.scale * math.exp(self.rate * t)

    def deriv(self, t: float, order: int) -> float:
        return self.rate ** order * self(t)


def eps_value(eps, t: float) -> float:
    return eps(t) if isinstance(eps, EpsilonSchedule) else float(eps)


def eps_deriv(eps, t: float, order: int) -> float:
    if isinstance(eps, EpsilonSchedule):
        return eps.deriv(t, order)
    return float(eps) if order == 0 else 0.0


@dataclass(frozen=True)
class GainConfig:
    k: tuple[float, ...]
    Gamma: np.ndarray
    gamma_delta: float = 0.01
    gamma_rho: float = 0.01
    epsilon: float | EpsilonSchedule = 0.1

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(v) for v in self.k))
        G = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        object.__setattr__(self, "Gamma", G)


@dataclass(frozen=True)
class AdaptiveState:
    theta_hat: np.ndarray
    delta_hat: float = 0.0
    rho_hat: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta_hat", np.atleast_1d(np.asarray(self.theta_hat, dtype=float)))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.theta_hat, [self.delta_hat, self.rho_hat]])

    @classmethod
    def unpack(cls, v: np.ndarray, q: int) -> "AdaptiveState":
        return cls(np.array(v[:q]), float(v[q]), float(v[q + 1]))


@dataclass
class ControlOutput:
    u: float
    u_bar: float
    z: np.ndarray
    alpha: np.ndarray
    w: np.ndarray
    K: float
    Psi: float
    theta_rate: np.ndarray
    delta_rate: float
    rho_rate: float
    overflow: bool = False

    @property
    def surface(self) -> float:
        """Last error coordinate (z_n, or s_n for the filter-variable design)."""
        return float(self.z[-1])

    @property
    def rates(self) -> tuple[np.ndarray, float, float]:
        return self.theta_rate, self.delta_rate, self.rho_rate


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.violations)


def validate_gains(config: GainConfig, model: StrictFeedbackModel, rho0: float) -> ValidationReport:
    """Collect every violated design constraint; never raises."""
    rep = ValidationReport()
    n = model.n
    k = config.k
    if len(k) != n:
        rep.violations.append(f"expected {n} gains k_1..k_{n}, got {len(k)}")
        return rep
    for i in range(1, n):
        if not k[i - 1] > n - i + 1:
            rep.violations.append(f"k_{i}={k[i - 1]:g} must exceed {n - i + 1}")
    if rho0 == 0 or np.sign(rho0) != model.control_sign:
        rep.violations.append(f"rho_hat(0)={rho0:g} must be nonzero with the sign of the control direction")
    else:
        bound = 1.0 / (model.b_lower * abs(rho0))
        if not k[-1] > bound:
            rep.violations.append(f"k_{n}={k[-1]:g} must exceed 1/(b_lower*|rho_hat(0)|)={bound:g}")
    G = config.Gamma
    if G.shape != (model.q, model.q):
        rep.violations.append(f"Gamma must be {model.q}x{model.q}, got {G.shape}")
    elif not np.allclose(G, G.T) or np.any(np.linalg.eigvalsh(0.5 * (G + G.T)) <= 0):
        rep.violations.append("Gamma must be symmetric positive definite")
    if not config.gamma_rho > 0:
        rep.violations.append("gamma_rho must be positive")
    if not config.gamma_delta >= 0:
        rep.violations.append("gamma_delta must be nonnegative")
    eps = config.epsilon
    if isinstance(eps, EpsilonSchedule):
        if not eps.scale > 0:
            rep.violations.append("epsilon schedule scale must be positive")
    elif not eps > 0:
        rep.violations.append("epsilon must be positive")
    return rep


def rho_rate(gamma_rho: float, sign: int, surface: float, u_bar: float) -> float:
    """Rate of the inverse-input-gain estimate."""
    return -gamma_rho * sign * surface * u_bar


def congelation_decompose(theta_t, a: AdaptiveState, ell_theta):
    """Split theta(t) = theta_hat + (ell_theta - theta_hat) + (theta(t) - ell_theta)."""
    theta_t = np.asarray(theta_t, dtype=float)
    ell = np.asarray(ell_theta, dtype=float)
    return theta_t - ell, ell - a.theta_hat


# -- jet recursion ----------------------------------------------------------


@dataclass(frozen=True)
class SeedLayout:
    """Index map of the jet seeds: x, theta_hat, delta_hat, mu^(r), eps^(r)."""

    n: int
    q: int
    eps_seeded: bool

    @property
    def x(self) -> range:
        return range(0, self.n)

    @property
    def theta(self) -> range:
        return range(self.n, self.n + self.q)

    @property
    def delta(self) -> int:
        return self.n + self.q

    @property
    def mu(self) -> range:
        s = self.n + self.q + 1
        return range(s, s + self.n - 1)

    @property
    def eps(self) -> range:
        s = self.mu.stop
        return range(s, s + (self.n - 1 if self.eps_seeded else 0))

    @property
    def nvars(self) -> int:
        return self.eps.stop


@dataclass
class Recursion:
    """Everything the final stage needs from the virtual-control recursion."""

    layout: SeedLayout
    alphas: list           # alpha_1..alpha_{n-1} as jets
    z: list                # z_1..z_n (z_n a jet of order 0 or float)
    w: list                # w_1..w_n, each a list of q entries
    damp: list             # z_i ww_i / root_i
    sigma: list            # z_i^2 ww_i / root_i
    ww: list
    root: list


def _stage(z, w, eps):
    ww = J.dot(w, w)
    root = J.sqrt(z * z * ww + eps * eps)
    damp = z * ww / root
    return ww, root, damp, z * damp


def recursion(model: StrictFeedbackModel, config: GainConfig, x, a: AdaptiveState,
              t: float, ts: TimeScale) -> Recursion:
    """Run the virtual-control recursion with jets seeded at the current point."""
    n, q = model.n, model.q
    eps_cfg = config.epsilon
    layout = SeedLayout(n, q, isinstance(eps_cfg, EpsilonSchedule) and n >= 2)
    G = config.Gamma
    gd = config.gamma_delta
    k = config.k

    order = max(n - 1, 0)
    values = list(np.asarray(x, dtype=float)) + list(a.theta_hat) + [a.delta_hat]
    values += [ts.mu_deriv(t, r) for r in range(n - 1)]
    if layout.eps_seeded:
        values += [eps_deriv(eps_cfg, t, r) for r in range(n - 1)]
    sp = J.jet_space(layout.nvars, order)
    seeds = sp.seeds(values)
    xs = [seeds[j] for j in layout.x]
    th = [seeds[j] for j in layout.theta]
    dh = seeds[layout.delta]
    mus = [seeds[j] for j in layout.mu]
    if layout.eps_seeded:
        epss = [seeds[j] for j in layout.eps]
        eps = epss[0]
    else:
        epss = []
        eps = eps_value(eps_cfg, t)
    mu = mus[0] if mus else ts.mu(t)

    phis = [list(model.phi[i](xs)) for i in range(n)]

    alphas, zs, ws, damps, sigmas, wws, roots = [], [], [], [], [], [], []
    tau_theta = [0.0] * q
    tau_delta = 0.0
    for i in range(n):
        if i == 0:
            z = xs[0]
            w = phis[0]
        else:
            prev = alphas[i - 1]
            z = xs[i] - prev
            dx = [prev.diff(j) for j in range(i)]
            w = [phis[i][m] - J.dot(dx, [phis[j][m] for j in range(i)]) for m in range(q)]
        ww, root, damp, sigma = _stage(z, w, eps)
        zs.append(z)
        ws.append(w)
        wws.append(ww)
        roots.append(root)
        damps.append(damp)
        sigmas.append(sigma)
        tau_theta = [tau_theta[m] + w[m] * z for m in range(q)]
        tau_delta = tau_delta + sigma
        if i == n - 1:
            break

        alpha = -k[i] * mu * z - J.dot(w, th) - dh * damp
        if i > 0:
            prev = alphas[i - 1]
            dprev_th = [prev.diff(j) for j in layout.theta]
            dprev_dh = prev.diff(layout.delta)
            Gw = _mat_vec(G, w)
            Gtau = _mat_vec(G, tau_theta)
            cross_d = 0.0
            cross_t = 0.0
            for j in range(1, i):
                aj = alphas[j - 1]
                cross_d = cross_d + aj.diff(layout.delta) * zs[j]
                cross_t = cross_t + J.dot([aj.diff(v) for v in layout.theta], Gw) * zs[j]
            alpha = alpha + gd * damp * cross_d + gd * dprev_dh * tau_delta
            alpha = alpha + J.dot([prev.diff(j) for j in range(i)], xs[1:i + 1])
            alpha = alpha - zs[i - 1]
            alpha = alpha + cross_t + J.dot(dprev_th, Gtau)
            alpha = alpha + _signal_drift(prev, layout, mus, epss)
        alphas.append(alpha)

    return Recursion(layout, alphas, zs, ws, damps, sigmas, wws, roots)


def _mat_vec(G: np.ndarray, v: Sequence) -> list:
    q = len(v)
    return [J.dot([G[r, c] for c in range(q)], v) for r in range(q)]


def _signal_drift(prev, layout: SeedLayout, mus: list, epss: list, mu_top=None, eps_top=None):
    """Sum over r of d(prev)/d(sig^(r)) * sig^(r+1) for the gain and eps signals.

    The highest derivative (sig^(m) with m = number of seeded orders) is not a
    seed; pass its float value as ``mu_top``/``eps_top`` when needed.
    """
    acc = 0.0
    for seeds_idx, sig, top in ((layout.mu, mus, mu_top), (layout.eps, epss, eps_top)):
        idx = list(seeds_idx)
        for r, v in enumerate(idx):
            nxt = sig[r + 1] if r + 1 < len(sig) else top
            if nxt is None:
                continue
            acc = acc + prev.diff(v) * nxt
    return acc


def control_law(model: StrictFeedbackModel, config: GainConfig, x, a: AdaptiveState,
                t: float, ts: TimeScale) -> ControlOutput:
    """Evaluate u, the diagnostics and all three estimator rates at (x, a, t)."""
    n, q = model.n, model.q
    mu = ts.mu(t)
    rec = recursion(model, config, x, a, t, ts)
    lay = rec.layout
    G = config.Gamma
    gd = config.gamma_delta
    th = a.theta_hat

    f = J.value
    z = np.array([f(v) for v in rec.z])
    w = np.array([[f(c) for c in wi] for wi in rec.w]).reshape(n, q)
    alpha = np.array([f(v) for v in rec.alphas])
    zn = z[-1]
    wn = w[-1]
    ww_n = f(rec.ww[-1])
    root_n = f(rec.root[-1])
    damp_n = f(rec.damp[-1])
    tau_theta = w.T @ z
    tau_delta = float(sum(f(s) for s in rec.sigma))

    if n == 1:
        Psi = float(wn @ th)
    else:
        prev = rec.alphas[-1]
        dx = np.array([f(prev.diff(j)) for j in range(n - 1)])
        mu_top = ts.mu_deriv(t, n - 1)
        mus_f = [ts.mu_deriv(t, r) for r in range(n - 1)] + [mu_top]
        eps_f = [eps_deriv(config.epsilon, t, r) for r in range(n)] if lay.eps_seeded else []
        xs = np.asarray(x, dtype=float)
        f_on = -float(dx @ xs[1:n])
        for r, v in enumerate(lay.mu):
            f_on -= f(prev.diff(v)) * mus_f[r + 1]
        for r, v in enumerate(lay.eps):
            f_on -= f(prev.diff(v)) * eps_f[r + 1]
        dth = np.array([f(prev.diff(v)) for v in lay.theta])
        Gwn = G @ wn
        Psi_theta = float(dth @ (G @ tau_theta))
        Psi_delta = gd * f(prev.diff(lay.delta)) * tau_delta
        cross = 0.0
        for j in range(1, n - 1):
            aj = rec.alphas[j - 1]
            Psi_theta += float(np.array([f(aj.diff(v)) for v in lay.theta]) @ Gwn) * z[j]
            cross += f(aj.diff(lay.delta)) * z[j]
        Psi_delta += gd * damp_n * cross
        Psi = float(z[-2] + wn @ th + f_on - Psi_theta - Psi_delta)

    eps = eps_value(config.epsilon, t)
    k_n = config.k[-1]
    K = k_n * mu + a.delta_hat * ww_n / root_n + Psi * Psi / math.sqrt(zn * zn * Psi * Psi + eps * eps)
    u_bar = -K * zn
    u = a.rho_hat * u_bar
    theta_rate = G @ tau_theta
    delta_rate = gd * tau_delta
    r_rate = rho_rate(config.gamma_rho, model.control_sign, zn, u_bar)
    out = ControlOutput(u, u_bar, z, alpha, w, K, Psi, theta_rate, delta_rate, r_rate)
    vals = np.concatenate([[u, K, Psi, delta_rate, r_rate], z, theta_rate])
    out.overflow = not bool(np.all(np.isfinite(vals)))
    return out


def alpha_partials(model: StrictFeedbackModel, config: GainConfig, x, a: AdaptiveState,
                   t: float, ts: TimeScale) -> list[dict]:
    """Value and first partials of every virtual control (for gradient checks).

    Each entry has keys ``value``, ``x`` (n), ``theta`` (q) and ``delta``.
    """
    rec = recursion(model, config, x, a, t, ts)
    lay = rec.layout
    out = []
    for al in rec.alphas:
        g = al.gradient()
        out.append({
            "value": al.value,
            "x": g[list(lay.x)],
            "theta": g[list(lay.theta)],
            "delta": float(g[lay.delta]),
        })
    return out


def alpha_values(model, config, x, a, t, ts) -> np.ndarray:
    """Float values of alpha_1..alpha_{n-1}."""
    rec = recursion(model, config, x, a, t, ts)
    return np.array([al.value for al in rec.alphas])
