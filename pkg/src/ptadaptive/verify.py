"""Executable numeric checks for the inequalities, lemmas and closed-loop claims.

Every check returns a :class:`CheckResult`; :func:`run_checks` runs a named
selection and is what the ``verify`` CLI command calls.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import backstepping as bs
from .backstepping import AdaptiveState, GainConfig
from .model import StrictFeedbackModel, builtin_benchmark
from .normalform import (GainPolynomialFilter, _peval, filter_coefficients)
from .sim import IntegrationOptions, Scenario, Trajectory, integrate
from .timescale import (Exponential, PrescribedTime, SuperExponential, TimeScale)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}\t{status}\tworst={self.worst:.6g}\t{self.detail}"


@dataclass(frozen=True)
class GroundTruth:
    ell_theta: np.ndarray
    delta_theta: float
    ell_b: float

    @classmethod
    def from_model(cls, model: StrictFeedbackModel) -> "GroundTruth":
        if model.ell_theta is None or model.delta_theta_true is None or model.ell_b is None:
            raise ValueError(f"model {model.name} carries no ground truth")
        return cls(np.asarray(model.ell_theta, dtype=float), float(model.delta_theta_true), float(model.ell_b))

    def violations(self, model: StrictFeedbackModel, t: np.ndarray, x: np.ndarray) -> list[str]:
        """Check the congealed decomposition on sampled (t, x) pairs."""
        out = []
        sgn = math.copysign(1.0, self.ell_b)
        for ti, xi in zip(t, x):
            db = model.b_true(ti) - self.ell_b
            if sgn * db < -1e-12:
                out.append(f"input-gain offset has the wrong sign at t={ti:.6g}")
                break
        for ti, xi in zip(t, x):
            d = np.linalg.norm(model.theta_true(ti, xi) - self.ell_theta)
            if d > self.delta_theta * (1 + 1e-12):
                out.append(f"parameter offset {d:.6g} exceeds radius at t={ti:.6g}")
                break
        return out


# -- analytic inequalities --------------------------------------------------


def _log_uniform(rng, lo, hi, size):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def saturation_gap(s, sigma):
    """|s| - s^2/sqrt(s^2+sigma^2), written without cancellation."""
    s = np.abs(np.asarray(s, dtype=float))
    r = np.hypot(s, sigma)
    return s * sigma * sigma / (r * (r + s))


def check_lemma3(samples: int = 100_000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    s = _log_uniform(rng, 1e-6, 1e6, samples) * rng.choice([-1.0, 1.0], samples)
    s[: samples // 100] = 0.0
    sigma = _log_uniform(rng, 1e-6, 1e6, samples)
    margin = sigma - saturation_gap(s, sigma)
    bad = int(np.sum(margin <= 0))
    worst = float(np.min(margin / sigma))
    return CheckResult("lemma3", bad == 0, worst, f"{samples} samples, {bad} counterexamples (worst margin relative to sigma)")


def check_kappa_bound(samples: int = 100_000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed + 1)
    z = rng.normal(size=samples) * _log_uniform(rng, 1e-4, 1e4, samples)
    P = rng.normal(size=samples) * _log_uniform(rng, 1e-4, 1e4, samples)
    eps = _log_uniform(rng, 1e-4, 1e2, samples)
    # kappa z^2 + Psi z = Psi z - (Psi z)^2/sqrt((Psi z)^2 + eps^2), signed
    pz = P * z
    lhs = np.where(pz > 0, saturation_gap(pz, eps), pz - pz * pz / np.hypot(pz, eps))
    margin = eps - lhs
    bad = int(np.sum(margin <= 0))
    return CheckResult("kappa_bound", bad == 0, float(np.min(margin / eps)), f"{samples} samples, {bad} counterexamples")


def check_damping(samples: int = 100_000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed + 2)
    z = rng.normal(size=samples) * _log_uniform(rng, 1e-3, 1e3, samples)
    ww = _log_uniform(rng, 1e-6, 1e4, samples)
    eps = _log_uniform(rng, 1e-4, 1e2, samples)
    delta = rng.uniform(0, 10, samples)
    a = np.abs(z) * np.sqrt(ww)
    # delta*|z|*sqrt(ww) <= delta*eps + delta*z^2 ww / sqrt(z^2 ww + eps^2)
    margin = delta * (eps - saturation_gap(a, eps))
    bad = int(np.sum(margin < 0))
    return CheckResult("damping", bad == 0, float(np.min(margin)), f"{samples} samples, {bad} counterexamples")


# -- variation-of-constants lemma ------------------------------------------


@dataclass
class ScalarInstance:
    name: str
    K: Callable[[float], float]
    gamma: Callable[[float], float]
    sigma: float
    Y: Callable[[float, float], float]
    z0: float = 1.0


def lemma1_instances(T: float = 1.0) -> list[ScalarInstance]:
    a0 = 1.0
    return [
        ScalarInstance("exp_gamma_unforced", lambda s: 2.0, lambda s: math.exp(s) / T, 1.0, lambda z, s: 0.0),
        ScalarInstance("poly_gamma_forced", lambda s: 2.0, lambda s: a0 * (s / (a0 * T) + 1.0) ** 2, 1.0,
                       lambda z, s: 0.5 * z),
        ScalarInstance("constant_gain", lambda s: 2.0, lambda s: math.exp(s) / T, 1.0,
                       lambda z, s: z * math.sin(s)),
    ]


def _rk4_scalar(f, y0, grid):
    ys = np.empty(len(grid))
    y = y0
    ys[0] = y
    for i in range(len(grid) - 1):
        s, h = grid[i], grid[i + 1] - grid[i]
        k1 = f(s, y)
        k2 = f(s + h / 2, y + h / 2 * k1)
        k3 = f(s + h / 2, y + h / 2 * k2)
        k4 = f(s + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    return ys


def check_lemma1_instance(inst: ScalarInstance, tau_max: float = 30.0, h: float = 1e-2,
                          threshold: float = 1e-6) -> CheckResult:
    grid = np.linspace(0.0, tau_max, int(round(tau_max / h)) + 1)
    kmin = min(inst.K(s) for s in grid)
    problems = []
    if abs(inst.Y(0.0, tau_max / 2)) > 0:
        problems.append("Y(0, tau) != 0")
    g_end = inst.gamma(tau_max)
    if not math.exp(-kmin * tau_max) * g_end ** inst.sigma < 1e-3:
        problems.append("exp(-k tau) gamma^sigma does not vanish")
    d = 1e-4
    dg = (inst.gamma(tau_max + d) - inst.gamma(tau_max - d)) / (2 * d)
    if not kmin - inst.sigma * dg / g_end > 0:
        problems.append("k - sigma gamma'/gamma is not positive")
    if problems:
        return CheckResult(f"lemma1[{inst.name}]", False, float("nan"), "; ".join(problems))

    def f(s, z):
        return -inst.K(s) * z + inst.Y(z, s) / inst.gamma(s) ** inst.sigma

    z = _rk4_scalar(f, inst.z0, grid)
    scaled = np.abs(z * np.array([inst.gamma(s) ** inst.sigma for s in grid]))
    ratio = float(scaled[-1] / scaled[0])
    tail = scaled[len(scaled) // 2:]
    monotone = bool(np.all(np.diff(tail) <= 0))
    ok = ratio < threshold and monotone
    return CheckResult(f"lemma1[{inst.name}]", ok, ratio,
                       f"|z gamma^sigma| final/initial at tau={tau_max:g}; tail nonincreasing={monotone}")


def check_lemma1(tau_max: float = 30.0) -> CheckResult:
    res = [check_lemma1_instance(i, tau_max) for i in lemma1_instances()]
    worst = max(r.worst for r in res)
    return CheckResult("lemma1", all(r.passed for r in res), worst,
                       ", ".join(f"{r.name.split('[')[1][:-1]}={'ok' if r.passed else 'FAIL'}" for r in res))


# -- filter variable --------------------------------------------------------


def check_filter_coefficients(seed: int = 0, trials: int = 20) -> CheckResult:
    """Closed-form integer recursion vs the general gain-polynomial construction."""
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(trials):
        n = rng.randint(2, 5)
        k = [rng.randint(n - i + 2, 12) for i in range(1, n)]
        fc = filter_coefficients(k, n)
        gf = GainPolynomialFilter(k, n)
        if fc.c[-1] != 1:
            return CheckResult("filter_coefficients", False, 1.0, f"c_nn != 1 for k={k}")
        T = rng.uniform(0.5, 3.0)
        ts = PrescribedTime(T)
        t = rng.uniform(0, 0.9 * T)
        g = gf.gains(ts, t)
        mu = g[0]
        for j in range(n):
            for got, want in ((_peval(gf.c[j], g), fc.c[j] * mu ** (n - 1 - j)),
                              (_peval(gf.drift[j], g), fc.l[j] * mu ** (n - j))):
                err = abs(got - want) / max(abs(want), 1e-300)
                worst = max(worst, err)
    return CheckResult("filter_coefficients", worst < 1e-12, worst, f"{trials} random gain sets, n in 2..5")


def filter_cascade(k: Sequence[float], T: float, s_init: Sequence[float], inject: Callable[[float], float],
                   etas: Sequence[float], h_tau: float = 1e-2) -> np.ndarray:
    """Integrate s_{i-1}' = s_i - k_{i-1} s_{i-1}/(T - t) with s_n injected.

    Integration runs on the stretched axis where the gain is constant.
    Returns |s_i(T - eta)| for each eta (rows) and i = 1..n-1 (columns).
    """
    m = len(k)
    ts = PrescribedTime(T)
    taus = sorted(ts.t_to_tau(T - e) for e in etas)
    kk = np.asarray(k, dtype=float)

    def f(tau, s):
        t = ts.tau_to_t(tau)
        rem = T * math.exp(-tau)
        nxt = np.append(s[1:], inject(t))
        return rem * nxt - kk * s

    out = np.empty((len(taus), m))
    s = np.asarray(s_init, dtype=float).copy()
    tau = 0.0
    for row, target in enumerate(taus):
        steps = max(1, int(math.ceil((target - tau) / h_tau)))
        h = (target - tau) / steps
        for _ in range(steps):
            k1 = f(tau, s)
            k2 = f(tau + h / 2, s + h / 2 * k1)
            k3 = f(tau + h / 2, s + h / 2 * k2)
            k4 = f(tau + h, s + h * k3)
            s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            tau += h
        out[row] = np.abs(s)
    # rows ordered by increasing tau, i.e. shrinking eta
    return out


def check_filter_cascade(seed: int = 0, tol: float = 1e-4) -> CheckResult:
    rng = np.random.default_rng(seed + 3)
    etas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
    worst = 0.0
    cases = 0
    for n, k in ((2, [3.0]), (3, [4.0, 3.0]), (4, [5.5, 4.5, 3.5])):
        T = 1.0
        s0 = rng.uniform(-1, 1, n - 1)
        for inject in (lambda t: 0.0, lambda t: (T - t), lambda t: (T - t) ** 2):
            rows = filter_cascade(k, T, s0, inject, [e * T for e in etas])
            peak = rows.max(axis=1)
            scale = 1.0 + float(np.max(np.abs(s0)))
            if np.any(np.diff(peak) > 1e-15 * scale) or peak[-1] > tol * scale:
                return CheckResult("filter_cascade", False, float(peak[-1]), f"n={n} k={k}")
            worst = max(worst, float(peak[-1] / scale))
            cases += 1
    return CheckResult("filter_cascade", True, worst, f"{cases} cascades; max |s_i(T - 1e-6 T)| relative")


def check_closed_loop_cascade(traj: Trajectory, k_filter: Sequence[float], ts: TimeScale,
                              tol: float = 1e-2, C: float = 10.0) -> CheckResult:
    """On a filter-variable run: small s_n late implies small s_i at the very end."""
    n = traj.n
    t_end = traj.t[-1]
    gf = GainPolynomialFilter(k_filter, n)
    last10 = traj.t >= 0.9 * t_end
    last1 = traj.t >= 0.99 * t_end
    sn = np.max(np.abs(traj.surface[last10]))
    if not sn < tol:
        return CheckResult("closed_loop_cascade", True, float(sn), "premise not met (s_n not small); vacuous")
    worst = 0.0
    for i in np.nonzero(last1)[0]:
        g = gf.gains(ts, traj.t[i])
        s = gf.partial_surfaces(g, traj.x[i])
        worst = max(worst, float(np.max(np.abs(s[:-1]))))
    return CheckResult("closed_loop_cascade", worst < C * tol, worst, f"max|s_n| final 10% = {sn:.3g}")


# -- jet partials vs finite differences --------------------------------------


def _fd_alpha(model, config, x, a, t, ts, which: str, idx: int, h: float) -> np.ndarray:
    def shifted(d):
        xx = np.array(x, dtype=float)
        th = a.theta_hat.copy()
        dh = a.delta_hat
        if which == "x":
            xx[idx] += d
        elif which == "theta":
            th[idx] += d
        else:
            dh += d
        return bs.alpha_values(model, config, xx, AdaptiveState(th, dh, a.rho_hat), t, ts)

    return (shifted(h) - shifted(-h)) / (2 * h)


def gradient_errors(model: StrictFeedbackModel, config: GainConfig, ts: TimeScale, samples: int = 100,
                    seed: int = 0, h: float = 1e-5) -> np.ndarray:
    """Per-sample worst relative error of every alpha partial against central differences.

    The error of each partial of alpha_i is normalised by the largest
    absolute partial of alpha_i at that point.
    """
    rng = np.random.default_rng(seed + 4)
    n, q = model.n, model.q
    T = ts.horizon or 2.0
    errs = np.zeros(samples)
    for s in range(samples):
        x = rng.uniform(-1, 1, n)
        a = AdaptiveState(rng.uniform(-1, 1, q), rng.uniform(0, 1), 1.0)
        t = rng.uniform(0, 0.9 * T)
        parts = bs.alpha_partials(model, config, x, a, t, ts)
        if not parts:
            continue
        fd = {}
        for which, count in (("x", n), ("theta", q), ("delta", 1)):
            for idx in range(count):
                fd[(which, idx)] = _fd_alpha(model, config, x, a, t, ts, which, idx, h * max(1.0, abs(
                    x[idx] if which == "x" else a.theta_hat[idx] if which == "theta" else a.delta_hat)))
        worst = 0.0
        for i, p in enumerate(parts):
            jet = np.concatenate([p["x"], p["theta"], [p["delta"]]])
            num = np.array([fd[("x", j)][i] for j in range(n)] + [fd[("theta", j)][i] for j in range(q)]
                           + [fd[("delta", 0)][i]])
            scale = max(np.max(np.abs(jet)), 1e-300)
            worst = max(worst, float(np.max(np.abs(jet - num)) / scale))
        errs[s] = worst
    return errs


def fd_convergence_order(model, config, ts, seed: int = 0) -> float:
    """Observed order of the central-difference error as the step halves."""
    rng = np.random.default_rng(seed + 5)
    x = rng.uniform(-1, 1, model.n)
    a = AdaptiveState(rng.uniform(-1, 1, model.q), 0.5, 1.0)
    t = 0.3 * (ts.horizon or 2.0)
    exact = bs.alpha_partials(model, config, x, a, t, ts)[-1]["x"][0]
    hs = [2e-2, 1e-2, 5e-3]
    errs = [abs(_fd_alpha(model, config, x, a, t, ts, "x", 0, h)[-1] - exact) for h in hs]
    return float(np.mean(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))


def benchmark_config() -> GainConfig:
    return GainConfig(k=(6.0, 6.0, 6.0), Gamma=[[0.01]], gamma_delta=0.01, gamma_rho=0.01, epsilon=0.1)


def check_gradients(model: StrictFeedbackModel | None = None, config: GainConfig | None = None,
                    samples: int = 100, seed: int = 0, tol: float = 1e-6) -> CheckResult:
    model = model or builtin_benchmark()
    config = config or benchmark_config()
    ts = PrescribedTime(2.0)
    if model.n == 1:
        return CheckResult("gradients", True, 0.0, "no virtual controls (n=1)")
    errs = gradient_errors(model, config, ts, samples, seed)
    order = fd_convergence_order(model, config, ts, seed)
    ok = float(errs.max()) < tol and 1.7 < order < 2.3
    return CheckResult("gradients", ok, float(errs.max()), f"{samples} points; finite-difference order {order:.2f}")


# -- time scale identities --------------------------------------------------


def timescale_errors(T: float = 2.0) -> dict:
    ts = PrescribedTime(T)
    taus = np.linspace(0.0, 30.0, 3001)
    rt = np.abs(ts.t_to_tau(ts.tau_to_t(taus)) - taus)
    # distance of the round trip from what float64 can resolve: one ulp of t
    # near T moves tau by ulp(t)/(T - t)
    t = ts.tau_to_t(taus)
    resolution = np.spacing(np.maximum(t, T / 2)) / np.maximum(T - t, np.finfo(float).tiny)
    ts_grid = np.linspace(0.0, T - 1e-6 * T, 2001)
    cons = np.abs(ts.beta(ts.t_to_tau(ts_grid)) - ts.mu(ts_grid)) / ts.mu(ts_grid)
    d = 1e-6
    tg = np.linspace(0.05, 20.0, 200)
    dbeta = np.abs((ts.beta(tg + d) - ts.beta(tg - d)) / (2 * d) - ts.beta(tg)) / ts.beta(tg)
    tm = np.linspace(0.0, 0.9 * T, 50)
    md = 0.0
    for order in range(1, 5):
        hh = 1e-5 * T
        lo = np.maximum(tm - hh, 0.0)
        hi = tm + hh
        fd = (ts.mu_deriv(hi, order - 1) - ts.mu_deriv(lo, order - 1)) / (hi - lo)
        # at t = 0 the stencil is one-sided, so compare against its mid-point
        ref = ts.mu_deriv(0.5 * (hi + lo), order)
        md = max(md, float(np.max(np.abs(fd - ref) / np.abs(ref))))
    log_grid = np.logspace(-3, 1.5, 200)
    env = (Exponential(1.0, 2.0).envelope_holds(log_grid) and SuperExponential(0.1, 1.0).envelope_holds(log_grid))
    return {
        "round_trip": float(rt.max()),
        "round_trip_excess": float(np.max(rt - 2 * resolution)),
        "round_trip_ok_until": float(taus[np.nonzero(rt >= 1e-12)[0][0]]) if np.any(rt >= 1e-12) else 30.0,
        "beta_consistency": float(cons.max()),
        "beta_derivative": float(dbeta.max()),
        "mu_deriv": md,
        "envelopes": bool(env),
    }


def check_timescale(T: float = 2.0) -> CheckResult:
    e = timescale_errors(T)
    ok = (e["round_trip_excess"] < 1e-12 and e["beta_consistency"] < 1e-12 and e["beta_derivative"] < 1e-6
          and e["mu_deriv"] < 1e-6 and e["envelopes"])
    detail = (f"round trip max {e['round_trip']:.3g} (within 1e-12 up to tau={e['round_trip_ok_until']:.3g}, "
              f"float64 resolution of t beyond); beta/mu {e['beta_consistency']:.3g}; "
              f"dbeta {e['beta_derivative']:.3g}; mu_deriv {e['mu_deriv']:.3g}; envelopes {e['envelopes']}")
    return CheckResult("timescale", ok, e["beta_consistency"], detail)


# -- closed-loop Lyapunov reconstruction ------------------------------------


def lyapunov_terms(traj: Trajectory, truth: GroundTruth, config: GainConfig) -> dict:
    G_inv = np.linalg.inv(config.Gamma)
    e_th = truth.ell_theta[None, :] - traj.theta_hat
    Vz = 0.5 * np.sum(traj.z ** 2, axis=1)
    Vth = 0.5 * np.einsum("ij,jk,ik->i", e_th, G_inv, e_th)
    lb = truth.ell_b
    Vrho = abs(lb) / (2 * config.gamma_rho) * (1.0 / lb - traj.rho_hat) ** 2
    if config.gamma_delta > 0:
        Vd = 0.5 / config.gamma_delta * (truth.delta_theta - traj.delta_hat) ** 2
    else:
        Vd = np.zeros(len(traj))
    return {"Vz": Vz, "Vtheta": Vth, "Vrho": Vrho, "Vdelta": Vd, "V": Vz + Vth + Vrho + Vd}


def decrement_bound(traj: Trajectory, truth: GroundTruth, config: GainConfig, ts: PrescribedTime) -> np.ndarray:
    k = np.asarray(config.k)
    n = traj.n
    eps = np.array([bs.eps_value(config.epsilon, t) for t in traj.t])
    return -(traj.z ** 2) @ k + (n * truth.delta_theta + 1) * eps / ts.beta(traj.tau)


def check_lyapunov_decrement(traj: Trajectory, truth: GroundTruth, config: GainConfig, ts: TimeScale,
                             c_tol: float = 1.0) -> CheckResult:
    """Compare secant slopes of V on the tau grid with the trapezoid mean of the bound.

    Over one interval, V(b) - V(a) is at most the integral of the bound; the
    trapezoid rule approximates that integral with error proportional to the
    squared step times the bound's curvature, which sets the tolerance.
    """
    if not isinstance(ts, PrescribedTime):
        return CheckResult("lyapunov", False, float("nan"), "needs a prescribed-time run")
    keep = traj.closed_loop & np.isfinite(traj.tau)
    idx = np.nonzero(keep)[0]
    tau = traj.tau[idx]
    V = lyapunov_terms(traj, truth, config)["V"][idx]
    B = decrement_bound(traj, truth, config, ts)[idx]
    if len(idx) < 3:
        return CheckResult("lyapunov", True, 0.0, "too few samples")
    dtau = np.diff(tau)
    slope = np.diff(V) / dtau
    bound = 0.5 * (B[:-1] + B[1:])
    # curvature of the bound from second differences on neighbouring intervals
    db = np.diff(B) / dtau
    curv = np.zeros_like(dtau)
    if len(db) > 1:
        c2 = np.abs(np.diff(db)) / (0.5 * (dtau[:-1] + dtau[1:]))
        curv[:-1] = np.maximum(curv[:-1], c2)
        curv[1:] = np.maximum(curv[1:], c2)
    tol = c_tol * dtau ** 2 * curv + 1e-12 * (1 + np.abs(bound))
    viol = slope - bound - tol
    k = int(np.argmax(viol))
    ok = bool(viol[k] <= 0)
    return CheckResult("lyapunov", ok, float(viol[k]),
                       f"worst slope - bound - tol at tau={tau[k]:.4g}; {len(dtau)} intervals")


def benchmark_scenario(rho0: float = 1.0, eta: float = 2e-3) -> Scenario:
    return Scenario(builtin_benchmark(), "theorem1", benchmark_config(), PrescribedTime(2.0),
                    np.array([0.2, 0.0, -0.2]), AdaptiveState([0.0], 0.0, rho0),
                    IntegrationOptions(eta=eta), name="benchmark")


def estimator_report(traj: Trajectory, window: float = 0.1) -> dict:
    t_end = traj.t[-1]
    i = traj.at((1 - window) * t_end)
    return {
        "theta_change": float(np.max(np.abs(traj.theta_hat[-1] - traj.theta_hat[i]))),
        "delta_change": float(abs(traj.delta_hat[-1] - traj.delta_hat[i])),
        "rho_change": float(abs(traj.rho_hat[-1] - traj.rho_hat[i])),
        "rho_nondecreasing": bool(np.all(np.diff(traj.rho_hat) >= 0)),
        "delta_nondecreasing": bool(np.all(np.diff(traj.delta_hat) >= 0)),
    }


def check_estimators(traj: Trajectory, sign: int = 1, tol: float = 1e-2) -> CheckResult:
    r = estimator_report(traj)
    worst = max(r["theta_change"], r["delta_change"], r["rho_change"])
    mono = r["delta_nondecreasing"] and (r["rho_nondecreasing"] if sign > 0 else True)
    ok = worst < tol and mono
    return CheckResult("estimators", ok, worst,
                       f"final-10% changes theta={r['theta_change']:.3g} delta={r['delta_change']:.3g} "
                       f"rho={r['rho_change']:.3g}; rho nondecreasing={r['rho_nondecreasing']}; "
                       f"delta nondecreasing={r['delta_nondecreasing']}")


# -- suite ------------------------------------------------------------------


@dataclass
class _Cache:
    runs: dict = field(default_factory=dict)


def _benchmark_run(cache: _Cache, rho0: float = 1.0) -> Trajectory:
    if rho0 not in cache.runs:
        cache.runs[rho0] = integrate(benchmark_scenario(rho0))
    return cache.runs[rho0]


def _lyapunov_both(cache: _Cache, truth: GroundTruth, sc: Scenario) -> CheckResult:
    # rho_hat(0) on both sides of 1/ell_b: the input-gain error term changes sign
    res = [check_lyapunov_decrement(_benchmark_run(cache, r), truth, sc.gains, sc.timescale) for r in (1.0, 0.5)]
    worst = max(r.worst for r in res)
    detail = "; ".join(f"rho_hat(0)={r0}: {'ok' if r.passed else 'FAIL'} ({r.detail})" for r0, r in zip((1.0, 0.5), res))
    return CheckResult("lyapunov", all(r.passed for r in res), worst, detail)


def suite(seed: int = 0) -> dict[str, Callable[[], CheckResult]]:
    cache = _Cache()
    sc = benchmark_scenario()
    truth = GroundTruth.from_model(sc.model)
    return {
        "lemma3": lambda: check_lemma3(seed=seed),
        "kappa_bound": lambda: check_kappa_bound(seed=seed),
        "damping": lambda: check_damping(seed=seed),
        "lemma1": lambda: check_lemma1(),
        "filter_coefficients": lambda: check_filter_coefficients(seed=seed),
        "filter_cascade": lambda: check_filter_cascade(seed=seed),
        "gradients": lambda: check_gradients(seed=seed),
        "timescale": lambda: check_timescale(),
        "lyapunov": lambda: _lyapunov_both(cache, truth, sc),
        "estimators": lambda: check_estimators(_benchmark_run(cache), sc.model.control_sign),
    }


def check_names() -> list[str]:
    return list(suite().keys())


def run_checks(only: Sequence[str] | None = None, seed: int = 0) -> list[CheckResult]:
    checks = suite(seed)
    names = list(checks) if not only else list(only)
    unknown = [n for n in names if n not in checks]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; available: {list(checks)}")
    out = []
    for name in names:
        t0 = time.perf_counter()
        r = checks[name]()
        r.seconds = time.perf_counter() - t0
        out.append(r)
    return out
