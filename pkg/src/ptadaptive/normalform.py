"""Filter-variable controller for plants whose uncertainty enters only the last equation.

The filter variable is built by s_1 = x_1, s_i = k_{i-1} g(t) s_{i-1} + d/dt s_{i-1},
where g is the feedback gain of the chosen time scale. For the prescribed-time
gain g = 1/(T - t) the coefficients collapse to integers times powers of g
(:func:`filter_coefficients`); for a general gain they are polynomials in
g, g', g'', ... (:class:`GainPolynomialFilter`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import backstepping
from .backstepping import AdaptiveState, ControlOutput, GainConfig, ValidationReport, eps_value
from .model import StrictFeedbackModel
from .timescale import PrescribedTime, TimeScale


@dataclass(frozen=True)
class FilterCoefficients:
    """s_n = sum_j c[j] g^(n-j) x_j and its drift sum_j l[j] g^(n-j+1) x_j (1-based j)."""

    c: tuple
    l: tuple

    @property
    def n(self) -> int:
        return len(self.c)


def filter_coefficients(k: Sequence, n: int) -> FilterCoefficients:
    """Closed-form coefficients for the prescribed-time gain (g' = g^2).

    Integer gains give integer coefficients; no float conversion is applied.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(k) != n - 1:
        raise ValueError(f"need {n - 1} filter gains, got {len(k)}")
    # row[j] holds c_{i,j+1}
    row = [1]
    for i in range(2, n + 1):
        kk = k[i - 2]
        new = [0] * i
        for j in range(1, i + 1):
            a = row[j - 1] if j <= i - 1 else 0
            b = row[j - 2] if j >= 2 else 0
            new[j - 1] = (kk + i - 1 - j) * a + b
        row = new
    c = tuple(row)
    l = tuple((n - j) * c[j - 1] + (c[j - 2] if j >= 2 else 0) for j in range(1, n + 1))
    return FilterCoefficients(c, l)


def check_filter_gains(k: Sequence, n: int) -> ValidationReport:
    rep = ValidationReport()
    for i in range(1, n):
        if not k[i - 1] > n - i + 1:
            rep.violations.append(f"filter gain k_{i}={k[i - 1]:g} must exceed {n - i + 1}")
    return rep


def filter_value(fc: FilterCoefficients, mu: float, x: Sequence) -> float:
    n = fc.n
    return float(sum(fc.c[j] * mu ** (n - 1 - j) * x[j] for j in range(n)))


def psi(fc: FilterCoefficients, mu: float, x: Sequence, theta_hat, phi_n) -> float:
    n = fc.n
    drift = sum(fc.l[j] * mu ** (n - j) * x[j] for j in range(n))
    return float(drift + np.dot(phi_n, theta_hat))


# -- general gain -----------------------------------------------------------

# A polynomial in g^(0), g^(1), ... is a dict {exponent tuple: coefficient}.
Poly = dict


def _padd(a: Poly, b: Poly, scale=1) -> Poly:
    out = dict(a)
    for e, v in b.items():
        out[e] = out.get(e, 0) + scale * v
        if out[e] == 0:
            del out[e]
    return out


def _pmul_g(a: Poly, factor, nv: int) -> Poly:
    """Multiply by factor * g^(0)."""
    out = {}
    for e, v in a.items():
        e2 = list(e)
        e2[0] += 1
        out[tuple(e2)] = v * factor
    return out


def _pdiff(a: Poly, nv: int) -> Poly:
    """Time derivative using d/dt g^(r) = g^(r+1)."""
    out: Poly = {}
    for e, v in a.items():
        for r in range(nv - 1):
            if e[r]:
                e2 = list(e)
                e2[r] -= 1
                e2[r + 1] += 1
                key = tuple(e2)
                out[key] = out.get(key, 0) + v * e[r]
        if e[nv - 1]:
            raise ValueError("gain derivative order exceeds the tracked range")
    return {e: v for e, v in out.items() if v != 0}


def _peval(a: Poly, g: Sequence[float]) -> float:
    return sum(v * math.prod(gi ** p for gi, p in zip(g, e)) for e, v in a.items())


class GainPolynomialFilter:
    """Filter coefficients as polynomials in the gain and its derivatives."""

    def __init__(self, k: Sequence, n: int):
        if len(k) != n - 1:
            raise ValueError(f"need {n - 1} filter gains, got {len(k)}")
        self.n = n
        self.k = tuple(k)
        nv = n + 1
        one = {tuple([0] * nv): 1}
        # coeffs[j] = polynomial multiplying x_{j+1} in s_i
        coeffs: list[Poly] = [one]
        for i in range(2, n + 1):
            new: list[Poly] = [dict() for _ in range(i)]
            for j, cj in enumerate(coeffs):
                new[j] = _padd(new[j], _pmul_g(cj, self.k[i - 2], nv))
                new[j] = _padd(new[j], _pdiff(cj, nv))
                new[j + 1] = _padd(new[j + 1], cj)  # c_j * x_{j+1}' = c_j * x_{j+2}
            coeffs = new
        self.c = coeffs
        # drift of s_n, excluding the last-equation terms
        drift: list[Poly] = [_pdiff(cj, nv) for cj in coeffs]
        for j in range(n - 1):
            drift[j + 1] = _padd(drift[j + 1], coeffs[j])
        self.drift = drift

    def gains(self, ts: TimeScale, t: float) -> list[float]:
        return [ts.mu_deriv(t, r) for r in range(self.n + 1)]

    def value(self, g: Sequence[float], x: Sequence) -> float:
        return float(sum(_peval(cj, g) * x[j] for j, cj in enumerate(self.c)))

    def drift_value(self, g: Sequence[float], x: Sequence) -> float:
        return float(sum(_peval(dj, g) * x[j] for j, dj in enumerate(self.drift)))

    def partial_surfaces(self, g: Sequence[float], x: Sequence) -> np.ndarray:
        """s_1..s_n at the current point (for cascade diagnostics)."""
        out = [float(x[0])]
        f = GainPolynomialFilter
        for i in range(2, self.n + 1):
            out.append(f(self.k[:i - 1], i).value(g, x))
        return np.array(out)


def control_law_nf(model: StrictFeedbackModel, config: GainConfig, x, a: AdaptiveState,
                   t: float, ts: TimeScale, filt: GainPolynomialFilter | None = None) -> ControlOutput:
    """Filter-variable control law and estimator rates."""
    n, q = model.n, model.q
    if not model.normal_form:
        raise ValueError(f"model {model.name!r} has uncertainty before the last equation")
    x = np.asarray(x, dtype=float)
    if filt is None:
        filt = GainPolynomialFilter(config.k[:-1], n)
    g = filt.gains(ts, t)
    s = filt.value(g, x)
    phi_n = np.array([float(v) for v in model.phi[-1](list(x))])
    th = a.theta_hat
    psi_v = filt.drift_value(g, x) + float(phi_n @ th)
    eps = eps_value(config.epsilon, t)
    pp = float(phi_n @ phi_n)
    root = math.sqrt(s * s * pp + eps * eps)
    K = config.k[-1] * g[0] + a.delta_hat * pp / root + psi_v * psi_v / math.sqrt(s * s * psi_v * psi_v + eps * eps)
    u_bar = -K * s
    u = a.rho_hat * u_bar
    theta_rate = config.Gamma @ phi_n * s
    delta_rate = config.gamma_delta * s * s * pp / root
    r_rate = backstepping.rho_rate(config.gamma_rho, model.control_sign, s, u_bar)
    z = np.zeros(n)
    z[-1] = s
    w = np.zeros((n, q))
    w[-1] = phi_n
    out = ControlOutput(u, u_bar, z, np.zeros(max(n - 1, 0)), w, K, psi_v, theta_rate, delta_rate, r_rate)
    out.overflow = not bool(np.all(np.isfinite([u, K, psi_v, delta_rate, r_rate])))
    return out


def prescribed_closed_form_matches(k: Sequence, n: int, T: float, t: float, rtol=1e-12) -> bool:
    """Whether the general polynomial filter reproduces the integer closed form."""
    ts = PrescribedTime(T)
    gf = GainPolynomialFilter(k, n)
    fc = filter_coefficients(k, n)
    g = gf.gains(ts, t)
    mu = g[0]
    for j in range(n):
        want_c = fc.c[j] * mu ** (n - 1 - j)
        want_l = fc.l[j] * mu ** (n - j)
        if not math.isclose(_peval(gf.c[j], g), want_c, rel_tol=rtol, abs_tol=0.0):
            return False
        if not math.isclose(_peval(gf.drift[j], g), want_l, rel_tol=rtol, abs_tol=1e-300):
            return False
    return True
