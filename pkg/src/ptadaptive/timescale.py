"""Time-varying feedback gains and the finite-horizon time transformation.

Four gain families are supported:

* :class:`Asymptotic` -- constant gain 1.
* :class:`PrescribedTime` -- ``mu(t) = 1/(T - t)`` on ``[0, T)``, together with
  the map ``t = T(1 - exp(-tau))`` that stretches ``[0, T)`` onto
  ``[0, inf)`` and its tau-axis gain ``beta(tau) = exp(tau)/T``.
* :class:`Exponential` -- ``a'(t) = exp(lam1 t)``.
* :class:`SuperExponential` -- ``a'(t) = exp(lam2 exp(lam1 t))``.

All gains accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class TimeDomainError(ValueError):
    """Raised when a time lies outside the domain of a gain."""


class UnsupportedTimeScale(TypeError):
    """Raised when an operation only makes sense for another gain family."""


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


@lru_cache(maxsize=None)
def _stirling2(j: int) -> tuple[int, ...]:
    """Row ``j`` of the Stirling numbers of the second kind, S(j, 0..j)."""
    row = [1]
    for m in range(1, j + 1):
        new = [0] * (m + 1)
        for k in range(1, m + 1):
            new[k] = k * (row[k] if k < len(row) else 0) + row[k - 1]
        row = new
    return tuple(row)


@dataclass(frozen=True)
class TimeScale:
    """Base class; concrete families override :meth:`mu` and :meth:`mu_deriv`."""

    kind = "base"

    @property
    def horizon(self) -> float | None:
        """Finite settling horizon, or None for infinite-time families."""
        return None

    def mu(self, t):
        raise NotImplementedError

    def mu_deriv(self, t, order: int):
        raise NotImplementedError

    def t_to_tau(self, t):
        raise UnsupportedTimeScale(f"t_to_tau is defined for prescribed-time scales, not {self.kind}")

    def tau_to_t(self, tau):
        raise UnsupportedTimeScale(f"tau_to_t is defined for prescribed-time scales, not {self.kind}")

    def beta(self, tau):
        raise UnsupportedTimeScale(f"beta is defined for prescribed-time scales, not {self.kind}")


@dataclass(frozen=True)
class Asymptotic(TimeScale):
    kind = "asymptotic"

    def mu(self, t):
        return _out(np.ones_like(np.asarray(t, dtype=float)), t)

    def mu_deriv(self, t, order: int):
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        fill = 1.0 if order == 0 else 0.0
        return _out(np.full_like(np.asarray(t, dtype=float), fill), t)


@dataclass(frozen=True)
class PrescribedTime(TimeScale):
    T: float
    kind = "prescribed_time"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"prescribed time T must be positive, got {self.T}")

    @property
    def horizon(self) -> float:
        return self.T

    def _check(self, t):
        a = np.asarray(t, dtype=float)
        if np.any(a < 0) or np.any(a >= self.T) or not np.all(np.isfinite(a)):
            raise TimeDomainError(f"t must lie in [0, {self.T}); got {t}")
        return a

    def mu(self, t):
        a = self._check(t)
        return _out(1.0 / (self.T - a), t)

    def mu_deriv(self, t, order: int):
        # mu' = mu^2, hence mu^(j) = j! mu^(j+1)
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        a = self._check(t)
        m = 1.0 / (self.T - a)
        return _out(math.factorial(order) * m ** (order + 1), t)

    def t_to_tau(self, t):
        a = self._check(t)
        return _out(np.log(self.T) - np.log(self.T - a), t)

    def tau_to_t(self, tau):
        a = np.asarray(tau, dtype=float)
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise TimeDomainError(f"tau must lie in [0, inf); got {tau}")
        return _out(-self.T * np.expm1(-a), tau)

    def beta(self, tau):
        a = np.asarray(tau, dtype=float)
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise TimeDomainError(f"tau must lie in [0, inf); got {tau}")
        return _out(np.exp(a) / self.T, tau)


@dataclass(frozen=True)
class Exponential(TimeScale):
    """``a'(t) = exp(lam1 t)``; ``lam2`` is the declared upper envelope rate."""

    lam1: float = 1.0
    lam2: float | None = None
    kind = "exponential"

    def __post_init__(self):
        if not self.lam1 > 0:
            raise ValueError("lam1 must be positive")
        if self.lam2 is not None and not self.lam2 > self.lam1:
            raise ValueError("lam2 must exceed lam1")

    def mu(self, t):
        a = np.asarray(t, dtype=float)
        return _out(np.exp(self.lam1 * a), t)

    def mu_deriv(self, t, order: int):
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        a = np.asarray(t, dtype=float)
        return _out(self.lam1 ** order * np.exp(self.lam1 * a), t)

    def envelope_holds(self, grid, rtol: float = 1e-12) -> bool:
        lam2 = self.lam2 if self.lam2 is not None else 2.0 * self.lam1
        g = np.asarray(grid, dtype=float)
        a = np.asarray(self.mu(g))
        lo = np.exp(self.lam1 * g)
        hi = np.exp(lam2 * g)
        return bool(np.all(lo <= a * (1 + rtol)) and np.all(a <= hi * (1 + rtol)))


@dataclass(frozen=True)
class SuperExponential(TimeScale):
    """``a'(t) = exp(lam2 exp(lam1 t))``."""

    lam1: float = 0.1
    lam2: float = 1.0
    kind = "super_exponential"

    def __post_init__(self):
        if not (self.lam1 > 0 and self.lam2 > 0):
            raise ValueError("lam1 and lam2 must be positive")

    def mu(self, t):
        a = np.asarray(t, dtype=float)
        return _out(np.exp(self.lam2 * np.exp(self.lam1 * a)), t)

    def mu_deriv(self, t, order: int):
        # d^j/dt^j exp(c e^{lt}) = l^j exp(c e^{lt}) * sum_k S(j,k) (c e^{lt})^k
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        a = np.asarray(t, dtype=float)
        inner = self.lam2 * np.exp(self.lam1 * a)
        poly = sum(s * inner ** k for k, s in enumerate(_stirling2(order)))
        return _out(self.lam1 ** order * np.exp(inner) * poly, t)

    def envelope_holds(self, grid, rtol: float = 1e-12) -> bool:
        g = np.asarray(grid, dtype=float)
        lo = np.exp(self.lam2 * np.exp(self.lam1 * g))
        return bool(np.all(lo <= np.asarray(self.mu(g)) * (1 + rtol)))


def make_timescale(kind: str, **params) -> TimeScale:
    """Build a gain family from its string name (as used in scenario files)."""
    table = {
        "asymptotic": Asymptotic,
        "prescribed_time": PrescribedTime,
        "exponential": Exponential,
        "super_exponential": SuperExponential,
    }
    try:
        cls = table[kind]
    except KeyError:
        raise ValueError(f"unknown time-scale kind {kind!r}; expected one of {sorted(table)}") from None
    return cls(**params)
