"""Strict-feedback plants with time-varying parameters and the two built-in examples."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

# phi_i(x) receives the full state list (floats or jets) and returns q entries;
# it may only read x[0..i-1].
Regressor = Callable[[Sequence], list]


def sgn(v: float) -> float:
    """Signum with sgn(0) = 0."""
    return float(np.sign(v))


@dataclass(frozen=True)
class StrictFeedbackModel:
    name: str
    n: int
    q: int
    phi: tuple[Regressor, ...]
    theta_true: Callable[[float, np.ndarray], np.ndarray]
    b_true: Callable[[float], float]
    b_lower: float
    control_sign: int = 1
    ell_theta: np.ndarray | None = None
    ell_b: float | None = None
    delta_theta_true: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.q < 1:
            raise ValueError("n and q must be >= 1")
        if len(self.phi) != self.n:
            raise ValueError(f"need {self.n} regressors, got {len(self.phi)}")
        if self.b_lower <= 0:
            raise ValueError("b_lower must be positive")
        if self.control_sign not in (1, -1):
            raise ValueError("control_sign must be +1 or -1")

    @property
    def normal_form(self) -> bool:
        """True when only the last equation carries an uncertain term."""
        if self.params.get("normal_form") is not None:
            return bool(self.params["normal_form"])
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = list(rng.normal(size=self.n))
            for i in range(self.n - 1):
                if any(abs(float(v)) > 0 for v in self.phi[i](x)):
                    return False
        return True

    def phi_values(self, x: Sequence[float]) -> np.ndarray:
        """Regressor matrix, row i = phi_{i+1}(x)."""
        out = np.zeros((self.n, self.q))
        for i, f in enumerate(self.phi):
            out[i] = [float(v) for v in f(x)]
        return out

    def plant_rhs(self, x, u: float, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        theta = np.asarray(self.theta_true(t, x), dtype=float)
        dx = self.phi_values(x) @ theta
        dx[:-1] += x[1:]
        dx[-1] += self.b_true(t) * u
        return dx


def _zero(q: int) -> Regressor:
    return lambda x: [0.0] * q


def builtin_benchmark() -> StrictFeedbackModel:
    """Third-order chain with a fast-switching, state-dependent parameter."""

    def theta(t, x):
        return np.array([
            1.0 + 0.6 * math.cos(40.0 * x[0] * t) + 0.2 * math.sin(x[2] ** 2 * t)
            + 0.2 * sgn(math.sin(20.0 * t))
        ])

    return StrictFeedbackModel(
        name="benchmark",
        n=3,
        q=1,
        phi=(lambda x: [x[0]], _zero(1), _zero(1)),
        theta_true=theta,
        b_true=lambda t: 1.4 + 0.2 * math.cos(10.0 * t),
        b_lower=1.2,
        control_sign=1,
        ell_theta=np.array([1.0]),
        ell_b=1.2,
        delta_theta_true=1.0,
        params={"normal_form": False},
    )


WING_ROCK_THETA = (-26.6667, 0.67485)


def builtin_wing_rock(theta1: float = WING_ROCK_THETA[0],
                      theta2: float = WING_ROCK_THETA[1]) -> StrictFeedbackModel:
    """Single-degree-of-freedom roll dynamics with switching aerodynamic coefficients."""
    nominal = np.array([theta1, theta2])

    def theta(t, x):
        return nominal * (1.0 + 0.2 * sgn(math.sin(3.0 * t)))

    return StrictFeedbackModel(
        name="wing_rock",
        n=2,
        q=2,
        phi=(_zero(2), lambda x: [x[0], x[1]]),
        theta_true=theta,
        b_true=lambda t: 2.0 + 0.2 * sgn(math.sin(3.0 * t)) * math.cos(t),
        b_lower=1.8,
        control_sign=1,
        ell_theta=nominal.copy(),
        ell_b=1.8,
        delta_theta_true=0.2 * float(np.linalg.norm(nominal)),
        params={"normal_form": True, "theta1": theta1, "theta2": theta2},
    )


_REGISTRY = {
    "benchmark": builtin_benchmark,
    "wing_rock": builtin_wing_rock,
}


def model_names() -> list[str]:
    return sorted(_REGISTRY)


def get_model(name: str, **overrides) -> StrictFeedbackModel:
    """Look up a built-in plant and apply field overrides (b_lower, control_sign, ...)."""
    try:
        m = _REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {model_names()}") from None
    if overrides:
        bad = set(overrides) - {"b_lower", "ell_b", "delta_theta_true", "ell_theta"}
        if bad:
            raise ValueError(f"model {name!r} does not accept overrides {sorted(bad)}")
        if "ell_theta" in overrides:
            overrides["ell_theta"] = np.asarray(overrides["ell_theta"], dtype=float)
        m = replace(m, **overrides)
    return m
