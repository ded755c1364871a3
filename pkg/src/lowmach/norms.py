"""Sobolev norms, weighted norms and the composite time-dependent norm.

All norms use the coefficient convention of :mod:`lowmach.spectral`:
``||u||_{H^s}^2 = sum_k <xi_k>^{2s} |c_k|^2``.  A sequence of fields is
normed as the Euclidean combination of its components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .spectral import SpectralField, japanese_bracket, mollifier_values
from .state import StateU

FieldLike = Union[SpectralField, Sequence[SpectralField]]


@dataclass(frozen=True)
class ParamTriple:
    """Parameters ``a = (eps, mu, kappa)`` with ``nu = sqrt(mu + kappa)``."""

    eps: float
    mu: float
    kappa: float

    def __post_init__(self) -> None:
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")

    @property
    def nu(self) -> float:
        return math.sqrt(self.mu + self.kappa)


def _as_list(u: FieldLike) -> list[SpectralField]:
    if isinstance(u, SpectralField):
        return [u]
    out: list[SpectralField] = []
    for item in u:
        out.extend(_as_list(item))
    return out


def sobolev_norm(u: FieldLike, sigma: float) -> float:
    """``H^sigma`` norm of a field or of a tuple of fields."""
    parts = _as_list(u)
    if not parts:
        return 0.0
    weight = japanese_bracket(parts[0].grid) ** (2.0 * sigma)
    total = sum(float(np.sum(weight * np.abs(f.coeffs) ** 2)) for f in parts)
    return math.sqrt(total)


def weighted_norm(u: FieldLike, sigma: float, rho: float) -> float:
    """``||u||_{H^{sigma-1}} + rho ||u||_{H^sigma}``."""
    if rho < 0:
        raise ValueError("weight must be nonnegative")
    low = sobolev_norm(u, sigma - 1.0)
    if rho == 0:
        return low
    return low + rho * sobolev_norm(u, sigma)


def l2_norm_physical(u: SpectralField) -> float:
    """Mean-square quadrature norm, equal to the spectral ``L^2`` norm."""
    return math.sqrt(float(np.mean(u.values**2)))


def _gradient_parts(u: FieldLike) -> list[SpectralField]:
    from .spectral import grad

    out: list[SpectralField] = []
    for f in _as_list(u):
        out.extend(grad(f))
    return out


def sup_bracket(state: StateU, a: ParamTriple, s: float) -> float:
    """``||(p, v)||_{H^{s+1}_{eps nu}} + ||theta||_{H^{s+1}_nu}``."""
    nu = a.nu
    pv = [state.p, *state.v]
    return weighted_norm(pv, s + 1, a.eps * nu) + weighted_norm(state.theta, s + 1, nu)


def dissipation_integrand(state: StateU, a: ParamTriple, s: float) -> float:
    """Integrand of the time-integrated part of the composite norm."""
    from .spectral import div

    nu = a.nu
    total = 0.0
    if a.mu > 0:
        total += a.mu * weighted_norm(_gradient_parts(state.v), s + 1, a.eps * nu) ** 2
    if a.kappa > 0:
        total += a.kappa * weighted_norm(_gradient_parts(state.theta), s + 1, nu) ** 2
        total += a.kappa * sobolev_norm(div(state.v), s) ** 2
    if a.mu + a.kappa > 0:
        total += (a.mu + a.kappa) * sobolev_norm(_gradient_parts(state.p), s) ** 2
    return total


def initial_norm(state: StateU, a: ParamTriple, s: float) -> float:
    """Initial-data norm: the sup bracket evaluated on ``state``."""
    return sup_bracket(state, a, s)


@dataclass
class CompositeNormAccumulator:
    """Running evaluation of the composite norm over recorded times.

    ``sup_term`` is the max over recorded times of the sup bracket and
    ``integral_term`` the trapezoidal integral of the dissipation integrand.
    """

    params: ParamTriple
    order_s: float
    sup_term: float = 0.0
    integral_term: float = 0.0
    last_time: float | None = None
    last_integrand: float = 0.0
    samples: int = 0

    def record(self, t: float, state: StateU) -> "CompositeNormAccumulator":
        if self.last_time is not None and t < self.last_time:
            raise ValueError(f"time {t} precedes last recorded time {self.last_time}")
        bracket = sup_bracket(state, self.params, self.order_s)
        integrand = dissipation_integrand(state, self.params, self.order_s)
        self.sup_term = max(self.sup_term, bracket)
        if self.last_time is not None:
            self.integral_term += 0.5 * (t - self.last_time) * (self.last_integrand + integrand)
        self.last_time = t
        self.last_integrand = integrand
        self.samples += 1
        return self

    def value(self) -> float:
        return self.sup_term + math.sqrt(self.integral_term)


def record(acc: CompositeNormAccumulator, t: float, state: StateU) -> CompositeNormAccumulator:
    """Functional alias of :meth:`CompositeNormAccumulator.record`."""
    return acc.record(t, state)


def split_state(state: StateU, h: float) -> tuple[StateU, StateU]:
    """Return ``(J_h U, (I - J_h) U)`` componentwise."""
    jv = mollifier_values(state.grid, h)
    arr = state.to_array()
    low = arr * jv
    return (
        StateU.from_array(state.grid, low),
        StateU.from_array(state.grid, arr - low),
    )


@dataclass(frozen=True)
class NormReport:
    """One monitored time: per-field norms, composite value and split brackets."""

    time: float
    h_sigma: dict[str, float] = field(default_factory=dict)
    composite: float = 0.0
    split_low: float = 0.0
    split_high: float = 0.0

    def columns(self) -> list[str]:
        return ["t", *self.h_sigma.keys(), "composite", "split_low", "split_high"]

    def row(self) -> list[float]:
        return [self.time, *self.h_sigma.values(), self.composite, self.split_low, self.split_high]


def frequency_split_report(
    state: StateU, a: ParamTriple, s: float, time: float = 0.0, composite: float = 0.0
) -> NormReport:
    """Sup brackets of ``J_{eps nu} U`` and ``(I - J_{eps nu}) U``.

    For ``eps nu = 0`` the low part is the whole state and the high part is
    zero by convention.
    """
    h = a.eps * a.nu
    if h == 0:
        low_val = sup_bracket(state, a, s)
        high_val = 0.0
    else:
        low, high = split_state(state, h)
        low_val = sup_bracket(low, a, s)
        high_val = sup_bracket(high, a, s)
    sigma = s + 1
    h_sigma = {
        f"p_H{sigma:g}": sobolev_norm(state.p, sigma),
        f"v_H{sigma:g}": sobolev_norm(state.v, sigma),
        f"theta_H{sigma:g}": sobolev_norm(state.theta, sigma),
    }
    return NormReport(time, h_sigma, composite, low_val, high_val)
