"""Coefficient sets for the fluctuation system and their structural checks.

A :class:`CoefficientSet` bundles the smooth functions of the reduced
unknowns ``(vartheta, wp)`` standing for ``(theta, eps p)``.  The perfect
gas preset is built from the gas constant ``R``, the specific heat ``C_V``
and material laws for conductivity and viscosities given as functions of
the physical temperature ``T = exp(vartheta)``.

Reference pressure and temperature are 1 internally; other references are
handled by :func:`to_fluctuation` and :func:`from_fluctuation`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .spectral import SpectralField
from .state import PrimitiveState, StateU

Fn1 = Callable[[np.ndarray], np.ndarray]
Fn2 = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MaterialLaw:
    """Temperature law ``coef * T**exponent``; ``exponent = 0`` is a constant."""

    coef: float = 1.0
    exponent: float = 0.0

    def __call__(self, T: np.ndarray) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        if self.exponent == 0:
            return np.full_like(T, self.coef)
        return self.coef * T**self.exponent

    def to_config(self) -> dict[str, Any]:
        law = "constant" if self.exponent == 0 else "power"
        return {"law": law, **asdict(self)}

    @classmethod
    def from_config(cls, block: dict[str, Any] | float) -> "MaterialLaw":
        if isinstance(block, (int, float)):
            return cls(float(block), 0.0)
        law = block.get("law", "constant")
        if law == "constant":
            return cls(float(block.get("coef", 1.0)), 0.0)
        if law == "power":
            return cls(float(block.get("coef", 1.0)), float(block.get("exponent", 0.0)))
        raise ValueError(f"unknown material law {law!r}; expected 'constant' or 'power'")


@dataclass(frozen=True)
class PerfectGasData:
    """Physical constants and material laws behind a perfect gas preset."""

    R: float
    C_V: float
    k_fn: Fn1
    zeta_fn: Fn1
    eta_fn: Fn1

    @property
    def gamma(self) -> float:
        return 1.0 + self.R / self.C_V


def _const(value: float) -> Fn2:
    return lambda th, wp: np.full(np.broadcast(th, wp).shape, value)


@dataclass(frozen=True)
class CoefficientSet:
    """Smooth coefficient functions of ``(vartheta, wp)``.

    ``g1, g2, g3`` take ``(vartheta, wp)``; ``chi1, chi2, chi3`` take ``wp``;
    ``beta, zeta, eta`` take ``vartheta``.  ``S`` and ``varrho`` are optional
    compatibility potentials, and ``wp_from_rho`` inverts ``varrho`` in its
    second argument (needed by the symmetrized formulation).
    """

    g1: Fn2
    g2: Fn2
    g3: Fn2
    chi1: Fn1
    chi2: Fn1
    chi3: Fn1
    beta: Fn1
    zeta: Fn1
    eta: Fn1
    alpha_exponent: float = 1.0
    S: Optional[Fn2] = None
    varrho: Optional[Fn2] = None
    wp_from_rho: Optional[Fn2] = None
    name: str = "custom"
    perfect: Optional["PerfectGasData"] = None
    config: dict[str, Any] = field(default_factory=dict, compare=False)

    def reference(self) -> dict[str, float]:
        """Coefficient values at ``(vartheta, wp) = (0, 0)``."""
        z = np.zeros(())
        return {
            "g1": float(self.g1(z, z)),
            "g2": float(self.g2(z, z)),
            "g3": float(self.g3(z, z)),
            "chi1": float(self.chi1(z)),
            "chi2": float(self.chi2(z)),
            "chi3": float(self.chi3(z)),
            "beta": float(self.beta(z)),
            "zeta": float(self.zeta(z)),
            "eta": float(self.eta(z)),
        }

    def to_config(self) -> dict[str, Any]:
        return dict(self.config) if self.config else {"preset": self.name}


def perfect_gas(
    R: float = 1.0,
    C_V: float = 1.5,
    k_fn: Fn1 | MaterialLaw | None = None,
    zeta_fn: Fn1 | MaterialLaw | None = None,
    eta_fn: Fn1 | MaterialLaw | None = None,
    alpha: float = 1.0,
) -> CoefficientSet:
    """Perfect gas coefficients with ``gamma = 1 + R / C_V``.

    Material laws are functions of the physical temperature.  They default to
    ``k = 1``, ``zeta = 1`` and ``eta = 0``.

    Raises:
        ValueError: If ``R`` or ``C_V`` is not positive, or ``alpha < 0``.
    """
    if not (R > 0 and C_V > 0):
        raise ValueError(f"R and C_V must be positive, got R={R}, C_V={C_V}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    k_fn = k_fn if k_fn is not None else MaterialLaw(1.0)
    zeta_fn = zeta_fn if zeta_fn is not None else MaterialLaw(1.0)
    eta_fn = eta_fn if eta_fn is not None else MaterialLaw(0.0)
    gamma = 1.0 + R / C_V

    def g2(th, wp):
        return np.exp(-np.asarray(th, dtype=float)) / R + 0.0 * np.asarray(wp)

    def chi1(wp):
        return (gamma - 1.0) / gamma * np.exp(-np.asarray(wp, dtype=float))

    def chi23(wp):
        return np.exp(-np.asarray(wp, dtype=float))

    def beta(th):
        T = np.exp(np.asarray(th, dtype=float))
        return k_fn(T) * T

    def zeta(th):
        return zeta_fn(np.exp(np.asarray(th, dtype=float)))

    def eta(th):
        return eta_fn(np.exp(np.asarray(th, dtype=float)))

    def S(th, wp):
        return (C_V / R) * np.asarray(th) - np.asarray(wp) / gamma

    def varrho(th, wp):
        return (np.asarray(wp) - np.asarray(th)) / gamma

    def wp_from_rho(th, rho):
        return gamma * np.asarray(rho) + np.asarray(th)

    config: dict[str, Any] = {"preset": "perfect-gas", "R": R, "C_V": C_V, "alpha": alpha}
    for key, law in (("k", k_fn), ("zeta", zeta_fn), ("eta", eta_fn)):
        if isinstance(law, MaterialLaw):
            config[key] = law.to_config()
    return CoefficientSet(
        g1=_const(1.0 / gamma),
        g2=g2,
        g3=_const(C_V / R),
        chi1=chi1,
        chi2=chi23,
        chi3=chi23,
        beta=beta,
        zeta=zeta,
        eta=eta,
        alpha_exponent=alpha,
        S=S,
        varrho=varrho,
        wp_from_rho=wp_from_rho,
        name="perfect-gas",
        perfect=PerfectGasData(R, C_V, k_fn, zeta_fn, eta_fn),
        config=config,
    )


def coefficients_from_config(block: dict[str, Any]) -> CoefficientSet:
    """Rebuild a coefficient set from its config block."""
    preset = block.get("preset", "perfect-gas")
    if preset != "perfect-gas":
        raise ValueError(f"unknown coefficient preset {preset!r}; available: perfect-gas")
    return perfect_gas(
        R=float(block.get("R", 1.0)),
        C_V=float(block.get("C_V", 1.5)),
        k_fn=MaterialLaw.from_config(block.get("k", 1.0)),
        zeta_fn=MaterialLaw.from_config(block.get("zeta", 1.0)),
        eta_fn=MaterialLaw.from_config(block.get("eta", 0.0)),
        alpha=float(block.get("alpha", 1.0)),
    )


@dataclass(frozen=True)
class ClauseResult:
    name: str
    status: str
    margin: float | None = None
    worst_point: tuple[float, float] | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"


@dataclass(frozen=True)
class ValidationReport:
    clauses: tuple[ClauseResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    def __getitem__(self, name: str) -> ClauseResult:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "clauses": [asdict(c) for c in self.clauses],
        }

    def table(self) -> str:
        lines = [f"{'clause':<28} {'status':<12} {'margin':>14}  worst point"]
        for c in self.clauses:
            margin = "" if c.margin is None else f"{c.margin:.6e}"
            point = "" if c.worst_point is None else f"({c.worst_point[0]:.4g}, {c.worst_point[1]:.4g})"
            lines.append(f"{c.name:<28} {c.status:<12} {margin:>14}  {point}")
        return "\n".join(lines)


def _positivity(name: str, values: np.ndarray, th: np.ndarray, wp: np.ndarray) -> ClauseResult:
    idx = int(np.argmin(values))
    margin = float(values.flat[idx])
    status = "pass" if margin > 0 else "fail"
    return ClauseResult(name, status, margin, (float(th.flat[idx]), float(wp.flat[idx])))


def _fd_identity(
    name: str, fd: np.ndarray, exact: np.ndarray, th: np.ndarray, wp: np.ndarray, tol: float
) -> ClauseResult:
    err = np.abs(fd - exact) / np.maximum(np.abs(exact), 1e-300)
    idx = int(np.argmax(err))
    worst = float(err.flat[idx])
    status = "pass" if worst <= tol else "fail"
    return ClauseResult(
        name, status, tol - worst, (float(th.flat[idx]), float(wp.flat[idx])),
        f"max relative error {worst:.3e}",
    )


def validate_assumptions(
    c: CoefficientSet,
    box: tuple[tuple[float, float], tuple[float, float]] = ((-1.0, 1.0), (-1.0, 1.0)),
    n_samples: int = 100,
    fd_step: float = 1e-5,
    tol: float = 1e-6,
) -> ValidationReport:
    """Check the structural and compatibility assumptions on a sample box.

    The box gives ranges for ``vartheta`` and ``wp``; ``n_samples`` points
    are taken along each axis.  Margins are worst-case values: the minimum
    of a positive quantity, or ``tol`` minus the worst relative error of a
    finite-difference identity.
    """
    if n_samples < 100:
        raise ValueError(f"need at least 100 samples per axis, got {n_samples}")
    th1 = np.linspace(box[0][0], box[0][1], n_samples)
    wp1 = np.linspace(box[1][0], box[1][1], n_samples)
    th, wp = np.meshgrid(th1, wp1, indexing="ij")

    g = [np.broadcast_to(fn(th, wp), th.shape) for fn in (c.g1, c.g2, c.g3)]
    chi = [np.broadcast_to(fn(wp), th.shape) for fn in (c.chi1, c.chi2, c.chi3)]
    beta = np.broadcast_to(c.beta(th), th.shape)
    zeta = np.broadcast_to(c.zeta(th), th.shape)
    eta = np.broadcast_to(c.eta(th), th.shape)

    clauses = [
        _positivity("A1 g_i > 0", np.minimum(np.minimum(g[0], g[1]), g[2]), th, wp),
        _positivity("A2 beta > 0", beta, th, wp),
        _positivity("A2 zeta > 0", zeta, th, wp),
        _positivity("A2 eta + zeta > 0", eta + zeta, th, wp),
        _positivity("A3 chi_i > 0", np.minimum(np.minimum(chi[0], chi[1]), chi[2]), th, wp),
        _positivity("A3 chi1 < chi3", chi[2] - chi[0], th, wp),
    ]

    h = fd_step
    if c.S is None:
        clauses.append(ClauseResult("compat dS", "not checked", detail="S not provided"))
    else:
        s0 = float(c.S(np.zeros(()), np.zeros(())))
        dth = (c.S(th + h, wp) - c.S(th - h, wp)) / (2 * h)
        dwp = (c.S(th, wp + h) - c.S(th, wp - h)) / (2 * h)
        clauses += [
            ClauseResult("compat S(0,0) = 0", "pass" if abs(s0) <= tol else "fail", tol - abs(s0)),
            _fd_identity("compat dS/dth = g3", dth, g[2], th, wp, tol),
            _fd_identity("compat dS/dwp = -g1", dwp, -g[0], th, wp, tol),
        ]
    if c.varrho is None:
        clauses.append(ClauseResult("compat dvarrho", "not checked", detail="varrho not provided"))
    else:
        r0 = float(c.varrho(np.zeros(()), np.zeros(())))
        dth = (c.varrho(th + h, wp) - c.varrho(th - h, wp)) / (2 * h)
        dwp = (c.varrho(th, wp + h) - c.varrho(th, wp - h)) / (2 * h)
        clauses += [
            ClauseResult(
                "compat varrho(0,0) = 0", "pass" if abs(r0) <= tol else "fail", tol - abs(r0)
            ),
            _fd_identity("compat dvarrho/dth", dth, -chi[0] / chi[2] * g[2], th, wp, tol),
            _fd_identity("compat dvarrho/dwp = g1", dwp, g[0], th, wp, tol),
        ]
    return ValidationReport(tuple(clauses))


def symmetrizer_weights(c: CoefficientSet, th: np.ndarray, wp: np.ndarray, eps: float):
    """Return ``(gamma1, gamma2, delta1, delta2, delta3)`` at the given points.

    ``eps grad p = gamma1 grad theta + gamma2 grad rho``; the deltas are the
    diagonal weights that make the singular part antisymmetric.
    """
    g1, g2, g3 = c.g1(th, wp), c.g2(th, wp), c.g3(th, wp)
    x1, x3 = c.chi1(wp), c.chi3(wp)
    gamma1 = x1 * g3 / (x3 * g1)
    gamma2 = 1.0 / g1
    delta1 = gamma2 * x3 / (x3 - x1)
    delta2 = eps**2 * g2
    delta3 = gamma1 * g3
    return gamma1, gamma2, delta1, delta2, delta3


def validate_symmetrizer(
    c: CoefficientSet,
    eps: float,
    box: tuple[tuple[float, float], tuple[float, float]] = ((-1.0, 1.0), (-1.0, 1.0)),
    n_samples: int = 100,
) -> ValidationReport:
    """Positivity of the three symmetrizer weights on a sample box."""
    th1 = np.linspace(box[0][0], box[0][1], n_samples)
    wp1 = np.linspace(box[1][0], box[1][1], n_samples)
    th, wp = np.meshgrid(th1, wp1, indexing="ij")
    _, _, d1, d2, d3 = symmetrizer_weights(c, th, wp, eps)
    return ValidationReport(
        tuple(
            _positivity(name, np.broadcast_to(val, th.shape), th, wp)
            for name, val in (("delta1 > 0", d1), ("delta2 > 0", d2), ("delta3 > 0", d3))
        )
    )


def to_fluctuation(
    state: PrimitiveState, eps: float, Pbar: float = 1.0, Tbar: float = 1.0
) -> StateU:
    """Map ``(P, v, T)`` to ``(p, v, theta)`` with ``p = log(P/Pbar)/eps``."""
    if not (Pbar > 0 and Tbar > 0 and eps > 0):
        raise ValueError("reference values and eps must be positive")
    grid = state.grid
    p = SpectralField.from_values(grid, np.log(state.P.values / Pbar) / eps)
    theta = SpectralField.from_values(grid, np.log(state.T.values / Tbar))
    return StateU(p, state.v, theta)


def from_fluctuation(
    state: StateU, eps: float, Pbar: float = 1.0, Tbar: float = 1.0
) -> PrimitiveState:
    """Inverse of :func:`to_fluctuation`."""
    if not (Pbar > 0 and Tbar > 0 and eps > 0):
        raise ValueError("reference values and eps must be positive")
    grid = state.grid
    P = SpectralField.from_values(grid, Pbar * np.exp(eps * state.p.values))
    T = SpectralField.from_values(grid, Tbar * np.exp(state.theta.values))
    return PrimitiveState(P, state.v, T)


def gamma_of(c: CoefficientSet) -> float:
    """Adiabatic index of a perfect gas set."""
    if c.perfect is None:
        raise ValueError("coefficient set is not a perfect gas preset")
    return c.perfect.gamma


__all__ = [
    "MaterialLaw",
    "CoefficientSet",
    "PerfectGasData",
    "perfect_gas",
    "coefficients_from_config",
    "ClauseResult",
    "ValidationReport",
    "validate_assumptions",
    "validate_symmetrizer",
    "symmetrizer_weights",
    "to_fluctuation",
    "from_fluctuation",
    "gamma_of",
]
