"""Stiff-aware time stepping on stacked coefficient arrays.

The constant-coefficient part ``L`` of a model (per-mode ``m x m`` matrices,
see :meth:`lowmach.models.Model.stiff_matrices`) is integrated exactly or
implicitly; the remainder ``N(U, t) = rhs(U, t) - L U`` is explicit.

Two schemes are available:

* ``"ERK4_exponential"``: fourth-order Lawson (integrating-factor) RK4 with
  per-mode matrix exponentials ``exp(tau L)``;
* ``"IMEX_ARS443"``: the four-stage additive scheme of Ascher, Ruuth and
  Spiteri, third order, with per-mode implicit solves.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .models import Model
from .state import FieldState

SCHEMES = ("ERK4_exponential", "IMEX_ARS443")

Monitor = Callable[[float, FieldState], Any]


class BlowUpError(RuntimeError):
    """Raised when a step produces non-finite values or exceeds the cap."""

    def __init__(self, message: str, time: float, step: int):
        super().__init__(message)
        self.time = time
        self.step = step


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping settings; field names double as config keys.

    ``dt`` is the fixed step, or the upper bound when ``adaptive`` is set, in
    which case each step uses :func:`choose_dt` with ``safety``.
    """

    scheme: str = "ERK4_exponential"
    dt: float = 1e-2
    safety: float = 0.5
    t_end: float = 1.0
    adaptive: bool = False
    stiff: str = "full"
    blowup_threshold: float = 1e6
    max_steps: int = 1_000_000

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.safety > 0:
            raise ValueError(f"safety must be positive, got {self.safety}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")


def apply_matrices(M: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Per-mode product ``(M U)_i = sum_j M[..., i, j] U[j, ...]``."""
    Um = np.moveaxis(U, 0, -1)[..., None]
    return np.moveaxis((M @ Um)[..., 0], -1, 0)


class SplitOperator:
    """Stiff symbol of a model plus the explicit remainder.

    Exponentials and implicit-solve inverses are cached per step size; the
    cache holds a handful of entries so adaptive runs do not thrash it.
    """

    cache_size = 4

    def __init__(self, model: Model, kind: str = "full"):
        self.model = model
        self.kind = kind
        self.stiff_symbol = model.stiff_matrices(kind)
        self.is_trivial = not np.any(self.stiff_symbol)
        self._cache: dict[tuple[str, float], np.ndarray] = {}

    def apply_stiff(self, U: np.ndarray) -> np.ndarray:
        if self.is_trivial:
            return np.zeros_like(U)
        return apply_matrices(self.stiff_symbol, U)

    def soft_rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        return self.model.rhs(U, t) - self.apply_stiff(U)

    def _cached(self, key: tuple[str, float], build: Callable[[], np.ndarray]) -> np.ndarray:
        if key not in self._cache:
            if len(self._cache) >= self.cache_size:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = build()
        return self._cache[key]

    def exponential(self, tau: float) -> np.ndarray:
        """Per-mode ``exp(tau L)`` (scaling and squaring, Pade 13)."""
        return self._cached(("exp", tau), lambda: expm(tau * self.stiff_symbol))

    def resolvent(self, tau: float) -> np.ndarray:
        """Per-mode ``(I - tau L)^{-1}``."""
        eye = np.eye(self.model.m)
        return self._cached(("res", tau), lambda: np.linalg.inv(eye - tau * self.stiff_symbol))


def build_split(model: Model, kind: str = "full") -> SplitOperator:
    return SplitOperator(model, kind)


def _lawson_rk4(U: np.ndarray, t: float, dt: float, split: SplitOperator) -> np.ndarray:
    N = split.soft_rhs
    if split.is_trivial:
        k1 = N(U, t)
        k2 = N(U + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = N(U + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = N(U + dt * k3, t + dt)
        return U + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    E = split.exponential(dt)
    Eh = split.exponential(0.5 * dt)
    ap = apply_matrices
    k1 = N(U, t)
    k2 = N(ap(Eh, U + 0.5 * dt * k1), t + 0.5 * dt)
    EhU = ap(Eh, U)
    k3 = N(EhU + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = N(ap(E, U) + dt * ap(Eh, k3), t + dt)
    return ap(E, U) + dt / 6.0 * (ap(E, k1) + 2 * ap(Eh, k2 + k3) + k4)


# ARS(4,4,3): implicit tableau (first column zero, diagonal 1/2) and
# explicit tableau; both are stiffly accurate so the update is the last stage.
_ARS_C = (0.0, 0.5, 2.0 / 3.0, 0.5, 1.0)
_ARS_IMPL = (
    (),
    (0.0,),
    (0.0, 1.0 / 6.0),
    (0.0, -0.5, 0.5),
    (0.0, 1.5, -1.5, 0.5),
)
_ARS_EXPL = (
    (),
    (0.5,),
    (11.0 / 18.0, 1.0 / 18.0),
    (5.0 / 6.0, -5.0 / 6.0, 0.5),
    (0.25, 1.75, 0.75, -1.75),
)
_ARS_DIAG = 0.5


def _ars443(U: np.ndarray, t: float, dt: float, split: SplitOperator) -> np.ndarray:
    R = split.resolvent(_ARS_DIAG * dt)
    stages = [U]
    Ns = [split.soft_rhs(U, t)]
    Ls = [split.apply_stiff(U)]
    for i in range(1, 5):
        acc = U.copy()
        for j, coef in enumerate(_ARS_EXPL[i]):
            if coef:
                acc = acc + dt * coef * Ns[j]
        for j, coef in enumerate(_ARS_IMPL[i]):
            if coef:
                acc = acc + dt * coef * Ls[j]
        Y = apply_matrices(R, acc)
        stages.append(Y)
        if i < 4:
            Ns.append(split.soft_rhs(Y, t + _ARS_C[i] * dt))
            Ls.append(split.apply_stiff(Y))
    return stages[-1]


def step(
    U: np.ndarray,
    dt: float,
    split: SplitOperator,
    config: StepperConfig,
    t: float = 0.0,
) -> np.ndarray:
    """Advance the coefficient array ``U`` by one step of size ``dt``.

    Raises:
        BlowUpError: If the new state contains NaN or Inf.
    """
    if config.scheme == "ERK4_exponential":
        out = _lawson_rk4(U, t, dt, split)
    else:
        out = _ars443(U, t, dt, split)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite values after step at t={t:.6g}", t + dt, -1)
    return out


def choose_dt(U: np.ndarray, model: Model, safety: float, dt_max: float, kind: str = "full", t: float = 0.0) -> float:
    """``safety * min(dx / |v|_inf, 2.5 / rate_soft)`` capped by ``dt_max``.

    The rate of the explicit remainder comes from ``model.soft_radius``; the
    stiff part never constrains the step.
    """
    limits = [dt_max]
    speed = model.max_speed(U)
    if speed > 0:
        limits.append(safety * model.grid.spacing / speed)
    rate = model.soft_radius(U, t, kind)
    if rate > 0:
        limits.append(safety * 2.5 / rate)
    return float(min(limits))


@dataclass
class Trajectory:
    """Result of :func:`integrate`."""

    final: FieldState
    time: float
    steps: int
    times: list[float] = field(default_factory=list)
    monitor_outputs: list[list[Any]] = field(default_factory=list)
    blew_up: bool = False
    message: str = ""
    wall_time: float = 0.0


def integrate(
    model: Model,
    state0: FieldState | np.ndarray,
    config: StepperConfig,
    monitors: Sequence[Monitor] = (),
    split: SplitOperator | None = None,
    raise_on_blowup: bool = True,
) -> Trajectory:
    """Step from ``t = 0`` to ``config.t_end``, calling monitors after each step.

    Monitors are called as ``monitor(t, state)`` at ``t = 0`` and after every
    accepted step, in registration order.  ``model.project`` runs after each
    step (identity except for the limit system).

    Raises:
        BlowUpError: On non-finite values or a max-norm above
            ``config.blowup_threshold``, unless ``raise_on_blowup`` is false,
            in which case the trajectory is returned with ``blew_up`` set.
    """
    started = time.perf_counter()
    grid = model.grid
    U = state0.to_array() if isinstance(state0, FieldState) else np.asarray(state0, dtype=complex)
    if split is None:
        split = SplitOperator(model, config.stiff)
    outputs: list[list[Any]] = [[] for _ in monitors]
    times: list[float] = []

    def observe(t: float, arr: np.ndarray) -> None:
        times.append(t)
        if monitors:
            st = model.state_cls.from_array(grid, arr)
            for out, mon in zip(outputs, monitors):
                out.append(mon(t, st))

    t = 0.0
    n = 0
    observe(t, U)
    blew_up, message = False, ""
    tol = 1e-12 * max(1.0, config.t_end)
    while config.t_end - t > tol:
        if n >= config.max_steps:
            raise RuntimeError(f"step limit {config.max_steps} reached at t={t:.6g}")
        if config.adaptive:
            dt = choose_dt(U, model, config.safety, config.dt, config.stiff, t)
        else:
            dt = config.dt
        remaining = config.t_end - t
        if remaining <= dt * (1.0 + 1e-9):
            dt = remaining
        elif remaining - dt < 0.25 * dt:
            # avoid a sliver final step by splitting the remainder evenly
            dt = 0.5 * remaining
        try:
            U_new = step(U, dt, split, config, t)
            U_new = model.project(U_new, t + dt)
            peak = float(np.max(np.abs(grid.inverse(U_new))))
            if peak > config.blowup_threshold:
                raise BlowUpError(
                    f"max-norm {peak:.3e} exceeds {config.blowup_threshold:.1e} at t={t + dt:.6g}",
                    t + dt,
                    n + 1,
                )
        except BlowUpError as err:
            err.step = n + 1
            if raise_on_blowup:
                raise
            blew_up, message = True, str(err)
            break
        U = U_new
        t += dt
        n += 1
        observe(t, U)
    if not blew_up and abs(t - config.t_end) <= tol:
        t = config.t_end
    return Trajectory(
        final=model.state_cls.from_array(grid, U),
        time=t,
        steps=n,
        times=times,
        monitor_outputs=outputs,
        blew_up=blew_up,
        message=message,
        wall_time=time.perf_counter() - started,
    )


def richardson_order(errors: Sequence[float]) -> list[float]:
    """Observed orders ``log2(e_k / e_{k+1})`` for successive dt halvings."""
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]
