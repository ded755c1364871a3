"""State containers shared by the models, norms and integrators.

Each state is a frozen dataclass of :class:`SpectralField` components, some
of them vectors (tuples of ``d`` fields).  ``to_array`` stacks all scalar
components into one coefficient array of shape ``(m, *grid.shape)``; the
integrators work on that array and never see the dataclasses.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, ClassVar, TypeVar

import numpy as np

from .spectral import SpectralField, SpectralGrid

S = TypeVar("S", bound="FieldState")


@dataclass(frozen=True)
class FieldState:
    """Base class; subclasses list which components are vectors."""

    vector_components: ClassVar[tuple[str, ...]] = ()

    def __post_init__(self) -> None:
        grid = None
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name in self.vector_components:
                val = tuple(val)
                object.__setattr__(self, f.name, val)
                members = val
            else:
                members = (val,)
            for m in members:
                if not isinstance(m, SpectralField):
                    raise TypeError(f"component {f.name} must hold SpectralField values")
                if grid is None:
                    grid = m.grid
                elif m.grid != grid:
                    raise ValueError("all components must share one grid")
        for name in self.vector_components:
            if len(getattr(self, name)) != grid.dim:
                raise ValueError(f"vector component {name} needs {grid.dim} entries")

    @property
    def grid(self) -> SpectralGrid:
        return self.scalars()[0].grid

    def scalars(self) -> list[SpectralField]:
        out: list[SpectralField] = []
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name in self.vector_components:
                out.extend(val)
            else:
                out.append(val)
        return out

    def to_array(self) -> np.ndarray:
        return np.stack([s.coeffs for s in self.scalars()])

    @classmethod
    def component_count(cls, dim: int) -> int:
        return sum(dim if f.name in cls.vector_components else 1 for f in fields(cls))

    @classmethod
    def from_array(cls: type[S], grid: SpectralGrid, arr: np.ndarray) -> S:
        if arr.shape != (cls.component_count(grid.dim),) + grid.shape:
            raise ValueError(f"array shape {arr.shape} does not fit {cls.__name__}")
        kwargs: dict[str, Any] = {}
        i = 0
        for f in fields(cls):
            if f.name in cls.vector_components:
                kwargs[f.name] = tuple(
                    SpectralField(grid, arr[i + j]) for j in range(grid.dim)
                )
                i += grid.dim
            else:
                kwargs[f.name] = SpectralField(grid, arr[i])
                i += 1
        return cls(**kwargs)

    @classmethod
    def zeros(cls: type[S], grid: SpectralGrid) -> S:
        return cls.from_array(
            grid, np.zeros((cls.component_count(grid.dim),) + grid.shape, dtype=complex)
        )


@dataclass(frozen=True)
class StateU(FieldState):
    """Fluctuation unknowns ``(p, v, theta)``."""

    p: SpectralField
    v: tuple[SpectralField, ...]
    theta: SpectralField
    vector_components: ClassVar[tuple[str, ...]] = ("v",)


@dataclass(frozen=True)
class PrimitiveState(FieldState):
    """Physical unknowns: pressure ``P``, velocity ``v`` and temperature ``T``."""

    P: SpectralField
    v: tuple[SpectralField, ...]
    T: SpectralField
    vector_components: ClassVar[tuple[str, ...]] = ("v",)

    def __post_init__(self) -> None:
        super().__post_init__()
        if np.any(self.P.values <= 0):
            raise ValueError("pressure must be positive at every grid point")
        if np.any(self.T.values <= 0):
            raise ValueError("temperature must be positive at every grid point")


@dataclass(frozen=True)
class PrimitiveRates(FieldState):
    """Time derivatives of a :class:`PrimitiveState`; no sign constraint."""

    P: SpectralField
    v: tuple[SpectralField, ...]
    T: SpectralField
    vector_components: ClassVar[tuple[str, ...]] = ("v",)


@dataclass(frozen=True)
class SymmetrizedState(FieldState):
    """Unknowns ``(rho, v, theta)`` with ``rho = varrho(theta, eps p)``."""

    rho: SpectralField
    v: tuple[SpectralField, ...]
    theta: SpectralField
    vector_components: ClassVar[tuple[str, ...]] = ("v",)


@dataclass(frozen=True)
class LimitState(FieldState):
    """Unknowns ``(v, theta)`` of the low Mach number limit system."""

    v: tuple[SpectralField, ...]
    theta: SpectralField
    vector_components: ClassVar[tuple[str, ...]] = ("v",)


@dataclass(frozen=True)
class WaveState(FieldState):
    """Wave unknowns ``u`` and ``w = du/dt``."""

    u: SpectralField
    w: SpectralField


@dataclass(frozen=True)
class Tendencies:
    """Time derivatives of a state, stored as a state of the same type.

    ``pressure`` is only set by the limit system, where it carries the
    Lagrange-multiplier pressure ``pi``.
    """

    rates: FieldState
    pressure: SpectralField | None = None

    @property
    def dp_dt(self) -> SpectralField:
        return self.rates.p  # type: ignore[attr-defined]

    @property
    def dv_dt(self) -> tuple[SpectralField, ...]:
        return self.rates.v  # type: ignore[attr-defined]

    @property
    def dtheta_dt(self) -> SpectralField:
        return self.rates.theta  # type: ignore[attr-defined]


@dataclass(frozen=True)
class PairState(FieldState):
    """Two scalar unknowns of a generic symmetric system."""

    u1: SpectralField
    u2: SpectralField
