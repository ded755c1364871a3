"""Periodic grids, Fourier coefficients and Fourier multipliers.

Fields live on the torus of period ``L`` in each of ``d`` directions and are
stored by their Fourier coefficients ``c_k`` normalised so that

    u(x) = sum_k c_k exp(i k . x),

that is ``c = fftn(u) / N`` with ``N`` the number of grid points.  With this
convention the Sobolev norm is the plain weighted sum
``||u||_{H^s}^2 = sum_k <xi_k>^{2s} |c_k|^2`` with ``xi_k = 2 pi k / L``.

Derivative symbols vanish on the unpaired Nyquist row of every axis so that
differentiation keeps real fields real and stays antisymmetric.  Nonlinear
products are dealiased with the 2/3 rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

Array = np.ndarray
SymbolFn = Callable[[tuple[Array, ...]], Array]


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid on ``[0, L)^d``.

    Args:
        dim: Spatial dimension, 1, 2 or 3.
        points: Number of samples per direction (even, at least 8).
        box_length: Period ``L`` of the box.
    """

    dim: int
    points: int
    box_length: float = 2.0 * np.pi

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if self.points % 2 != 0:
            raise ValueError(f"number of points must be even, got {self.points}")
        if self.points < 8:
            raise ValueError(f"need at least 8 points per direction, got {self.points}")
        if not self.box_length > 0:
            raise ValueError(f"box length must be positive, got {self.box_length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def spacing(self) -> float:
        return self.box_length / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @cached_property
    def integer_wavenumbers(self) -> tuple[Array, ...]:
        """Integer frequencies per axis in FFT order, shaped for broadcasting."""
        k = np.fft.fftfreq(self.points, 1.0 / self.points)
        out = []
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.points
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self) -> tuple[Array, ...]:
        """Physical wavenumbers ``2 pi k / L`` per axis, broadcastable."""
        scale = 2.0 * np.pi / self.box_length
        return tuple(scale * k for k in self.integer_wavenumbers)

    @cached_property
    def abs_wavenumber(self) -> Array:
        """``|xi|`` on the full coefficient array."""
        return np.sqrt(sum(np.broadcast_to(k * k, self.shape) for k in self.wavenumbers))

    @cached_property
    def derivative_symbols(self) -> tuple[Array, ...]:
        """``i xi_j`` with the Nyquist row of axis ``j`` set to zero."""
        nyq = -self.points // 2
        out = []
        for kint, xi in zip(self.integer_wavenumbers, self.wavenumbers):
            out.append(np.where(kint == nyq, 0.0, 1j * xi))
        return tuple(out)

    @cached_property
    def laplacian_symbol(self) -> Array:
        """Symbol of ``sum_j d_j d_j``, consistent with the first-derivative symbols."""
        return np.broadcast_to(
            sum(np.real(s * s) for s in self.derivative_symbols), self.shape
        ).copy()

    @cached_property
    def dealias_mask(self) -> Array:
        """Boolean mask keeping modes with every ``|k_i| <= n/3``.

        When ``3`` divides ``n`` the boundary modes ``|k_i| = n/3`` are kept,
        and a product of two of them aliases onto ``-n/3``; for other ``n``
        every alias of a product of kept modes falls outside the mask.
        """
        keep = np.ones(self.shape, dtype=bool)
        for k in self.integer_wavenumbers:
            keep = keep & (3 * np.abs(k) <= self.points)
        return keep

    @cached_property
    def coordinates(self) -> tuple[Array, ...]:
        """Physical sample coordinates per axis, broadcast to the full grid."""
        x = np.arange(self.points) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def forward(self, values: Array) -> Array:
        """Physical samples to normalised Fourier coefficients (last ``dim`` axes)."""
        axes = tuple(range(-self.dim, 0))
        return sfft.fftn(values, axes=axes, norm="forward")

    def inverse(self, coeffs: Array) -> Array:
        """Normalised Fourier coefficients to real physical samples."""
        axes = tuple(range(-self.dim, 0))
        return sfft.ifftn(coeffs, axes=axes, norm="forward").real


def make_grid(d: int, n: int, L: float = 2.0 * np.pi) -> SpectralGrid:
    """Build a periodic grid; see :class:`SpectralGrid` for the constraints."""
    return SpectralGrid(int(d), int(n), float(L))


class SpectralField:
    """Real scalar field on a :class:`SpectralGrid`, held by its coefficients.

    Instances are treated as immutable: every operation returns a new field.
    Physical values are computed on first access and cached.
    """

    __slots__ = ("grid", "coeffs", "_values")

    def __init__(self, grid: SpectralGrid, coeffs: Array, values: Array | None = None):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != grid.shape:
            raise ValueError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
        coeffs.setflags(write=False)
        self.grid = grid
        self.coeffs = coeffs
        self._values = values

    @classmethod
    def from_values(cls, grid: SpectralGrid, values: Array) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"sample shape {values.shape} does not match grid {grid.shape}")
        values = values.copy()
        values.setflags(write=False)
        return cls(grid, grid.forward(values), values)

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @property
    def values(self) -> Array:
        if self._values is None:
            vals = self.grid.inverse(self.coeffs)
            vals.setflags(write=False)
            self._values = vals
        return self._values

    def _check(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        if isinstance(scalar, SpectralField):
            raise TypeError("use multiply() for field products; it dealiases")
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SpectralField(dim={self.grid.dim}, n={self.grid.points})"


def check_same_grid(*fields: SpectralField) -> SpectralGrid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("fields live on different grids")
    return grid


@dataclass(frozen=True)
class MultiplierSymbol:
    """A Fourier multiplier ``q(xi)`` tagged with its order ``m``.

    The evaluator receives the tuple of physical wavenumber arrays of a grid
    and returns the symbol values (anything broadcastable to the grid shape).
    """

    evaluator: SymbolFn
    order: float = 0.0
    grid: SpectralGrid | None = None

    def on(self, grid: SpectralGrid) -> Array:
        if self.grid is not None and self.grid != grid:
            raise ValueError("symbol is bound to a different grid")
        vals = np.broadcast_to(np.asarray(self.evaluator(grid.wavenumbers)), grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("symbol is not finite on the grid")
        return vals

    def __mul__(self, other: "MultiplierSymbol") -> "MultiplierSymbol":
        if self.grid is not None and other.grid is not None and self.grid != other.grid:
            raise ValueError("symbols bound to different grids")
        f, g = self.evaluator, other.evaluator
        return MultiplierSymbol(
            lambda xi: f(xi) * g(xi), self.order + other.order, self.grid or other.grid
        )


def apply_multiplier(q: MultiplierSymbol, u: SpectralField) -> SpectralField:
    """Return the field with coefficients ``q(xi) * u_hat(xi)``."""
    return SpectralField(u.grid, q.on(u.grid) * u.coeffs)


def bump_profile(r: Array) -> Array:
    """Smooth cutoff: 1 for ``r <= 1``, 0 for ``r >= 2``, C-infinity in between."""
    r = np.asarray(r, dtype=float)
    a = 2.0 - r
    b = r - 1.0
    pa = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a, 1.0)), 0.0)
    pb = np.where(b > 0, np.exp(-1.0 / np.where(b > 0, b, 1.0)), 0.0)
    return pa / (pa + pb)


def _radius(xi: tuple[Array, ...]) -> Array:
    return np.sqrt(sum(k * k for k in xi))


def mollifier_values(grid: SpectralGrid, h: float) -> Array:
    """``j(h xi)`` on the grid for any ``h >= 0`` (``h = 0`` gives the identity)."""
    if h < 0:
        raise ValueError("mollifier scale must be nonnegative")
    return bump_profile(h * grid.abs_wavenumber)


def mollifier_symbol(h: float) -> MultiplierSymbol:
    """Friedrichs mollifier ``J_h`` with symbol ``j(h xi)``, ``h`` in ``(0, 1]``."""
    if not 0.0 < h <= 1.0:
        raise ValueError(f"mollifier scale must lie in (0, 1], got {h}")
    return MultiplierSymbol(lambda xi: bump_profile(h * _radius(xi)), 0.0)


def bessel_symbol(h: float, m: float) -> MultiplierSymbol:
    """``Lambda_h^m`` with symbol ``(1 + h^2 |xi|^2)^{m/2}``."""
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"Bessel scale must lie in [0, 1], got {h}")
    return MultiplierSymbol(
        lambda xi: (1.0 + h * h * sum(k * k for k in xi)) ** (0.5 * m), float(m)
    )


def japanese_bracket(grid: SpectralGrid) -> Array:
    """``<xi> = (1 + |xi|^2)^{1/2}`` on the grid."""
    return np.sqrt(1.0 + grid.abs_wavenumber**2)


def derivative(u: SpectralField, axis: int) -> SpectralField:
    return SpectralField(u.grid, u.grid.derivative_symbols[axis] * u.coeffs)


def grad(u: SpectralField) -> tuple[SpectralField, ...]:
    """Spectral gradient."""
    return tuple(derivative(u, j) for j in range(u.grid.dim))


def div(w: Sequence[SpectralField]) -> SpectralField:
    """Spectral divergence of a vector field."""
    grid = check_same_grid(*w)
    if len(w) != grid.dim:
        raise ValueError(f"expected {grid.dim} components, got {len(w)}")
    total = sum(s * c.coeffs for s, c in zip(grid.derivative_symbols, w))
    return SpectralField(grid, total)


def laplacian(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, u.grid.laplacian_symbol * u.coeffs)


def curl(w: Sequence[SpectralField]) -> tuple[tuple[SpectralField, ...], ...]:
    """Antisymmetric matrix ``(curl w)_{ij} = d_j w_i - d_i w_j``."""
    grid = check_same_grid(*w)
    d = grid.dim
    syms = grid.derivative_symbols
    return tuple(
        tuple(
            SpectralField(grid, syms[j] * w[i].coeffs - syms[i] * w[j].coeffs)
            for j in range(d)
        )
        for i in range(d)
    )


def dealias(u: SpectralField) -> SpectralField:
    """Zero every coefficient with some ``|k_i| > n/3``."""
    return SpectralField(u.grid, np.where(u.grid.dealias_mask, u.coeffs, 0.0))


def multiply(*fields: SpectralField) -> SpectralField:
    """Pointwise product, dealiased."""
    grid = check_same_grid(*fields)
    prod = fields[0].values
    for f in fields[1:]:
        prod = prod * f.values
    return SpectralField(grid, np.where(grid.dealias_mask, grid.forward(prod), 0.0))


def compose(fn: Callable[[Array], Array], u: SpectralField) -> SpectralField:
    """Evaluate ``fn(u)`` pointwise and dealias the result."""
    vals = np.asarray(fn(u.values), dtype=float)
    return SpectralField(u.grid, np.where(u.grid.dealias_mask, u.grid.forward(vals), 0.0))


def random_band_limited_field(
    seed: int,
    grid: SpectralGrid,
    band: float,
    sobolev_target: tuple[float, float] | None = None,
    zero_mean: bool = True,
) -> SpectralField:
    """Random real field with integer wavenumbers ``|k| <= band``.

    Coefficients are independent complex Gaussians on the band, projected to
    Hermitian symmetry in coefficient space so that every mode outside the
    band is exactly zero.  If ``sobolev_target = (sigma, value)`` the field is
    rescaled so that its ``H^sigma`` norm equals ``value``.
    """
    if band < 0 or 3 * band > grid.points:
        raise ValueError(f"band {band} must lie in [0, n/3] for n={grid.points}")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    kint = np.sqrt(sum(k * k for k in grid.integer_wavenumbers))
    raw = np.where(kint <= band, raw, 0.0)
    if zero_mean:
        raw.flat[0] = 0.0
    axes = tuple(range(grid.dim))
    mirrored = np.roll(np.flip(raw, axes), 1, axes)
    u = SpectralField(grid, 0.5 * (raw + np.conj(mirrored)))
    if sobolev_target is None:
        return u
    sigma, value = sobolev_target
    if value < 0:
        raise ValueError("target norm must be nonnegative")
    weight = japanese_bracket(grid) ** (2 * sigma)
    norm = float(np.sqrt(np.sum(weight * np.abs(u.coeffs) ** 2)))
    if value == 0 or norm == 0:
        return SpectralField.zeros(grid)
    return SpectralField(grid, u.coeffs * (value / norm))
