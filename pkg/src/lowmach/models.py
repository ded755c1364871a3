"""Right-hand sides of every evolution system handled by the package.

Each model works on stacked coefficient arrays ``U`` of shape
``(m, *grid.shape)`` (see :mod:`lowmach.state` for the component order) and
provides

* ``rhs(U, t)``: the full tendency, dealiased;
* ``stiff_matrices(kind)``: per-mode ``m x m`` matrices of the
  constant-coefficient part at the reference state, used by the
  exponential and IMEX integrators;
* ``soft_radius(U, t)``: a bound on the rate of the explicit remainder,
  used by :func:`lowmach.integrate.choose_dt`.

The public ``rhs_*`` functions wrap the models for :class:`StateU`-style
inputs and return :class:`Tendencies`.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .gas import CoefficientSet, PerfectGasData, symmetrizer_weights
from .norms import ParamTriple
from .spectral import SpectralField, SpectralGrid
from .state import (
    FieldState,
    LimitState,
    PairState,
    PrimitiveRates,
    PrimitiveState,
    StateU,
    SymmetrizedState,
    Tendencies,
    WaveState,
)

STIFF_KINDS = ("full", "penalization", "none")


class Model:
    """Shared plumbing: transforms, dealiased products and stiff assembly."""

    state_cls: type[FieldState] = StateU

    def __init__(self, grid: SpectralGrid):
        self.grid = grid
        self.dim = grid.dim
        self.m = self.state_cls.component_count(grid.dim)
        self.mask = grid.dealias_mask
        self.sym = grid.derivative_symbols
        self.lap = grid.laplacian_symbol
        self.kmax = float(np.max(np.where(self.mask, grid.abs_wavenumber, 0.0)))

    # -- transforms -------------------------------------------------------
    def phys(self, uh: np.ndarray) -> np.ndarray:
        return self.grid.inverse(uh)

    def spec(self, vals: np.ndarray) -> np.ndarray:
        """Forward transform followed by the 2/3 truncation."""
        return np.where(self.mask, self.grid.forward(vals), 0.0)

    def smooth(self, vals: np.ndarray) -> np.ndarray:
        """Dealias a pointwise composition (constants are passed through)."""
        vals = np.broadcast_to(vals, self.grid.shape)
        if np.ptp(vals) == 0:
            return np.array(vals)
        return self.phys(self.spec(vals))

    def mul(self, *factors: np.ndarray) -> np.ndarray:
        """Dealiased pointwise product, returned in physical space."""
        prod = factors[0]
        for f in factors[1:]:
            prod = prod * f
        return self.phys(self.spec(prod))

    def grad_phys(self, uh: np.ndarray) -> list[np.ndarray]:
        return [self.phys(s * uh) for s in self.sym]

    def div_spec(self, flux: Sequence[np.ndarray]) -> np.ndarray:
        """Spectral divergence of a physical-space flux, dealiased first."""
        return sum(s * self.spec(f) for s, f in zip(self.sym, flux))

    def advect(self, v: Sequence[np.ndarray], grad_u: Sequence[np.ndarray]) -> np.ndarray:
        return self.spec(sum(vj * gj for vj, gj in zip(v, grad_u)))

    # -- interface --------------------------------------------------------
    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        return np.zeros(self.grid.shape + (self.m, self.m), dtype=complex)

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        return 0.0

    def max_speed(self, U: np.ndarray) -> float:
        return 0.0

    def project(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        return U

    def _blank(self) -> np.ndarray:
        return np.zeros(self.grid.shape + (self.m, self.m), dtype=complex)

    def _velocity_speed(self, U: np.ndarray, first: int) -> float:
        v = self.phys(U[first : first + self.dim])
        return float(np.max(np.sqrt(np.sum(v * v, axis=0))))


def _check_kind(kind: str) -> None:
    if kind not in STIFF_KINDS:
        raise ValueError(f"unknown stiff part {kind!r}; expected one of {STIFF_KINDS}")


def _viscous_flux(model: Model, zeta: np.ndarray, eta: np.ndarray, gv, divv) -> list[np.ndarray]:
    """Spectral components of ``div(2 zeta Dv) + grad(eta div v)``."""
    d = model.dim
    out = []
    eta_div = model.mul(eta, divv) if np.any(eta != 0) else None
    for i in range(d):
        flux = [model.mul(zeta, gv[i][j] + gv[j][i]) for j in range(d)]
        comp = model.div_spec(flux)
        if eta_div is not None:
            comp = comp + model.sym[i] * model.spec(eta_div)
        out.append(comp)
    return out


def _dissipation(model: Model, zeta, eta, gv, divv) -> np.ndarray:
    """Physical ``sigma . Dv = 2 zeta |Dv|^2 + eta (div v)^2``."""
    d = model.dim
    dv2 = sum(0.25 * (gv[i][j] + gv[j][i]) ** 2 for i in range(d) for j in range(d))
    out = model.mul(2.0 * zeta, model.mul(dv2))
    if np.any(eta != 0):
        out = out + model.mul(eta, model.mul(divv, divv))
    return out


class MainModel(Model):
    """The scaled full Navier-Stokes system in the unknowns ``(p, v, theta)``.

    ``advection=False`` drops the transport terms ``v . grad``; with frozen
    constant coefficients and ``mu = 0`` this reduces to the linear
    example system.
    """

    state_cls = StateU

    def __init__(self, grid: SpectralGrid, a: ParamTriple, c: CoefficientSet, advection: bool = True):
        super().__init__(grid)
        self.a = a
        self.c = c
        self.advection = advection
        self.ref = c.reference()

    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        a, c, d = self.a, self.c, self.dim
        eps, mu, kappa = a.eps, a.mu, a.kappa
        X = self.phys(U)
        p, v, th = X[0], X[1 : 1 + d], X[1 + d]
        wp = eps * p
        gp = self.grad_phys(U[0])
        gth = self.grad_phys(U[1 + d])
        gv = [self.grad_phys(U[1 + i]) for i in range(d)]
        divv = sum(gv[i][i] for i in range(d))

        ig1 = self.smooth(1.0 / c.g1(th, wp))
        ig2 = self.smooth(1.0 / c.g2(th, wp))
        ig3 = self.smooth(1.0 / c.g3(th, wp))

        bracket_p = -divv / eps
        bracket_th = -divv
        bracket_v = [-g / eps for g in gp]

        if kappa > 0:
            beta = self.smooth(c.beta(th))
            lap_b = self.phys(self.div_spec([self.mul(beta, g) for g in gth]))
            chi1 = self.smooth(c.chi1(wp))
            chi3 = self.smooth(c.chi3(wp))
            bracket_p = bracket_p + (kappa / eps) * self.mul(chi1, lap_b)
            bracket_th = bracket_th + kappa * self.mul(chi3, lap_b)
        if mu > 0:
            zeta = self.smooth(c.zeta(th))
            eta = self.smooth(c.eta(th))
            chi2 = self.smooth(c.chi2(wp))
            visc = _viscous_flux(self, zeta, eta, gv, divv)
            for i in range(d):
                bracket_v[i] = bracket_v[i] + mu * self.mul(chi2, self.phys(visc[i]))
            Q = eps**c.alpha_exponent * mu * _dissipation(self, zeta, eta, gv, divv)
            bracket_p = bracket_p + self.mul(self.smooth(c.chi1(wp)), Q)
            bracket_th = bracket_th + eps * self.mul(self.smooth(c.chi3(wp)), Q)

        out = np.empty_like(U)
        out[0] = self.spec(ig1 * bracket_p)
        for i in range(d):
            out[1 + i] = self.spec(ig2 * bracket_v[i])
        out[1 + d] = self.spec(ig3 * bracket_th)
        if self.advection:
            out[0] -= self.advect(v, gp)
            for i in range(d):
                out[1 + i] -= self.advect(v, gv[i])
            out[1 + d] -= self.advect(v, gth)
        return out

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        _check_kind(kind)
        L = self._blank()
        if kind == "none":
            return L
        r, d = self.ref, self.dim
        eps, mu, kappa = self.a.eps, self.a.mu, self.a.kappa
        ip, it = 0, 1 + d
        for j in range(d):
            L[..., ip, 1 + j] = -self.sym[j] / (eps * r["g1"])
            L[..., 1 + j, ip] = -self.sym[j] / (eps * r["g2"])
        L[..., ip, it] = (kappa / (eps * r["g1"])) * r["chi1"] * r["beta"] * self.lap
        if kind == "penalization":
            return L
        for j in range(d):
            L[..., it, 1 + j] = -self.sym[j] / r["g3"]
        L[..., it, it] = (kappa * r["chi3"] * r["beta"] / r["g3"]) * self.lap
        if mu > 0:
            scale = mu * r["chi2"] / r["g2"]
            for i in range(d):
                L[..., 1 + i, 1 + i] += scale * r["zeta"] * self.lap
                for j in range(d):
                    L[..., 1 + i, 1 + j] += (
                        scale * (r["zeta"] + r["eta"]) * self.sym[i] * self.sym[j]
                    )
        return L

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        c, r, d = self.c, self.ref, self.dim
        eps, mu, kappa = self.a.eps, self.a.mu, self.a.kappa
        X = self.phys(U)
        th, wp = X[1 + d], eps * X[0]
        k, k2 = self.kmax, self.kmax**2
        g1, g2, g3 = c.g1(th, wp), c.g2(th, wp), c.g3(th, wp)
        if kind == "none":
            rate = k * float(np.max(1.0 / np.sqrt(g1 * g2))) / eps + k * float(np.max(1.0 / g3))
            rate += k2 * float(np.max(kappa * c.chi3(wp) * c.beta(th) / g3))
            rate += k2 * kappa / eps * float(np.max(c.chi1(wp) * c.beta(th) / g1))
            rate += k2 * mu * float(np.max(c.chi2(wp) * (np.abs(c.zeta(th)) + np.abs(c.eta(th))) / g2))
            return rate
        ac = np.abs(1.0 / np.sqrt(g1 * g2) - 1.0 / math.sqrt(r["g1"] * r["g2"])) / eps
        rate = k * float(np.max(ac))
        kap_p = np.abs(c.chi1(wp) * c.beta(th) / g1 - r["chi1"] * r["beta"] / r["g1"])
        rate += k2 * kappa / eps * float(np.max(kap_p))
        if kind == "full":
            rate += k * float(np.max(np.abs(1.0 / g3 - 1.0 / r["g3"])))
            kap_t = np.abs(c.chi3(wp) * c.beta(th) / g3 - r["chi3"] * r["beta"] / r["g3"])
            rate += k2 * kappa * float(np.max(kap_t))
            if mu > 0:
                z = c.chi2(wp) / g2
                z0 = r["chi2"] / r["g2"]
                dev = np.maximum(
                    np.abs(z * c.zeta(th) - z0 * r["zeta"]),
                    np.abs(z * (c.zeta(th) + c.eta(th)) - z0 * (r["zeta"] + r["eta"])),
                )
                rate += k2 * mu * float(np.max(dev))
        else:
            rate += k * float(np.max(1.0 / g3))
            rate += k2 * kappa * float(np.max(c.chi3(wp) * c.beta(th) / g3))
            rate += k2 * mu * float(np.max(c.chi2(wp) * (np.abs(c.zeta(th)) + np.abs(c.eta(th))) / g2))
        return rate

    def max_speed(self, U: np.ndarray) -> float:
        return self._velocity_speed(U, 1) if self.advection else 0.0


class ExampleModel(Model):
    """Constant-coefficient linear system with thermal coupling.

    ``dp/dt = -(div v - lap theta)/eps``, ``dv/dt = -grad p / eps`` and
    ``dtheta/dt = -div v + beta lap theta`` with ``beta > 1``.
    """

    state_cls = StateU

    def __init__(self, grid: SpectralGrid, eps: float, beta: float):
        if not beta > 1:
            raise ValueError(f"beta must exceed 1, got {beta}")
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        super().__init__(grid)
        self.eps = eps
        self.beta = beta

    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        d, eps = self.dim, self.eps
        divv = sum(self.sym[j] * U[1 + j] for j in range(d))
        out = np.empty_like(U)
        out[0] = (-divv + self.lap * U[1 + d]) / eps
        for i in range(d):
            out[1 + i] = -self.sym[i] * U[0] / eps
        out[1 + d] = -divv + self.beta * self.lap * U[1 + d]
        return out

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        _check_kind(kind)
        L = self._blank()
        if kind == "none":
            return L
        d, eps = self.dim, self.eps
        for j in range(d):
            L[..., 0, 1 + j] = -self.sym[j] / eps
            L[..., 1 + j, 0] = -self.sym[j] / eps
        L[..., 0, 1 + d] = self.lap / eps
        if kind == "full":
            for j in range(d):
                L[..., 1 + d, 1 + j] = -self.sym[j]
            L[..., 1 + d, 1 + d] = self.beta * self.lap
        return L

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        if kind == "full":
            return 0.0
        rate = self.kmax + self.beta * self.kmax**2
        if kind == "none":
            rate += self.kmax / self.eps + self.kmax**2 / self.eps
        return rate

    def energy(self, U: np.ndarray) -> float:
        """``||(p, v - grad theta, sqrt(beta - 1) grad theta)||^2``."""
        d = self.dim
        gth = [self.sym[j] * U[1 + d] for j in range(d)]
        total = np.sum(np.abs(U[0]) ** 2)
        total += sum(np.sum(np.abs(U[1 + j] - gth[j]) ** 2) for j in range(d))
        total += (self.beta - 1) * sum(np.sum(np.abs(g) ** 2) for g in gth)
        return float(total)

    def dissipation(self, U: np.ndarray) -> float:
        """``||div v_e - (beta - 1) lap theta||^2`` with ``v_e = v - grad theta``."""
        d = self.dim
        divv = sum(self.sym[j] * U[1 + j] for j in range(d))
        lap_t = self.lap * U[1 + d]
        return float(np.sum(np.abs(divv - lap_t - (self.beta - 1) * lap_t) ** 2))

    def weighted_energy(self, U: np.ndarray) -> float:
        """``|zeta|^2/(beta-1) + beta |eps v|^2 + |theta|^2`` with ``zeta = eps beta p - theta``."""
        d, eps, beta = self.dim, self.eps, self.beta
        z = eps * beta * U[0] - U[1 + d]
        total = np.sum(np.abs(z) ** 2) / (beta - 1)
        total += beta * eps**2 * sum(np.sum(np.abs(U[1 + j]) ** 2) for j in range(d))
        total += np.sum(np.abs(U[1 + d]) ** 2)
        return float(total)


class PrimitiveModel(Model):
    """Physical form in ``(P, v, T)`` for a perfect gas, references ``P = T = 1``."""

    state_cls = PrimitiveState

    def __init__(self, grid: SpectralGrid, a: ParamTriple, gas: PerfectGasData, alpha: float = 1.0):
        super().__init__(grid)
        self.a = a
        self.gas = gas
        self.alpha = alpha

    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        a, gas, d = self.a, self.gas, self.dim
        eps, mu, kappa = a.eps, a.mu, a.kappa
        gamma = gas.gamma
        X = self.phys(U)
        P, v, T = X[0], X[1 : 1 + d], X[1 + d]
        if np.any(P <= 0) or np.any(T <= 0):
            raise ValueError("pressure and temperature must stay positive")
        gP = self.grad_phys(U[0])
        gT = self.grad_phys(U[1 + d])
        gv = [self.grad_phys(U[1 + i]) for i in range(d)]
        divv = sum(gv[i][i] for i in range(d))
        irho = self.smooth(gas.R * T / P)

        bracket_P = -gamma * self.mul(P, divv)
        bracket_T = -self.mul(P, divv)
        bracket_v = [-g / eps**2 for g in gP]
        if kappa > 0:
            k = self.smooth(gas.k_fn(T))
            heat = kappa * self.phys(self.div_spec([self.mul(k, g) for g in gT]))
            bracket_P = bracket_P + (gamma - 1) * heat
            bracket_T = bracket_T + heat
        if mu > 0:
            zeta = self.smooth(gas.zeta_fn(T))
            eta = self.smooth(gas.eta_fn(T))
            visc = _viscous_flux(self, zeta, eta, gv, divv)
            for i in range(d):
                bracket_v[i] = bracket_v[i] + mu * self.phys(visc[i])
            Q = eps**self.alpha * mu * _dissipation(self, zeta, eta, gv, divv)
            bracket_P = bracket_P + (gamma - 1) * eps * Q
            bracket_T = bracket_T + eps * Q

        out = np.empty_like(U)
        out[0] = self.spec(bracket_P) - self.advect(v, gP)
        for i in range(d):
            out[1 + i] = self.spec(irho * bracket_v[i]) - self.advect(v, gv[i])
        out[1 + d] = self.spec(irho * bracket_T / gas.C_V) - self.advect(v, gT)
        return out

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        _check_kind(kind)
        L = self._blank()
        if kind == "none":
            return L
        gas, d = self.gas, self.dim
        eps, mu, kappa = self.a.eps, self.a.mu, self.a.kappa
        k0 = float(gas.k_fn(np.ones(())))
        for j in range(d):
            L[..., 0, 1 + j] = -gas.gamma * self.sym[j]
            L[..., 1 + j, 0] = -gas.R * self.sym[j] / eps**2
        if kind == "penalization":
            return L
        L[..., 0, 1 + d] = (gas.gamma - 1) * kappa * k0 * self.lap
        for j in range(d):
            L[..., 1 + d, 1 + j] = -gas.R / gas.C_V * self.sym[j]
        L[..., 1 + d, 1 + d] = kappa * k0 * gas.R / gas.C_V * self.lap
        if mu > 0:
            z0 = float(gas.zeta_fn(np.ones(())))
            e0 = float(gas.eta_fn(np.ones(())))
            for i in range(d):
                L[..., 1 + i, 1 + i] += mu * gas.R * z0 * self.lap
                for j in range(d):
                    L[..., 1 + i, 1 + j] += mu * gas.R * (z0 + e0) * self.sym[i] * self.sym[j]
        return L

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        gas, d = self.gas, self.dim
        eps, mu, kappa = self.a.eps, self.a.mu, self.a.kappa
        X = self.phys(U)
        P, T = X[0], X[1 + d]
        k, k2 = self.kmax, self.kmax**2
        c2 = gas.gamma * P * gas.R * T / P
        if kind == "none":
            rate = k * float(np.sqrt(np.max(gas.gamma * gas.R * T))) / eps + k * gas.gamma
            rate += k2 * (kappa + mu) * gas.R * float(np.max(T / P)) * 4.0
            return rate
        rate = k * float(np.max(np.abs(np.sqrt(c2 * P) - math.sqrt(gas.gamma * gas.R)))) / eps
        rate += k * float(np.max(np.abs(P - 1))) * gas.gamma
        rate += k2 * (kappa + mu) * gas.R * float(np.max(np.abs(T / P - 1))) * 4.0
        if kind == "penalization":
            rate += k2 * (kappa + mu) * gas.R * float(np.max(T / P)) * 4.0
        return rate

    def max_speed(self, U: np.ndarray) -> float:
        return self._velocity_speed(U, 1)


class SymmetrizedModel(Model):
    """Formulation in ``(rho, v, theta)`` with ``rho = varrho(theta, eps p)``.

    The pressure gradient is rewritten as
    ``eps grad p = gamma1 grad theta + gamma2 grad rho`` and the density
    equation loses its thermal and dissipative terms.
    """

    state_cls = SymmetrizedState

    def __init__(self, grid: SpectralGrid, a: ParamTriple, c: CoefficientSet):
        if c.varrho is None or c.wp_from_rho is None:
            raise ValueError("coefficient set must provide varrho and its inverse")
        super().__init__(grid)
        self.a = a
        self.c = c
        self.ref = c.reference()

    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        a, c, d = self.a, self.c, self.dim
        eps, mu, kappa = a.eps, a.mu, a.kappa
        X = self.phys(U)
        rho, v, th = X[0], X[1 : 1 + d], X[1 + d]
        wp = c.wp_from_rho(th, rho)
        grho = self.grad_phys(U[0])
        gth = self.grad_phys(U[1 + d])
        gv = [self.grad_phys(U[1 + i]) for i in range(d)]
        divv = sum(gv[i][i] for i in range(d))
        gam1, gam2, _, _, _ = symmetrizer_weights(c, th, wp, eps)
        gam1 = self.smooth(gam1)
        gam2 = self.smooth(gam2)
        chi1 = self.smooth(c.chi1(wp))
        chi3 = self.smooth(c.chi3(wp))
        ratio = self.smooth((c.chi3(wp) - c.chi1(wp)) / c.chi3(wp))
        ig2 = self.smooth(1.0 / c.g2(th, wp))
        ig3 = self.smooth(1.0 / c.g3(th, wp))

        bracket_v = [
            -(self.mul(gam1, gth[i]) + self.mul(gam2, grho[i])) / eps**2 for i in range(d)
        ]
        bracket_th = -divv
        if kappa > 0:
            beta = self.smooth(c.beta(th))
            lap_b = self.phys(self.div_spec([self.mul(beta, g) for g in gth]))
            bracket_th = bracket_th + kappa * self.mul(chi3, lap_b)
        if mu > 0:
            zeta = self.smooth(c.zeta(th))
            eta = self.smooth(c.eta(th))
            chi2 = self.smooth(c.chi2(wp))
            visc = _viscous_flux(self, zeta, eta, gv, divv)
            for i in range(d):
                bracket_v[i] = bracket_v[i] + mu * self.mul(chi2, self.phys(visc[i]))
            Q = eps**c.alpha_exponent * mu * _dissipation(self, zeta, eta, gv, divv)
            bracket_th = bracket_th + eps * self.mul(chi3, Q)
        del chi1

        out = np.empty_like(U)
        out[0] = -self.spec(ratio * divv) - self.advect(v, grho)
        for i in range(d):
            out[1 + i] = self.spec(ig2 * bracket_v[i]) - self.advect(v, gv[i])
        out[1 + d] = self.spec(ig3 * bracket_th) - self.advect(v, gth)
        return out

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        _check_kind(kind)
        L = self._blank()
        if kind == "none":
            return L
        r, d = self.ref, self.dim
        eps, mu, kappa = self.a.eps, self.a.mu, self.a.kappa
        gam1 = r["chi1"] * r["g3"] / (r["chi3"] * r["g1"])
        gam2 = 1.0 / r["g1"]
        ratio = (r["chi3"] - r["chi1"]) / r["chi3"]
        it = 1 + d
        for j in range(d):
            L[..., 0, 1 + j] = -ratio * self.sym[j]
            L[..., 1 + j, 0] = -gam2 * self.sym[j] / (eps**2 * r["g2"])
            L[..., 1 + j, it] = -gam1 * self.sym[j] / (eps**2 * r["g2"])
        if kind == "penalization":
            return L
        for j in range(d):
            L[..., it, 1 + j] = -self.sym[j] / r["g3"]
        L[..., it, it] = (kappa * r["chi3"] * r["beta"] / r["g3"]) * self.lap
        if mu > 0:
            scale = mu * r["chi2"] / r["g2"]
            for i in range(d):
                L[..., 1 + i, 1 + i] += scale * r["zeta"] * self.lap
                for j in range(d):
                    L[..., 1 + i, 1 + j] += (
                        scale * (r["zeta"] + r["eta"]) * self.sym[i] * self.sym[j]
                    )
        return L

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        d, eps = self.dim, self.a.eps
        X = self.phys(U)
        th = X[1 + d]
        wp = self.c.wp_from_rho(th, X[0])
        _, gam2, _, _, _ = symmetrizer_weights(self.c, th, wp, eps)
        g2 = self.c.g2(th, wp)
        k = self.kmax
        rate = k * float(np.max(np.abs(gam2 / g2 - 1.0 / (self.ref["g1"] * self.ref["g2"])))) / eps**2
        rate += 2 * k**2 * (self.a.mu + self.a.kappa) * float(np.max(np.exp(np.abs(th))))
        return rate

    def max_speed(self, U: np.ndarray) -> float:
        return self._velocity_speed(U, 1)


class LimitModel(Model):
    """Low Mach number limit system in ``(v, theta)`` with slaved divergence.

    The constraint ``div v = kappa chi1(0) div(beta(theta) grad theta)`` is
    kept by a pressure ``pi`` solving
    ``div(g2^{-1} grad pi) = div N - kappa chi1(0) d/dt div(beta grad theta)``.
    """

    state_cls = LimitState

    def __init__(
        self,
        grid: SpectralGrid,
        mu: float,
        kappa: float,
        c: CoefficientSet,
        pressure_rtol: float = 1e-10,
    ):
        super().__init__(grid)
        self.mu = mu
        self.kappa = kappa
        self.c = c
        self.ref = c.reference()
        self.pressure_rtol = pressure_rtol
        self.last_pressure: np.ndarray | None = None
        self.last_cg_iterations = 0

    def _beta_flux(self, th: np.ndarray, gth: list[np.ndarray]) -> list[np.ndarray]:
        beta = self.smooth(self.c.beta(th))
        return [self.mul(beta, g) for g in gth]

    def constraint_residual(self, U: np.ndarray) -> np.ndarray:
        """Spectral ``div v - kappa chi1(0) div(beta grad theta)``."""
        d = self.dim
        divv = sum(self.sym[j] * U[j] for j in range(d))
        if self.kappa == 0:
            return divv
        th = self.phys(U[d])
        flux = self._beta_flux(th, self.grad_phys(U[d]))
        return divv - self.kappa * self.ref["chi1"] * self.div_spec(flux)

    def project(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Gradient correction of ``v`` making the constraint exact."""
        d = self.dim
        res = self.constraint_residual(U)
        lap = np.where(self.lap == 0, 1.0, self.lap)
        phi = np.where(self.lap == 0, 0.0, -res / lap)
        out = U.copy()
        for j in range(d):
            out[j] = U[j] + self.sym[j] * phi
        return out

    def _solve_pressure(self, cinv: np.ndarray, rhs_spec: np.ndarray) -> np.ndarray:
        shape = self.grid.shape
        mask = self.mask
        cbar = float(np.mean(cinv))
        lap = self.lap

        def op(x: np.ndarray) -> np.ndarray:
            xh = np.where(mask, self.grid.forward(x.reshape(shape)), 0.0)
            flux = [self.mul(cinv, self.phys(s * xh)) for s in self.sym]
            return -self.phys(self.div_spec(flux)).ravel()

        def prec(x: np.ndarray) -> np.ndarray:
            xh = np.where(mask, self.grid.forward(x.reshape(shape)), 0.0)
            yh = np.where(lap == 0, 0.0, xh / (-cbar * np.where(lap == 0, 1.0, lap)))
            return self.phys(yh).ravel()

        b = -self.phys(rhs_spec).ravel()
        if not np.any(b):
            self.last_cg_iterations = 0
            return np.zeros(shape, dtype=complex)
        n = b.size
        A = LinearOperator((n, n), matvec=op, dtype=float)
        M = LinearOperator((n, n), matvec=prec, dtype=float)
        counter = {"it": 0}

        def cb(_x):
            counter["it"] += 1

        x, info = cg(A, b, rtol=self.pressure_rtol, atol=0.0, M=M, maxiter=500, callback=cb)
        if info != 0:
            raise RuntimeError(f"pressure solve did not converge (info={info})")
        self.last_cg_iterations = counter["it"]
        xh = np.where(mask, self.grid.forward(x.reshape(shape)), 0.0)
        xh.flat[0] = 0.0
        return xh

    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        c, d = self.c, self.dim
        mu, kappa = self.mu, self.kappa
        r = self.ref
        X = self.phys(U)
        v, th = X[:d], X[d]
        zero = np.zeros_like(th)
        gth = self.grad_phys(U[d])
        gv = [self.grad_phys(U[i]) for i in range(d)]
        divv = sum(gv[i][i] for i in range(d))
        cinv = self.smooth(1.0 / c.g2(th, zero))

        out = np.empty_like(U)
        if kappa > 0:
            flux = self._beta_flux(th, gth)
            heat = self.phys(self.div_spec(flux))
            ig3 = self.smooth(1.0 / c.g3(th, zero))
            out[d] = kappa * (r["chi3"] - r["chi1"]) * self.spec(ig3 * heat)
        else:
            out[d] = 0.0
        out[d] -= self.advect(v, gth)

        N = [-self.advect(v, gv[i]) for i in range(d)]
        if mu > 0:
            zeta = self.smooth(c.zeta(th))
            eta = self.smooth(c.eta(th))
            visc = _viscous_flux(self, zeta, eta, gv, divv)
            for i in range(d):
                N[i] = N[i] + mu * r["chi2"] * self.spec(cinv * self.phys(visc[i]))

        target = sum(self.sym[i] * N[i] for i in range(d))
        if kappa > 0:
            dth = self.phys(out[d])
            h = 1e-6
            dbeta = self.smooth((c.beta(th + h) - c.beta(th - h)) / (2 * h))
            beta = self.smooth(c.beta(th))
            gdth = self.grad_phys(out[d])
            flux_t = [self.mul(dbeta, dth, gth[j]) + self.mul(beta, gdth[j]) for j in range(d)]
            target = target - kappa * r["chi1"] * self.div_spec(flux_t)
        pi_h = self._solve_pressure(cinv, target)
        self.last_pressure = pi_h
        gpi = self.grad_phys(pi_h)
        for i in range(d):
            out[i] = N[i] - self.spec(cinv * gpi[i])
        return out

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        _check_kind(kind)
        L = self._blank()
        if kind != "full":
            return L
        r, d = self.ref, self.dim
        visc = self.mu * r["chi2"] * r["zeta"] / r["g2"]
        for i in range(d):
            L[..., i, i] = visc * self.lap
        L[..., d, d] = self.kappa * (r["chi3"] - r["chi1"]) * r["beta"] / r["g3"] * self.lap
        return L

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        c, r, d = self.c, self.ref, self.dim
        th = self.phys(U[d])
        zero = np.zeros_like(th)
        k2 = self.kmax**2
        heat = (r["chi3"] - r["chi1"]) * c.beta(th) / c.g3(th, zero)
        visc = r["chi2"] * (np.abs(c.zeta(th)) + np.abs(c.eta(th))) / c.g2(th, zero)
        if kind == "full":
            # gradient parts of the viscous force are absorbed by the pressure,
            # so only the deviation of the shear coefficient counts
            heat = np.abs(heat - (r["chi3"] - r["chi1"]) * r["beta"] / r["g3"])
            visc = np.abs(r["chi2"] * c.zeta(th) / c.g2(th, zero) - r["chi2"] * r["zeta"] / r["g2"])
        return k2 * (self.kappa * float(np.max(heat)) + self.mu * float(np.max(visc)))

    def max_speed(self, U: np.ndarray) -> float:
        return self._velocity_speed(U, 0)


class LinearizedModel(Model):
    """Linear system with frozen coefficients ``(phi, v)`` and no source.

    Coefficients come from a coefficient set evaluated at the frozen
    background temperature ``theta_bar`` and ``wp = 0``:
    ``beta1 = chi1 beta``, ``beta3 = chi3 beta``, ``beta2 = chi2 zeta`` and
    ``beta2_sharp = chi2 (zeta + eta)``.
    """

    state_cls = StateU

    def __init__(
        self,
        grid: SpectralGrid,
        a: ParamTriple,
        c: CoefficientSet,
        theta_bar: np.ndarray,
        v_bar: Sequence[np.ndarray],
    ):
        super().__init__(grid)
        self.a = a
        th = np.broadcast_to(np.asarray(theta_bar, dtype=float), grid.shape)
        zero = np.zeros(grid.shape)
        chi1, chi2, chi3 = c.chi1(zero), c.chi2(zero), c.chi3(zero)
        beta = c.beta(th)
        self.ig1 = self.smooth(1.0 / c.g1(th, zero))
        self.ig2 = self.smooth(1.0 / c.g2(th, zero))
        self.ig3 = self.smooth(1.0 / c.g3(th, zero))
        self.beta1 = self.smooth(chi1 * beta)
        self.beta3 = self.smooth(chi3 * beta)
        self.beta2 = self.smooth(chi2 * c.zeta(th))
        self.beta2s = self.smooth(chi2 * (c.zeta(th) + c.eta(th)))
        self.v_bar = [self.smooth(np.broadcast_to(vb, grid.shape)) for vb in v_bar]
        if len(self.v_bar) != grid.dim:
            raise ValueError("frozen velocity needs one component per dimension")
        self.ref = {
            name: float(np.mean(arr))
            for name, arr in (
                ("ig1", self.ig1),
                ("ig2", self.ig2),
                ("ig3", self.ig3),
                ("beta1", self.beta1),
                ("beta3", self.beta3),
                ("beta2", self.beta2),
                ("beta2s", self.beta2s),
            )
        }

    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        d = self.dim
        eps, mu, kappa = self.a.eps, self.a.mu, self.a.kappa
        gp = self.grad_phys(U[0])
        gth = self.grad_phys(U[1 + d])
        gv = [self.grad_phys(U[1 + i]) for i in range(d)]
        divv = sum(gv[i][i] for i in range(d))
        bp = -divv / eps
        bth = -divv
        bv = [-g / eps for g in gp]
        if kappa > 0:
            bp = bp + (kappa / eps) * self.phys(self.div_spec([self.mul(self.beta1, g) for g in gth]))
            bth = bth + kappa * self.mul(self.beta3, self.phys(self.lap * U[1 + d]))
        if mu > 0:
            gdiv = self.grad_phys(sum(self.sym[j] * U[1 + j] for j in range(d)))
            for i in range(d):
                lap_v = self.phys(self.lap * U[1 + i])
                bv[i] = bv[i] + mu * (self.mul(self.beta2, lap_v) + self.mul(self.beta2s, gdiv[i]))
        out = np.empty_like(U)
        out[0] = self.spec(self.ig1 * bp) - self.advect(self.v_bar, gp)
        for i in range(d):
            out[1 + i] = self.spec(self.ig2 * bv[i]) - self.advect(self.v_bar, gv[i])
        out[1 + d] = self.spec(self.ig3 * bth) - self.advect(self.v_bar, gth)
        return out

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        _check_kind(kind)
        L = self._blank()
        if kind == "none":
            return L
        r, d = self.ref, self.dim
        eps, mu, kappa = self.a.eps, self.a.mu, self.a.kappa
        it = 1 + d
        for j in range(d):
            L[..., 0, 1 + j] = -r["ig1"] * self.sym[j] / eps
            L[..., 1 + j, 0] = -r["ig2"] * self.sym[j] / eps
        L[..., 0, it] = kappa / eps * r["ig1"] * r["beta1"] * self.lap
        if kind == "penalization":
            return L
        for j in range(d):
            L[..., it, 1 + j] = -r["ig3"] * self.sym[j]
        L[..., it, it] = kappa * r["ig3"] * r["beta3"] * self.lap
        if mu > 0:
            for i in range(d):
                L[..., 1 + i, 1 + i] += mu * r["ig2"] * r["beta2"] * self.lap
                for j in range(d):
                    L[..., 1 + i, 1 + j] += mu * r["ig2"] * r["beta2s"] * self.sym[i] * self.sym[j]
        return L

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        r = self.ref
        eps, mu, kappa = self.a.eps, self.a.mu, self.a.kappa
        k, k2 = self.kmax, self.kmax**2
        ac = np.abs(np.sqrt(self.ig1 * self.ig2) - math.sqrt(r["ig1"] * r["ig2"]))
        rate = k * float(np.max(ac)) / eps
        rate += k2 * kappa / eps * float(np.max(np.abs(self.ig1 * self.beta1 - r["ig1"] * r["beta1"])))
        rate += k * float(np.max(np.abs(self.ig3 - r["ig3"])))
        rate += k2 * kappa * float(np.max(np.abs(self.ig3 * self.beta3 - r["ig3"] * r["beta3"])))
        rate += k2 * mu * float(
            np.max(np.abs(self.ig2 * self.beta2 - r["ig2"] * r["beta2"]))
            + np.max(np.abs(self.ig2 * self.beta2s - r["ig2"] * r["beta2s"]))
        )
        return rate

    def max_speed(self, U: np.ndarray) -> float:
        return float(np.max(np.sqrt(sum(vb * vb for vb in self.v_bar))))


CoefFn = Callable[[float, tuple[np.ndarray, ...]], np.ndarray]


class WaveModel(Model):
    """``eps^2 d/dt(a du/dt) - div(b grad u) = c`` as a first-order system.

    ``a``, ``b``, ``forcing`` and ``dadt`` are callables ``(t, X)`` with
    ``X`` the tuple of grid coordinates.  Products are taken pointwise
    without truncation: the system is linear and this keeps the discrete
    energy identity exact.  The stiff part uses the constant reference
    coefficients ``a_ref`` and ``b_ref``.
    """

    state_cls = WaveState

    def __init__(
        self,
        grid: SpectralGrid,
        eps: float,
        a: CoefFn,
        b: CoefFn,
        forcing: CoefFn | None = None,
        dadt: CoefFn | None = None,
        a_ref: float = 1.0,
        b_ref: float = 1.0,
        floor: float = 1e-8,
    ):
        super().__init__(grid)
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.eps = eps
        self.a = a
        self.b = b
        self.forcing = forcing
        self.dadt = dadt
        self.a_ref = a_ref
        self.b_ref = b_ref
        self.floor = floor
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def coefficients(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        X = self.grid.coordinates
        a = np.broadcast_to(self.a(t, X), self.grid.shape)
        b = np.broadcast_to(self.b(t, X), self.grid.shape)
        if np.min(a) < self.floor or np.min(b) < self.floor:
            raise ValueError(f"wave coefficients fall below the floor {self.floor}")
        return a, b

    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        eps = self.eps
        a, b = self.coefficients(t)
        flux = [b * self.phys(s * U[0]) for s in self.sym]
        total = sum(s * self.grid.forward(f) for s, f in zip(self.sym, flux))
        total = self.phys(total)
        if self.forcing is not None:
            total = total + np.broadcast_to(self.forcing(t, self.grid.coordinates), self.grid.shape)
        if self.dadt is not None:
            total = total - eps**2 * self.dadt(t, self.grid.coordinates) * self.phys(U[1])
        out = np.empty_like(U)
        out[0] = U[1]
        out[1] = self.grid.forward(total / (a * eps**2))
        return out

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        _check_kind(kind)
        L = self._blank()
        if kind == "none":
            return L
        L[..., 0, 1] = 1.0
        L[..., 1, 0] = self.b_ref / (self.a_ref * self.eps**2) * self.lap
        return L

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        a, b = self.coefficients(t)
        k = float(np.max(self.grid.abs_wavenumber))
        speed = np.sqrt(b / a)
        if kind == "none":
            return k * float(np.max(speed)) / self.eps
        # the explicit remainder is (b/a - b_ref/a_ref) lap u / eps^2; in
        # energy-scaled variables its norm is k |b/a - b_ref/a_ref| / (eps c_ref)
        c_ref = math.sqrt(self.b_ref / self.a_ref)
        rate = k * float(np.max(np.abs(speed**2 - c_ref**2))) / (self.eps * c_ref)
        if self.dadt is not None:
            rate += float(np.max(np.abs(self.dadt(t, self.grid.coordinates) / a)))
        return rate

    def energy(self, U: np.ndarray, t: float = 0.0) -> float:
        """``(1/2) int a (eps w)^2 + b |grad u|^2 dx``."""
        a, b = self.coefficients(t)
        w = self.phys(U[1])
        gu = self.grad_phys(U[0])
        dens = a * (self.eps * w) ** 2 + b * sum(g * g for g in gu)
        return 0.5 * float(np.sum(dens)) * self.grid.cell_volume


class SymmetricSystemModel(Model):
    """One-dimensional ``du/dt + A(x) du/dx - eta d2u/dx2 = 0`` for two unknowns.

    ``A(x) = [[a1, b], [b, a2]]`` is symmetric, so for ``eta = 0`` the system
    is symmetric hyperbolic and for ``eta > 0`` parabolic.  Products are
    dealiased; the stiff part is the diffusion plus the mean of ``A``.
    """

    state_cls = PairState

    def __init__(self, grid: SpectralGrid, eta: float, a1: np.ndarray, a2: np.ndarray, b: np.ndarray):
        if grid.dim != 1:
            raise ValueError("the symmetric test system is one-dimensional")
        if eta < 0:
            raise ValueError("eta must be nonnegative")
        super().__init__(grid)
        self.eta = eta
        self.A = [[self.smooth(a1), self.smooth(b)], [self.smooth(b), self.smooth(a2)]]
        self.Abar = [[float(np.mean(x)) for x in row] for row in self.A]

    def rhs(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        dx = self.sym[0]
        gu = [self.phys(dx * U[i]) for i in range(2)]
        out = np.empty_like(U)
        for i in range(2):
            out[i] = -self.spec(self.A[i][0] * gu[0] + self.A[i][1] * gu[1]) + self.eta * self.lap * U[i]
        return out

    def stiff_matrices(self, kind: str = "full") -> np.ndarray:
        _check_kind(kind)
        L = self._blank()
        if kind == "none":
            return L
        for i in range(2):
            for j in range(2):
                L[..., i, j] = -self.Abar[i][j] * self.sym[0]
        if kind == "full":
            for i in range(2):
                L[..., i, i] += self.eta * self.lap
        return L

    def soft_radius(self, U: np.ndarray, t: float = 0.0, kind: str = "full") -> float:
        dev = max(
            float(np.max(np.abs(self.A[i][j] - self.Abar[i][j]))) for i in range(2) for j in range(2)
        )
        rate = 2 * self.kmax * dev
        if kind != "full":
            rate += self.eta * self.kmax**2
        return rate


# ---------------------------------------------------------------------------
# Public state-level wrappers


def _tend(state_cls, grid, arr, pressure=None) -> Tendencies:
    rates = state_cls.from_array(grid, arr)
    return Tendencies(rates, pressure)


def rhs_main(state: StateU, a: ParamTriple, c: CoefficientSet) -> Tendencies:
    """Tendencies of the fluctuation system at ``state``."""
    model = MainModel(state.grid, a, c)
    return _tend(StateU, state.grid, model.rhs(state.to_array()))


def rhs_primitive(
    state: PrimitiveState,
    a: ParamTriple,
    R: float = 1.0,
    C_V: float = 1.5,
    k_fn=None,
    zeta_fn=None,
    eta_fn=None,
    alpha: float = 1.0,
) -> Tendencies:
    """Tendencies of the physical ``(P, v, T)`` system."""
    from .gas import MaterialLaw

    gas = PerfectGasData(
        R,
        C_V,
        k_fn if k_fn is not None else MaterialLaw(1.0),
        zeta_fn if zeta_fn is not None else MaterialLaw(1.0),
        eta_fn if eta_fn is not None else MaterialLaw(0.0),
    )
    model = PrimitiveModel(state.grid, a, gas, alpha)
    return _tend(PrimitiveRates, state.grid, model.rhs(state.to_array()))


def rhs_example(state: StateU, eps: float, beta_const: float) -> Tendencies:
    model = ExampleModel(state.grid, eps, beta_const)
    return _tend(StateU, state.grid, model.rhs(state.to_array()))


def rhs_limit(
    state: LimitState,
    mu: float,
    kappa: float,
    c: CoefficientSet,
    constraint_tol: float = 1e-8,
) -> Tendencies:
    """Tendencies of the limit system and the pressure ``pi``.

    Raises:
        ValueError: If the divergence constraint is violated by more than
            ``constraint_tol`` in the ``L^2`` norm.
    """
    model = LimitModel(state.grid, mu, kappa, c)
    U = state.to_array()
    res = float(np.sqrt(np.sum(np.abs(model.constraint_residual(U)) ** 2)))
    if res > constraint_tol:
        raise ValueError(f"divergence constraint violated: residual {res:.3e} > {constraint_tol:.1e}")
    out = model.rhs(U)
    pressure = SpectralField(state.grid, model.last_pressure)
    return _tend(LimitState, state.grid, out, pressure)


def rhs_symmetrized(state: SymmetrizedState, a: ParamTriple, c: CoefficientSet) -> Tendencies:
    model = SymmetrizedModel(state.grid, a, c)
    return _tend(SymmetrizedState, state.grid, model.rhs(state.to_array()))


def rhs_wave(
    state: WaveState,
    eps: float,
    a_coef: CoefFn,
    b_coef: CoefFn,
    forcing: CoefFn | None = None,
    dadt: CoefFn | None = None,
    t: float = 0.0,
) -> Tendencies:
    model = WaveModel(state.grid, eps, a_coef, b_coef, forcing, dadt)
    return _tend(WaveState, state.grid, model.rhs(state.to_array(), t))


def to_symmetrized(state: StateU, eps: float, c: CoefficientSet) -> SymmetrizedState:
    """``(p, v, theta) -> (varrho(theta, eps p), v, theta)``."""
    if c.varrho is None:
        raise ValueError("coefficient set does not provide varrho")
    rho = c.varrho(state.theta.values, eps * state.p.values)
    return SymmetrizedState(SpectralField.from_values(state.grid, rho), state.v, state.theta)


def from_symmetrized(state: SymmetrizedState, eps: float, c: CoefficientSet) -> StateU:
    if c.wp_from_rho is None:
        raise ValueError("coefficient set does not provide the inverse of varrho")
    wp = c.wp_from_rho(state.theta.values, state.rho.values)
    return StateU(SpectralField.from_values(state.grid, wp / eps), state.v, state.theta)


def skew_operator_residual(
    grid: SpectralGrid, gamma1: np.ndarray, gamma2: np.ndarray, U: np.ndarray
) -> tuple[float, float]:
    """``<S U, U>`` and ``||U||^2`` for the singular operator with weights.

    ``S(U1, v, U3) = (gamma1 div v, grad(gamma1 U1) + grad(gamma2 U3), gamma2 div v)``.
    Products are pointwise, so the spectral derivative makes ``S`` exactly
    antisymmetric in the grid inner product.
    """
    d = grid.dim
    X = grid.inverse(U)
    sym = grid.derivative_symbols
    divv = grid.inverse(sum(sym[j] * U[1 + j] for j in range(d)))
    w = grid.forward(gamma1 * X[0] + gamma2 * X[1 + d])
    pairing = np.sum(gamma1 * divv * X[0]) + np.sum(gamma2 * divv * X[1 + d])
    for j in range(d):
        pairing += np.sum(grid.inverse(sym[j] * w) * X[1 + j])
    norm2 = float(np.sum(X * X))
    return float(pairing), norm2


def viscous_coercivity_ratio(
    grid: SpectralGrid, zeta: np.ndarray, eta: np.ndarray, u: Sequence[np.ndarray], K2: float = 1.0
) -> float:
    """Fitted ``K1`` for ``-<zeta lap u + eta grad div u, u> >= K1 m |grad u|^2 - K2 M^2/m |u|^2``.

    ``m = inf min(zeta, zeta + eta)`` and ``M = |grad zeta|_inf + |grad eta|_inf``.
    Returns the largest ``K1`` for which the inequality holds on this sample.
    """
    d = grid.dim
    sym = grid.derivative_symbols
    uh = [grid.forward(ui) for ui in u]
    divu = grid.inverse(sum(sym[j] * uh[j] for j in range(d)))
    gdiv = [grid.inverse(s * grid.forward(divu)) for s in sym]
    lhs = 0.0
    grad2 = 0.0
    for i in range(d):
        lap_u = grid.inverse(grid.laplacian_symbol * uh[i])
        lhs -= float(np.mean((zeta * lap_u + eta * gdiv[i]) * u[i]))
        grad2 += sum(float(np.mean(grid.inverse(s * uh[i]) ** 2)) for s in sym)
    m = float(np.min(np.minimum(zeta, zeta + eta)))
    if m <= 0:
        raise ValueError("need zeta > 0 and zeta + eta > 0")
    zh, eh = grid.forward(zeta), grid.forward(eta)
    M = max(float(np.max(np.abs(grid.inverse(s * zh)))) for s in sym) + max(
        float(np.max(np.abs(grid.inverse(s * eh)))) for s in sym
    )
    u2 = sum(float(np.mean(ui * ui)) for ui in u)
    return (lhs + K2 * M * M / m * u2) / (m * grad2)
