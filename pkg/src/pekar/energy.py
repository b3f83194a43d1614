"""The variational functional, its breakdown, and the Euler–Lagrange residual.

    E_V(ψ) = ∫|∇ψ|² - ∬ |ψ(x)|²|ψ(y)|²/|x-y| - ∫ V|ψ|²,   ‖ψ‖₂ = 1.

Stationary points solve the Choquard (Schrödinger–Newton) equation with
the self-generated attractive potential,

    (-Δ - 2Φ_ρ - V) ψ = μ ψ,   Φ_ρ = ρ * 1/|x|,   ρ = ψ²,

with μ the Rayleigh quotient ⟨ψ, H_ψ ψ⟩.  The mean-field potential Φ_ρ is
computed with the same padded kernel as the energy, so the discrete
energy–gradient pair is exactly consistent and finite differences of the
energy reproduce the gradient to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field3D, RadialField
from .radial import (
    apply_kinetic_form,
    kinetic_form_coefficients,
    radial_coulomb,
    radial_coulomb_potential,
    radial_kinetic,
)
from .spectral import ops_for


@dataclass(frozen=True)
class EnergyBreakdown:
    """Kinetic, Coulomb and potential components; total = kin - cou - pot."""

    kinetic: float
    coulomb: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic - self.coulomb - self.potential

    def as_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "coulomb": self.coulomb,
            "potential": self.potential,
            "total": self.total,
        }


@dataclass(frozen=True)
class ELResidual:
    """‖(H_ψ - μ)ψ‖₂ and the Rayleigh multiplier μ."""

    residual_norm: float
    mu: float


# --------------------------------------------------------------------------
# full 3D functional
# --------------------------------------------------------------------------


def pekar_energy(psi: Field3D, V: Field3D | None = None) -> EnergyBreakdown:
    """Energy breakdown of a normalized ψ in external potential V."""
    ops = ops_for(psi.grid)
    rho = psi.values**2
    T = ops.kinetic(psi.values)
    D = ops.coulomb_energy(rho)
    P = 0.0
    if V is not None:
        if V.grid != psi.grid:
            raise ValueError("potential and wave function live on different grids")
        P = float(np.sum(V.values * rho) * psi.grid.cell_volume)
    return EnergyBreakdown(T, D, P)


def free_energy(psi: Field3D) -> float:
    """kinetic - coulomb, the translation-invariant part."""
    b = pekar_energy(psi, None)
    return b.kinetic - b.coulomb


def hamiltonian_apply(
    psi: Field3D, V: Field3D | None = None, include_coulomb: bool = True
) -> Field3D:
    """H_ψ ψ = (-Δ - 2Φ_ρ - V) ψ with Φ_ρ from the padded free-space kernel."""
    ops = ops_for(psi.grid)
    out = ops.neg_laplacian(psi.values)
    if include_coulomb:
        phi = ops.coulomb_potential(psi.values**2)
        out -= 2 * phi * psi.values
    if V is not None:
        out -= V.values * psi.values
    return Field3D(psi.grid, out)


def energy_gradient(psi: Field3D, V: Field3D | None = None) -> tuple:
    """(breakdown, L² gradient 2·H_ψψ of the unconstrained functional)."""
    b = pekar_energy(psi, V)
    h = hamiltonian_apply(psi, V)
    return b, Field3D(psi.grid, 2 * h.values)


def el_residual(
    psi: Field3D, V: Field3D | None = None, include_coulomb: bool = True
) -> ELResidual:
    """Residual of the mean-field eigenvalue equation at ψ, with Rayleigh μ."""
    dv = psi.grid.cell_volume
    h = hamiltonian_apply(psi, V, include_coulomb=include_coulomb).values
    mu = float(np.sum(psi.values * h) * dv)
    res = h - mu * psi.values
    return ELResidual(float(np.sqrt(np.sum(res * res) * dv)), mu)


# --------------------------------------------------------------------------
# radial functional
# --------------------------------------------------------------------------


def radial_pekar_energy(u: RadialField, Vr: RadialField | None = None) -> EnergyBreakdown:
    T = radial_kinetic(u)
    rho = u.density()
    D = radial_coulomb(rho)
    P = 0.0
    if Vr is not None:
        if Vr.grid != u.grid:
            raise ValueError("potential and wave function live on different radial grids")
        P = float(np.sum(u.grid.volume_weights() * Vr.values * rho.values))
    return EnergyBreakdown(T, D, P)


def radial_free_energy(u: RadialField) -> float:
    b = radial_pekar_energy(u, None)
    return b.kinetic - b.coulomb


def radial_hamiltonian_apply(u: RadialField, Vr: RadialField | None = None) -> np.ndarray:
    """(H u)_j in the weighted metric; the origin node (zero measure) is set to 0."""
    g = u.grid
    M = g.volume_weights()
    c_seg = kinetic_form_coefficients(g)
    Ku = apply_kinetic_form(u.values, c_seg)
    phi = radial_coulomb_potential(u.density())
    out = np.zeros(g.m)
    out[1:] = Ku[1:] / M[1:] - 2 * phi[1:] * u.values[1:]
    if Vr is not None:
        out[1:] -= Vr.values[1:] * u.values[1:]
    return out


def radial_el_residual(u: RadialField, Vr: RadialField | None = None) -> ELResidual:
    g = u.grid
    M = g.volume_weights()
    h = radial_hamiltonian_apply(u, Vr)
    # μ by the energy pairing: the origin node carries kinetic coupling but no
    # metric weight, so Σ M u (Hu) alone would drop its contribution
    rho = u.density()
    pair = float(np.sum(M * radial_coulomb_potential(rho) * rho.values))
    P = float(np.sum(M * Vr.values * rho.values)) if Vr is not None else 0.0
    mu = radial_kinetic(u) - 2 * pair - P
    res = h - mu * u.values
    res[0] = 0.0
    return ELResidual(float(np.sqrt(max(np.sum(M * res * res), 0.0))), mu)


# --------------------------------------------------------------------------
# safety rail used by the solvers
# --------------------------------------------------------------------------


class CoercivityError(RuntimeError):
    """Iterate fell below the coercivity floor total >= 0.25·kinetic - 10."""


def check_coercivity(b: EnergyBreakdown, context: str = "") -> None:
    floor = 0.25 * b.kinetic - 10.0
    if b.total < floor:
        raise CoercivityError(
            f"energy {b.total:.6g} below coercivity floor {floor:.6g} "
            f"(kinetic {b.kinetic:.6g}, coulomb {b.coulomb:.6g}, "
            f"potential {b.potential:.6g}){': ' + context if context else ''}"
        )
