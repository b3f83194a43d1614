"""Constrained minimization on the L² unit sphere, full 3D and radial.

The scheme is projected gradient descent with Armijo backtracking:
steepest-descent directions are smoothed by the Sobolev preconditioner
(c - 2Δ)⁻¹ (spectral in the box, banded tridiagonal solve on the radial
grid), projected to the sphere tangent, and the step is accepted only on
sufficient decrease, so the energy history is non-increasing by
construction.  Plain L² descent needs step sizes ~1/k_max² and ~1e4-1e5
iterations at working resolutions; the preconditioner removes that
stiffness without touching the monotonicity contract.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Optional, Union

import numpy as np
from scipy.linalg import solveh_banded

from .energy import ELResidual, EnergyBreakdown, check_coercivity
from .fields import (
    BoundarySupportWarning,
    Field3D,
    Grid3D,
    RadialField,
    RadialGrid,
    normalize,
    normalize_radial,
)
from .radial import (
    apply_kinetic_form,
    kinetic_form_coefficients,
    radial_coulomb,
    radial_coulomb_potential,
)
from .spectral import ops_for

DEFAULT_RADIAL_GRID = RadialGrid(4096, 24.0)
FREE_SEED_SIGMA = 2.66  # near-optimal Gaussian width for the free problem


@dataclass(frozen=True)
class SeedSpec:
    """Initial iterate recipe.

    kinds: radial_gaussian | translated_q | random_perturbed | custom
    """

    kind: str = "radial_gaussian"
    sigma: float = FREE_SEED_SIGMA
    R: Optional[float] = None  # translated_q: plateau radius fixing ζ = (R+2)/2
    direction: tuple = (1.0, 0.0, 0.0)
    amplitude: float = 0.05  # random_perturbed: relative noise level
    rng_seed: int = 0
    field: Optional[object] = None  # custom: Field3D or RadialField

    def validate(self) -> None:
        if self.kind not in ("radial_gaussian", "translated_q", "random_perturbed", "custom"):
            raise ValueError(f"unknown seed kind {self.kind!r}")
        if self.kind == "translated_q" and self.R is None:
            raise ValueError("translated_q seed needs R")
        if self.kind == "custom" and self.field is None:
            raise ValueError("custom seed needs a field")


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 50000
    step_init: float = 1.0
    tolerance_energy: float = 1e-9
    tolerance_residual: float = 1e-5
    seed: SeedSpec = dc_field(default_factory=SeedSpec)
    armijo_c: float = 1e-4
    backtrack_shrink: float = 0.5
    backtrack_grow: float = 1.4
    step_max: float = 8.0
    max_backtracks: int = 60
    precondition: bool = True
    precond_shift: Optional[float] = None  # default: max(0.25, 2|μ_seed|)

    def validate(self) -> None:
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.tolerance_energy <= 0 or self.tolerance_residual <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.backtrack_shrink < 1):
            raise ValueError("backtrack_shrink must be in (0,1)")
        self.seed.validate()


@dataclass
class MinimizerResult:
    psi: Union[Field3D, RadialField]
    energy: EnergyBreakdown
    residual: ELResidual
    iterations: int
    converged: bool
    history: np.ndarray
    norm_history: np.ndarray = dc_field(default_factory=lambda: np.array([]))
    stalled: bool = False
    boundary_flag: bool = False


# --------------------------------------------------------------------------
# seeds
# --------------------------------------------------------------------------


def radial_gaussian_seed(grid: Grid3D, sigma: float = FREE_SEED_SIGMA) -> Field3D:
    rr = grid.radius()
    return normalize(Field3D(grid, np.exp(-(rr**2) / (4 * sigma**2))))


def translate_seed(
    Q: RadialField, R: float, grid: Grid3D, direction: tuple = (1.0, 0.0, 0.0)
) -> Field3D:
    """Normalized 3D field Q(|x - ζ|) with ζ = ((R+2)/2)·direction̂.

    Raises when the translate leaks noticeable mass outside the inscribed
    ball, where the free-space Coulomb guarantee ends.
    """
    d = np.asarray(direction, dtype=np.float64)
    nd = np.linalg.norm(d)
    if nd == 0:
        raise ValueError("direction must be nonzero")
    zeta = (R + 2.0) / 2.0 * d / nd
    X, Y, Z = grid.meshgrid()
    rr = np.sqrt((X - zeta[0]) ** 2 + (Y - zeta[1]) ** 2 + (Z - zeta[2]) ** 2)
    vals = np.interp(rr.ravel(), Q.grid.nodes(), Q.values, right=0.0).reshape(grid.shape)
    out = normalize(Field3D(grid, vals))
    outside = grid.radius() > grid.L / 2
    leak = float(np.sum(out.values[outside] ** 2) * grid.cell_volume)
    if leak > 5e-2:
        raise ValueError(
            f"translate support violation: mass {leak:.2e} outside the inscribed "
            f"ball (|ζ| = {np.linalg.norm(zeta):.3g}, L/2 = {grid.L / 2})"
        )
    if leak > 1e-6:
        warnings.warn(
            f"translated seed leaks mass {leak:.2e} past the inscribed ball; "
            f"box marginal for this translate",
            BoundarySupportWarning,
            stacklevel=2,
        )
    return out


def random_perturbed_seed(
    grid: Grid3D, sigma: float, amplitude: float, rng_seed: int
) -> Field3D:
    base = radial_gaussian_seed(grid, sigma)
    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal(grid.shape)
    smooth = ops_for(grid).precondition(noise, 1.0)
    smooth *= amplitude / max(float(np.sqrt(np.mean(smooth**2))), 1e-300)
    return normalize(Field3D(grid, base.values * (1.0 + smooth)))


def build_seed(spec: SeedSpec, grid: Grid3D) -> Field3D:
    spec.validate()
    if spec.kind == "radial_gaussian":
        return radial_gaussian_seed(grid, spec.sigma)
    if spec.kind == "translated_q":
        Q = solve_free().psi
        return translate_seed(Q, spec.R, grid, spec.direction)
    if spec.kind == "random_perturbed":
        return random_perturbed_seed(grid, spec.sigma, spec.amplitude, spec.rng_seed)
    f = spec.field
    if isinstance(f, Field3D):
        return normalize(f)
    raise ValueError("custom 3D seed must be a Field3D")


def build_radial_seed(spec: SeedSpec, rgrid: RadialGrid) -> RadialField:
    spec.validate()
    r = rgrid.nodes()
    if spec.kind == "radial_gaussian":
        return normalize_radial(RadialField(rgrid, np.exp(-(r**2) / (4 * spec.sigma**2))))
    if spec.kind == "translated_q":
        # radial problem cannot hold an off-center lump; use a shell at ζ instead
        zeta = (spec.R + 2.0) / 2.0
        return normalize_radial(RadialField(rgrid, np.exp(-((r - zeta) ** 2))))
    if spec.kind == "random_perturbed":
        rng = np.random.default_rng(spec.rng_seed)
        base = np.exp(-(r**2) / (4 * spec.sigma**2))
        modes = np.zeros(rgrid.m)
        for j in range(1, 6):
            modes += rng.standard_normal() / j * np.cos(j * np.pi * r / rgrid.r_max)
        return normalize_radial(RadialField(rgrid, base * (1.0 + spec.amplitude * modes)))
    f = spec.field
    if isinstance(f, RadialField):
        return normalize_radial(f)
    raise ValueError("custom radial seed must be a RadialField")


def flat_seed(rgrid: RadialGrid) -> RadialField:
    return normalize_radial(RadialField(rgrid, np.ones(rgrid.m)))


# --------------------------------------------------------------------------
# full 3D solver
# --------------------------------------------------------------------------


def minimize(
    V: Field3D,
    opts: SolveOptions = SolveOptions(),
    seed_field: Optional[Field3D] = None,
) -> MinimizerResult:
    """Minimize E_V over ‖ψ‖₂ = 1 by monotone projected descent."""
    opts.validate()
    grid = V.grid
    ops = ops_for(grid)
    dv = grid.cell_volume
    Vv = V.values

    psi = (normalize(seed_field) if seed_field is not None else build_seed(opts.seed, grid)).values

    def evaluate(values):
        spec_psi = ops.fft(values)
        T = ops.kinetic(values, spec=spec_psi)
        rho = values**2
        spec_rho = ops.fft_padded(rho)
        D = ops.coulomb_energy(rho, spec_pad=spec_rho)
        P = float(np.sum(Vv * rho) * dv)
        return EnergyBreakdown(T, D, P), spec_psi, spec_rho

    bd, spec_psi, spec_rho = evaluate(psi)
    check_coercivity(bd, "seed evaluation")
    E = bd.total
    history = [E]
    norms = [float(np.sqrt(np.sum(psi**2) * dv))]
    step = opts.step_init
    shift = opts.precond_shift
    # a warm start already at the stationary point should return immediately
    last_dE = 0.0
    stalled = False
    mu = 0.0
    res_norm = np.inf
    it = 0

    for it in range(opts.max_iters):
        phi = ops.coulomb_potential(psi**2, spec_pad=spec_rho)
        h = ops.neg_laplacian(psi, spec=spec_psi) - 2 * phi * psi - Vv * psi
        mu = float(np.sum(psi * h) * dv)
        res = h - mu * psi
        res_norm = float(np.sqrt(np.sum(res * res) * dv))
        if res_norm <= opts.tolerance_residual and last_dE <= opts.tolerance_energy:
            break
        if shift is None:
            shift = max(0.25, 2 * abs(mu))
        g = 2 * res
        if opts.precondition:
            d = ops.precondition(g, shift)
            d -= (np.sum(d * psi) * dv) * psi
            decr = float(np.sum(g * d) * dv)
            if decr <= 0:
                d, decr = g, float(np.sum(g * g) * dv)
        else:
            d, decr = g, float(np.sum(g * g) * dv)

        s = step
        accepted = False
        for _ in range(opts.max_backtracks):
            cand = psi - s * d
            nrm = float(np.sqrt(np.sum(cand**2) * dv))
            if nrm > 0:
                cand /= nrm
                bd_t, spec_psi_t, spec_rho_t = evaluate(cand)
                if bd_t.total <= E - opts.armijo_c * s * decr:
                    accepted = True
                    break
            s *= opts.backtrack_shrink
        if not accepted:
            stalled = True
            break
        check_coercivity(bd_t, f"iteration {it}")
        last_dE = E - bd_t.total
        psi, bd, E = cand, bd_t, bd_t.total
        spec_psi, spec_rho = spec_psi_t, spec_rho_t
        history.append(E)
        norms.append(float(np.sqrt(np.sum(psi**2) * dv)))
        step = min(s * opts.backtrack_grow, opts.step_max)
        if last_dE <= opts.tolerance_energy and res_norm <= opts.tolerance_residual:
            break

    converged = bool(res_norm <= opts.tolerance_residual and last_dE <= opts.tolerance_energy)
    out_field = Field3D(grid, psi)
    boundary = ops.boundary_mass(psi**2) > 1e-6
    return MinimizerResult(
        psi=out_field,
        energy=bd,
        residual=ELResidual(res_norm, mu),
        iterations=it,
        converged=converged,
        history=np.asarray(history),
        norm_history=np.asarray(norms),
        stalled=stalled,
        boundary_flag=bool(boundary),
    )


# --------------------------------------------------------------------------
# radial solver
# --------------------------------------------------------------------------


def minimize_radial(
    Vr: RadialField,
    opts: SolveOptions = SolveOptions(),
    seed_field: Optional[RadialField] = None,
) -> MinimizerResult:
    """Same descent scheme in the radial discretization (Newton Coulomb)."""
    opts.validate()
    rgrid = Vr.grid
    m = rgrid.m
    M = rgrid.volume_weights()
    Vv = Vr.values
    c_seg = kinetic_form_coefficients(rgrid)
    Kd = np.zeros(m)
    Kd[:-1] += c_seg
    Kd[1:] += c_seg

    u = (
        normalize_radial(seed_field) if seed_field is not None else build_radial_seed(opts.seed, rgrid)
    ).values

    def evaluate(values):
        # T = Σ c_j (Δu)²; c_seg already carries the dr weight
        T = float(np.sum(c_seg * np.diff(values) ** 2))
        rho = RadialField(rgrid, values**2)
        D = radial_coulomb(rho)
        P = float(np.sum(M * Vv * values**2))
        return EnergyBreakdown(T, D, P)

    bd = evaluate(u)
    check_coercivity(bd, "seed evaluation")
    E = bd.total
    history = [E]
    norms = [float(np.sqrt(np.sum(M * u * u)))]
    step = opts.step_init
    shift = opts.precond_shift
    banded = None
    last_dE = 0.0
    stalled = False
    mu = 0.0
    res_norm = np.inf
    it = 0

    for it in range(opts.max_iters):
        rho = u**2
        phi = radial_coulomb_potential(RadialField(rgrid, rho))
        Ku = apply_kinetic_form(u, c_seg)
        h = np.zeros(m)
        h[1:] = Ku[1:] / M[1:] - 2 * phi[1:] * u[1:] - Vv[1:] * u[1:]
        # Rayleigh quotient by the energy pairing (origin node has no metric weight)
        mu = bd.kinetic - 2 * float(np.sum(M * phi * rho)) - bd.potential
        res = h - mu * u
        res[0] = 0.0
        res_norm = float(np.sqrt(max(np.sum(M * res * res), 0.0)))
        if res_norm <= opts.tolerance_residual and last_dE <= opts.tolerance_energy:
            break
        if shift is None:
            shift = max(0.25, 2 * abs(mu))
        if banded is None and opts.precondition:
            banded = np.zeros((2, m))
            banded[0, :] = shift * M + 2 * Kd
            banded[1, :-1] = -2 * c_seg
        g = M * 2 * res
        g[0] = 2 * Ku[0]  # origin node couples through the kinetic form only
        if opts.precondition:
            d = solveh_banded(banded, g, lower=True)
            d -= float(np.sum(M * d * u)) * u
            decr = float(np.sum(g * d))
            if decr <= 0:
                d, decr = 2 * res, float(np.sum(g * 2 * res))
        else:
            d, decr = 2 * res, float(np.sum(g * 2 * res))

        s = step
        accepted = False
        for _ in range(opts.max_backtracks):
            cand = u - s * d
            nrm2 = float(np.sum(M * cand * cand))
            if nrm2 > 0:
                cand = cand / np.sqrt(nrm2)
                bd_t = evaluate(cand)
                if bd_t.total <= E - opts.armijo_c * s * decr:
                    accepted = True
                    break
            s *= opts.backtrack_shrink
        if not accepted:
            stalled = True
            break
        check_coercivity(bd_t, f"radial iteration {it}")
        last_dE = E - bd_t.total
        u, bd, E = cand, bd_t, bd_t.total
        history.append(E)
        norms.append(float(np.sqrt(np.sum(M * u * u))))
        step = min(s * opts.backtrack_grow, opts.step_max)
        if last_dE <= opts.tolerance_energy and res_norm <= opts.tolerance_residual:
            break

    converged = bool(res_norm <= opts.tolerance_residual and last_dE <= opts.tolerance_energy)
    return MinimizerResult(
        psi=RadialField(rgrid, u),
        energy=bd,
        residual=ELResidual(res_norm, mu),
        iterations=it,
        converged=converged,
        history=np.asarray(history),
        norm_history=np.asarray(norms),
        stalled=stalled,
    )


# --------------------------------------------------------------------------
# the free problem and its cached minimizer Q
# --------------------------------------------------------------------------

_free_cache: dict = {}
_free_lock = threading.Lock()


def solve_free(
    rgrid: RadialGrid = DEFAULT_RADIAL_GRID,
    opts: Optional[SolveOptions] = None,
) -> MinimizerResult:
    """Radial minimizer Q of the free problem; sign-fixed nonnegative, cached.

    The value e(0) is negative and Q is non-increasing in r (symmetric
    decreasing minimizer).
    """
    if opts is None:
        opts = SolveOptions(tolerance_residual=1e-6)
    key = (rgrid.m, rgrid.r_max, opts.tolerance_energy, opts.tolerance_residual)
    with _free_lock:
        hit = _free_cache.get(key)
    if hit is not None:
        return hit
    V0 = RadialField(rgrid, np.zeros(rgrid.m))
    res = minimize_radial(V0, opts)
    if float(np.sum(res.psi.values)) < 0:
        res.psi = RadialField(rgrid, -res.psi.values)
    with _free_lock:
        _free_cache[key] = res
    return res
