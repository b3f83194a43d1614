"""Experiment drivers: the R-sweep, perturbation derivatives, rotation checks.

Two headline computations.

(A) Symmetry breaking: for the annular well the unconstrained minimum
    e(V_R) (reached by an off-center lump seeded at the translate of the
    free minimizer) drops below the radially constrained minimum
    e_rad(V_R); the sweep records both, the variational trial bound
    e(0) - ∫V_R|Q_R|², the well mass and the center-of-mass displacement
    that witnesses nonradiality.

(B) Derivative of δ ↦ e(V + δZ) for radial Z: central differences over a
    δ-schedule with Richardson extrapolation, checked against the pairing
    -∫Z|u_V|².  Perturbed solves warm-start from the unperturbed
    minimizer, which keeps them in the same rotation's basin and makes
    the one-sided variational quotients exact bracketing bounds for the
    monotone solver.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .angular import spherical_average
from .fields import Field3D, Grid3D, RadialGrid
from .minimize import (
    MinimizerResult,
    SeedSpec,
    SolveOptions,
    build_seed,
    minimize,
    minimize_radial,
    solve_free,
    translate_seed,
)
from .potentials import PotentialSpec, mass_in_well, potential_energy, rotational_average


@dataclass
class SweepRow:
    R: float
    e_full: float
    e_rad: float
    trial_bound: float
    well_mass: float
    anisotropy: float
    full_converged: bool
    rad_converged: bool
    full_iterations: int
    rad_iterations: int
    basin: str = "translate"  # which seed produced e_full

    @property
    def gap(self) -> float:
        return self.e_rad - self.e_full

    @property
    def flagged(self) -> bool:
        return not (self.full_converged and self.rad_converged)

    def as_dict(self) -> dict:
        return {
            "R": self.R,
            "e_full": self.e_full,
            "e_rad": self.e_rad,
            "trial_bound": self.trial_bound,
            "gap": self.gap,
            "well_mass": self.well_mass,
            "anisotropy": self.anisotropy,
            "basin": self.basin,
            "full_converged": self.full_converged,
            "rad_converged": self.rad_converged,
            "full_iterations": self.full_iterations,
            "rad_iterations": self.rad_iterations,
        }


@dataclass
class DerivativeReport:
    deltas: list
    e_base: float
    e_plus: list
    e_minus: list
    forward: list
    backward: list
    central: list
    pairing: float
    richardson: float
    defect: float
    flagged: bool

    def as_rows(self) -> list:
        rows = []
        for i, d in enumerate(self.deltas):
            rows.append(
                {
                    "delta": d,
                    "e_plus": self.e_plus[i],
                    "e_minus": self.e_minus[i],
                    "forward": self.forward[i],
                    "backward": self.backward[i],
                    "central": self.central[i],
                    "pairing": self.pairing,
                    "richardson": self.richardson,
                    "defect": self.defect,
                }
            )
        return rows


@dataclass
class OrbitReport:
    energies: list
    profile_rms: np.ndarray  # pairwise RMS distance between density profiles
    converged: list

    @property
    def energy_spread(self) -> float:
        return float(np.max(self.energies) - np.min(self.energies)) if self.energies else 0.0

    @property
    def max_profile_mismatch(self) -> float:
        return float(np.max(self.profile_rms)) if self.profile_rms.size else 0.0


def center_of_mass(rho: Field3D) -> np.ndarray:
    x = rho.grid.axis()
    dv = rho.grid.cell_volume
    v = rho.values
    return np.array(
        [
            np.sum(x[:, None, None] * v),
            np.sum(x[None, :, None] * v),
            np.sum(x[None, None, :] * v),
        ]
    ) * dv


def trial_upper_bound(R: float, grid: Grid3D, rgrid: Optional[RadialGrid] = None) -> float:
    """e(0) - ∫ V_R |Q_R|², the variational bound from the translated Q."""
    free = solve_free() if rgrid is None else solve_free(rgrid)
    QR = translate_seed(free.psi, R, grid)
    VR = PotentialSpec(kind="annular", R=R).build(grid)
    return free.energy.total - potential_energy(VR, QR.density())


def lift_onto(u_values: np.ndarray, rgrid: RadialGrid, grid: Grid3D) -> Field3D:
    """Zero-extended radial lift (decaying profiles; no corner-coverage demand)."""
    rr = grid.radius()
    vals = np.interp(rr.ravel(), rgrid.nodes(), u_values, right=0.0).reshape(grid.shape)
    return Field3D(grid, vals)


def sweep_R(
    R_list: Sequence[float],
    grid: Grid3D,
    rgrid: RadialGrid,
    opts: SolveOptions = SolveOptions(),
    workers: int = 1,
) -> list:
    """One row per R: full solve seeded at the translate, radial solve, bound.

    Below the symmetry-breaking crossover the off-center seed converges to a
    lump basin that sits above the radial minimum; the driver then re-solves
    from the lifted radial minimizer and keeps the lower of the two, so
    e_full ≤ e_rad holds across the whole sweep up to discretization differences.
    """
    free = solve_free()

    def run_one(R: float) -> SweepRow:
        spec = PotentialSpec(kind="annular", R=R)
        V = spec.build(grid)
        seed = translate_seed(free.psi, R, grid)
        full = minimize(V, opts, seed_field=seed)
        Vr = spec.build_radial(rgrid)
        rad = minimize_radial(Vr, opts)
        basin = "translate"
        margin = 10 * max(opts.tolerance_energy, 1e-8)
        if full.energy.total > rad.energy.total - margin:
            from .fields import normalize as _norm

            seed2 = _norm(lift_onto(rad.psi.values, rgrid, grid))
            alt = minimize(V, opts, seed_field=seed2)
            if alt.energy.total < full.energy.total:
                full, basin = alt, "radial"
        rho = full.psi.density()
        return SweepRow(
            R=R,
            e_full=full.energy.total,
            e_rad=rad.energy.total,
            trial_bound=free.energy.total - potential_energy(V, seed.density()),
            well_mass=mass_in_well(rho, R),
            anisotropy=float(np.linalg.norm(center_of_mass(rho))),
            full_converged=full.converged,
            rad_converged=rad.converged,
            full_iterations=full.iterations,
            rad_iterations=rad.iterations,
            basin=basin,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_one, R_list))
    return [run_one(R) for R in R_list]


def perturbed_energy(
    V: Field3D,
    Z: Field3D,
    delta: float,
    opts: SolveOptions = SolveOptions(),
    warm: Optional[Field3D] = None,
) -> MinimizerResult:
    """Minimize E over the sphere for the potential V + δZ (warm-started)."""
    Vp = Field3D(V.grid, V.values + delta * Z.values)
    return minimize(Vp, opts, seed_field=warm)


def fd_derivative(
    V: Field3D,
    Zspec: PotentialSpec,
    grid: Grid3D,
    opts: SolveOptions = SolveOptions(),
    deltas: Sequence[float] = (0.04, 0.02, 0.01),
    base: Optional[MinimizerResult] = None,
) -> DerivativeReport:
    """Central differences of δ ↦ e(V + δZ) against the pairing -∫Z|u_V|².

    Z must be radial: for nonradial perturbations the map need not be
    differentiable (the sup/inf pairings over the minimizer set differ),
    so no derivative is claimed there.
    """
    Zspec.validate()
    if not Zspec.is_radial:
        raise ValueError("derivative checks require a radial perturbation Z")
    Z = Zspec.build(grid)
    if base is None:
        base = minimize(V, opts)
    uV = base.psi
    e0 = base.energy.total
    pairing = potential_energy(Z, uV.density())

    deltas = sorted(deltas, reverse=True)
    e_plus, e_minus, fwd, bwd, cen = [], [], [], [], []
    flagged = not base.converged
    for d in deltas:
        rp = perturbed_energy(V, Z, +d, opts, warm=uV)
        rm = perturbed_energy(V, Z, -d, opts, warm=uV)
        flagged = flagged or not (rp.converged and rm.converged)
        e_plus.append(rp.energy.total)
        e_minus.append(rm.energy.total)
        fwd.append((rp.energy.total - e0) / d)
        bwd.append((e0 - rm.energy.total) / d)
        cen.append((rp.energy.total - rm.energy.total) / (2 * d))
    if len(cen) >= 2:
        # classic h² elimination from the two finest central differences
        h1, h2 = deltas[-2], deltas[-1]
        r = (h1 / h2) ** 2
        richardson = (r * cen[-1] - cen[-2]) / (r - 1)
    else:
        richardson = cen[-1]
    defect = abs(richardson + pairing)
    return DerivativeReport(
        deltas=list(deltas),
        e_base=e0,
        e_plus=e_plus,
        e_minus=e_minus,
        forward=fwd,
        backward=bwd,
        central=cen,
        pairing=pairing,
        richardson=richardson,
        defect=defect,
        flagged=flagged,
    )


def rotational_density_check(u: Field3D, W: Field3D) -> tuple:
    """Fubini defects of the Haar-average pairing, (|∫⟨ρ⟩W - ∫ρ⟨W⟩|, |∫ρ⟨W⟩ - ∫⟨ρ⟩⟨W⟩|).

    With the exact shell projection both vanish to rounding; anything
    larger flags a broken average.
    """
    rho = u.density()
    rho_avg = rotational_average(rho)
    W_avg = rotational_average(W)
    a = potential_energy(W, rho_avg)
    b = potential_energy(W_avg, rho)
    c = potential_energy(W_avg, rho_avg)
    return abs(a - b), abs(b - c)


def rotation_orbit_evidence(
    Vspec: PotentialSpec,
    n_seeds: int,
    grid: Grid3D,
    opts: SolveOptions = SolveOptions(),
    rng_seed: int = 0,
    recenter: bool = False,
    profile_grid: Optional[RadialGrid] = None,
) -> OrbitReport:
    """Solve from several random-direction seeds; compare energies and
    spherical-average density profiles.  Agreement is evidence (never
    proof) that the minimizers form one rotation orbit."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    rng = np.random.default_rng(rng_seed)
    V = Vspec.build(grid)
    energies, profiles, converged = [], [], []
    for _ in range(n_seeds):
        if Vspec.kind == "annular":
            d = rng.standard_normal(3)
            d /= np.linalg.norm(d)
            seed = translate_seed(solve_free().psi, Vspec.R, grid, direction=tuple(d))
        else:
            seed = build_seed(
                SeedSpec(kind="random_perturbed", rng_seed=int(rng.integers(2**31))), grid
            )
        res = minimize(V, opts, seed_field=seed)
        psi = res.psi
        if recenter:
            shift = np.rint(center_of_mass(psi.density()) / grid.dx).astype(int)
            psi = Field3D(grid, np.roll(psi.values, tuple(-shift), axis=(0, 1, 2)))
        prof = spherical_average(psi.density(), rgrid=profile_grid)
        keep = ~prof.extrapolated if prof.extrapolated is not None else slice(None)
        profiles.append(prof.values[keep])
        energies.append(res.energy.total)
        converged.append(res.converged)
    k = len(profiles)
    rms = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            rms[i, j] = rms[j, i] = float(
                np.sqrt(np.mean((profiles[i] - profiles[j]) ** 2))
            )
    return OrbitReport(energies=energies, profile_rms=rms, converged=converged)
