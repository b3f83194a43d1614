"""Angular reductions: spherical averages, radial lifts, shell projection.

Two distinct reductions are provided.

``spherical_average`` extracts a smooth radial profile g(r) by Lebedev
quadrature over directions with trilinear sampling of the box field; it
is the right tool for comparing minimizer profiles across runs.

``shell_project`` averages a field over the exact orbits of |x| on the
cell-center lattice (every cell with identical |x| is one shell).  The
resulting map P is a genuine orthogonal projection — idempotent,
self-adjoint under the counting inner product, commuting with all 48
cube symmetries — which makes pairing identities like ∫⟨W⟩ρ = ∫W⟨ρ⟩
hold to rounding rather than to interpolation accuracy.
"""

from __future__ import annotations

import threading

import numpy as np
from scipy.integrate import lebedev_rule

from .fields import Field3D, Grid3D, RadialField, RadialGrid

_LEBEDEV_ORDER = 35

_shell_cache: dict = {}
_shell_lock = threading.Lock()


def _lebedev(order: int = _LEBEDEV_ORDER) -> tuple:
    pts, wts = lebedev_rule(order)
    return pts.T.copy(), wts / np.sum(wts)  # directions (N,3), weights summing to 1


def trilinear_sample(f: Field3D, points: np.ndarray) -> np.ndarray:
    """Periodic trilinear interpolation of f at points (N, 3)."""
    g = f.grid
    n, dx, L = g.n, g.dx, g.L
    # fractional cell index of each coordinate (cell centers at (i+1/2)dx - L/2)
    t = (points + L / 2) / dx - 0.5
    i0 = np.floor(t).astype(np.int64)
    frac = t - i0
    vals = np.zeros(len(points))
    v = f.values
    for bx in (0, 1):
        wx = frac[:, 0] if bx else 1 - frac[:, 0]
        ix = np.mod(i0[:, 0] + bx, n)
        for by in (0, 1):
            wy = frac[:, 1] if by else 1 - frac[:, 1]
            iy = np.mod(i0[:, 1] + by, n)
            for bz in (0, 1):
                wz = frac[:, 2] if bz else 1 - frac[:, 2]
                iz = np.mod(i0[:, 2] + bz, n)
                vals += wx * wy * wz * v[ix, iy, iz]
    return vals


def default_reduction_grid(grid: Grid3D) -> RadialGrid:
    """Radial grid out to the box corner with roughly two nodes per cell."""
    r_max = np.sqrt(3.0) / 2 * grid.L
    m = int(np.ceil(2 * r_max / grid.dx)) + 1
    return RadialGrid(m, r_max)


def spherical_average(
    f: Field3D,
    rgrid: RadialGrid | None = None,
    order: int = _LEBEDEV_ORDER,
) -> RadialField:
    """Mean of f over the sphere |x| = r_j, by Lebedev directions.

    Radii beyond the inscribed ball (r > L/2) are flagged extrapolated:
    the directional samples then wrap through the periodic images.
    """
    if rgrid is None:
        rgrid = default_reduction_grid(f.grid)
    dirs, wts = _lebedev(order)
    r = rgrid.nodes()
    pts = r[:, None, None] * dirs[None, :, :]  # (m, N, 3)
    samples = trilinear_sample(f, pts.reshape(-1, 3)).reshape(len(r), -1)
    avg = samples @ wts
    extrapolated = r > f.grid.L / 2
    return RadialField(rgrid, avg, extrapolated=extrapolated)


def lift_radial(u: RadialField, grid: Grid3D) -> Field3D:
    """Field with values u(|x|) by linear interpolation of the radial profile."""
    corner = np.sqrt(3.0) / 2 * grid.L
    if u.grid.r_max < corner * (1 - 1e-12):
        raise ValueError(
            f"radial grid r_max={u.grid.r_max} too small to cover the box "
            f"(corner radius {corner:.6g})"
        )
    rr = grid.radius()
    vals = np.interp(rr.ravel(), u.grid.nodes(), u.values).reshape(grid.shape)
    return Field3D(grid, vals)


# --------------------------------------------------------------------------
# exact lattice-shell projection
# --------------------------------------------------------------------------


def _shell_index(grid: Grid3D) -> tuple:
    """Inverse indices and counts of the exact |x|-orbits of the cell lattice.

    With centers at ((2i+1-n)/2)·dx per axis, |x|² is (dx²/4)·(odd²+odd²+odd²),
    an integer label that groups cells into exact shells.
    """
    key = (grid.n, grid.L)
    with _shell_lock:
        hit = _shell_cache.get(key)
    if hit is not None:
        return hit
    n = grid.n
    c = (2 * np.arange(n) + 1 - n).astype(np.int64)  # odd integers, 2x/dx
    s2 = c * c
    lab = s2[:, None, None] + s2[None, :, None] + s2[None, None, :]
    uniq, inverse, counts = np.unique(lab.ravel(), return_inverse=True, return_counts=True)
    radii = np.sqrt(uniq.astype(np.float64)) * grid.dx / 2
    out = (inverse, counts, radii)
    with _shell_lock:
        _shell_cache[key] = out
    return out


def shell_project(f: Field3D) -> Field3D:
    """Replace every value by the mean over its exact |x|-shell (projection P)."""
    inverse, counts, _ = _shell_index(f.grid)
    sums = np.bincount(inverse, weights=f.values.ravel(), minlength=len(counts))
    means = sums / counts
    return Field3D(f.grid, means[inverse].reshape(f.grid.shape))


def shell_profile(f: Field3D) -> tuple:
    """(radii, shell means, counts) of the exact-shell reduction."""
    inverse, counts, radii = _shell_index(f.grid)
    sums = np.bincount(inverse, weights=f.values.ravel(), minlength=len(counts))
    return radii, sums / counts, counts
