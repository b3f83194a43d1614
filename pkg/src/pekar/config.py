"""Experiment configuration: one JSON file drives validation, hashing, runs.

Schema (all sections optional unless an experiment needs them):

    {
      "grid":        {"n": 128, "L": 48.0},
      "radial_grid": {"m": 4096, "r_max": 24.0},
      "kgrid":       {"n_k": 16, "k_max": 2.0},
      "potential":   {"kind": "annular", "R": 8.0, "lam": 1.0},
      "solver":      {"max_iters": 2000, "tolerance_energy": 1e-9,
                      "tolerance_residual": 1e-5,
                      "seed": {"kind": "translated_q", "R": 8.0}},
      "experiment":  {"name": "sweep-R", "params": {"R_list": [6, 8, 10]}},
      "output_dir":  "out",
      "workers": 1,
      "seed": 12345,
      "strict": false
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field
from typing import Any, Optional

from .fields import Grid3D, RadialGrid
from .ansatz import KGrid
from .minimize import SeedSpec, SolveOptions
from .potentials import PotentialSpec

EXPERIMENTS = (
    "solve-free",
    "solve-radial",
    "solve-full",
    "sweep-R",
    "perturb",
    "product-energy",
    "orbit",
)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _require(data: dict, path: str, keys: tuple) -> None:
    for k in keys:
        if k not in data:
            raise ConfigError(f"{path}.{k}", "missing required field")


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = dc_field(default_factory=dict)
    grid: Optional[Grid3D] = None
    radial_grid: Optional[RadialGrid] = None
    kgrid: Optional[KGrid] = None
    potential: Optional[PotentialSpec] = None
    solver: SolveOptions = dc_field(default_factory=SolveOptions)
    output_dir: str = "out"
    workers: int = 1
    rng_seed: int = 0
    strict: bool = False
    raw: dict = dc_field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        _require(data, "config", ("experiment",))
        exp = data["experiment"]
        if isinstance(exp, str):
            exp = {"name": exp}
        _require(exp, "experiment", ("name",))
        name = exp["name"]
        if name not in EXPERIMENTS:
            raise ConfigError("experiment.name", f"unknown experiment {name!r}; one of {EXPERIMENTS}")

        grid = None
        if "grid" in data:
            _require(data["grid"], "grid", ("n", "L"))
            try:
                grid = Grid3D(int(data["grid"]["n"]), float(data["grid"]["L"]))
            except ValueError as e:
                raise ConfigError("grid", str(e)) from e
        rgrid = None
        if "radial_grid" in data:
            _require(data["radial_grid"], "radial_grid", ("m", "r_max"))
            try:
                rgrid = RadialGrid(int(data["radial_grid"]["m"]), float(data["radial_grid"]["r_max"]))
            except ValueError as e:
                raise ConfigError("radial_grid", str(e)) from e
        kgrid = None
        if "kgrid" in data:
            _require(data["kgrid"], "kgrid", ("n_k", "k_max"))
            try:
                kgrid = KGrid(int(data["kgrid"]["n_k"]), float(data["kgrid"]["k_max"]))
            except ValueError as e:
                raise ConfigError("kgrid", str(e)) from e
        pot = None
        if "potential" in data:
            try:
                pot = PotentialSpec(**data["potential"])
                pot.validate()
            except TypeError as e:
                raise ConfigError("potential", str(e)) from e
            except ValueError as e:
                raise ConfigError("potential", str(e)) from e

        rng_seed = int(data.get("seed", 0))
        solver_data = dict(data.get("solver", {}))
        seed_spec = SeedSpec(rng_seed=rng_seed)
        if "seed" in solver_data:
            sd = dict(solver_data.pop("seed"))
            sd.setdefault("rng_seed", rng_seed)
            if "direction" in sd:
                sd["direction"] = tuple(sd["direction"])
            try:
                seed_spec = SeedSpec(**sd)
                seed_spec.validate()
            except (TypeError, ValueError) as e:
                raise ConfigError("solver.seed", str(e)) from e
        try:
            solver = SolveOptions(seed=seed_spec, **solver_data)
            solver.validate()
        except (TypeError, ValueError) as e:
            raise ConfigError("solver", str(e)) from e

        cfg = cls(
            experiment=name,
            params=dict(exp.get("params", {})),
            grid=grid,
            radial_grid=rgrid,
            kgrid=kgrid,
            potential=pot,
            solver=solver,
            output_dir=str(data.get("output_dir", "out")),
            workers=int(data.get("workers", 1)),
            rng_seed=rng_seed,
            strict=bool(data.get("strict", False)),
            raw=data,
        )
        cfg._cross_validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError("config", f"not valid JSON: {e}") from e
        return cls.from_dict(data)

    # -- validation ----------------------------------------------------------

    def _needs(self, what: str) -> None:
        if getattr(self, what.replace("-", "_")) is None:
            raise ConfigError(what, f"experiment {self.experiment!r} requires the {what} section")

    def _cross_validate(self) -> None:
        name = self.experiment
        if name in ("solve-full", "sweep-R", "perturb", "orbit", "product-energy"):
            self._needs("grid")
        if name in ("solve-free", "solve-radial", "sweep-R"):
            self._needs("radial_grid")
        if name == "product-energy":
            self._needs("kgrid")
        if name in ("solve-radial", "solve-full", "perturb", "orbit"):
            if self.potential is None:
                raise ConfigError("potential", f"experiment {name!r} requires a potential")
        if self.potential is not None and self.grid is not None:
            if self.potential.kind == "annular" and self.potential.R + 1 >= self.grid.L / 2:
                raise ConfigError(
                    "potential.R",
                    f"potential exits box: R+1 = {self.potential.R + 1} >= L/2 = {self.grid.L / 2}",
                )
        if self.potential is not None and self.experiment == "solve-radial":
            if not self.potential.is_radial:
                raise ConfigError("potential.kind", "radial solve needs a radial potential")
        if name == "sweep-R":
            rl = self.params.get("R_list")
            if not rl:
                raise ConfigError("experiment.params.R_list", "missing or empty")
            for i, R in enumerate(rl):
                if R <= 2:
                    raise ConfigError(f"experiment.params.R_list[{i}]", f"R must exceed 2, got {R}")
                if self.grid is not None and R + 1 >= self.grid.L / 2:
                    raise ConfigError(
                        f"experiment.params.R_list[{i}]",
                        f"potential exits box: R+1 = {R + 1} >= L/2 = {self.grid.L / 2}",
                    )
        if name == "perturb":
            z = self.params.get("z")
            if not z:
                raise ConfigError("experiment.params.z", "missing perturbation spec")
            try:
                zspec = PotentialSpec(**z)
                zspec.validate()
            except (TypeError, ValueError) as e:
                raise ConfigError("experiment.params.z", str(e)) from e
            if not zspec.is_radial:
                raise ConfigError("experiment.params.z", "perturbation must be radial")
            deltas = self.params.get("deltas", [0.04, 0.02, 0.01])
            if any(d <= 0 for d in deltas):
                raise ConfigError("experiment.params.deltas", "deltas must be positive")
        if name == "orbit":
            ns = self.params.get("n_seeds", 2)
            if ns < 1:
                raise ConfigError("experiment.params.n_seeds", "must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")

    def z_spec(self) -> Optional[PotentialSpec]:
        z = self.params.get("z")
        return PotentialSpec(**z) if z else None

    # -- reporting -----------------------------------------------------------

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def derived_report(self) -> dict:
        rep: dict[str, Any] = {"experiment": self.experiment}
        if self.grid is not None:
            n = self.grid.n
            pad_bytes = (2 * n) ** 3 * 8 + (2 * n) ** 2 * (n + 1) * 16 * 2
            rep["grid"] = {
                "n": n,
                "L": self.grid.L,
                "dx": self.grid.dx,
                "inscribed_radius": self.grid.L / 2,
                "memory_estimate_bytes": int(pad_bytes + 4 * n**3 * 8),
            }
        if self.radial_grid is not None:
            rep["radial_grid"] = {
                "m": self.radial_grid.m,
                "r_max": self.radial_grid.r_max,
                "dr": self.radial_grid.dr,
            }
        if self.kgrid is not None:
            rep["kgrid"] = {
                "n_k": self.kgrid.n_k,
                "k_max": self.kgrid.k_max,
                "dk": self.kgrid.dk,
                "modes": self.kgrid.n_k**3,
            }
        if self.potential is not None:
            p = {"kind": self.potential.kind}
            if self.potential.kind == "annular":
                p["R"] = self.potential.R
                p["lam"] = self.potential.lam
                if self.grid is not None:
                    p["support_margin"] = self.grid.L / 2 - (self.potential.R + 1)
            rep["potential"] = p
        rep["solver"] = {
            "max_iters": self.solver.max_iters,
            "tolerance_energy": self.solver.tolerance_energy,
            "tolerance_residual": self.solver.tolerance_residual,
            "seed_kind": self.solver.seed.kind,
        }
        rep["workers"] = self.workers
        rep["rng_seed"] = self.rng_seed
        rep["strict"] = self.strict
        return rep
