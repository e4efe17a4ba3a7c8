"""Scenario configuration, built-in benchmark presets, and output writing.

Configs are YAML key trees whose dimensional leaves carry explicit unit
suffixes ("1e6 Pa", "1.5e-5 m/year", "10 years"); the parser converts
everything to SI on load, so Table-style mixed unit systems cannot leak
into the numerics.  Two presets reproduce the benchmark cases: hydrogen
injection into a 1D water-saturated strip, and a 2D square with a
volumetric hydrogen source.
"""

import io
import os
from dataclasses import dataclass, asdict, field, replace

import numpy as np
import yaml

from .constitutive import FluidParams, MediumParams, derived_constants
from .discretization import (
    BoundarySpec,
    FlowProblem,
    Impervious,
    InflowGas,
    OutflowDirichlet,
    SourceField,
    StructuredGrid,
)
from .errors import ConfigError
from .solver import NewtonOptions, RunSummary, TimeStepControl, run_simulation

__all__ = [
    "YEAR",
    "GridSpec",
    "SourceRegion",
    "ScenarioConfig",
    "preset",
    "parse_config_text",
    "config_to_text",
    "load_config",
    "build_problem",
    "run_scenario",
    "write_outputs",
    "LINECUT_COLUMNS",
]

YEAR = 3.1536e7  # seconds per year (365 days)

LINECUT_COLUMNS = ("x_m", "p_l_Pa", "X", "S_g", "c_h2_mol_per_m3")

# unit suffix -> (kind, factor to SI)
_UNITS = {
    "Pa": ("pressure", 1.0),
    "MPa": ("pressure", 1e6),
    "s": ("time", 1.0),
    "years": ("time", YEAR),
    "year": ("time", YEAR),
    "m": ("length", 1.0),
    "m/s": ("velocity", 1.0),
    "m/year": ("velocity", 1.0 / YEAR),
    "m^2": ("area", 1.0),
    "m^2/s": ("diffusivity", 1.0),
    "Pa.s": ("viscosity", 1.0),
    "K": ("temperature", 1.0),
    "kg/mol": ("molar_mass", 1.0),
    "kg/m^3": ("density", 1.0),
    "mol/Pa/m^3": ("henry", 1.0),
    "kg/m^3/s": ("mass_rate_density", 1.0),
    "kg/m^3/year": ("mass_rate_density", 1.0 / YEAR),
    "m/s^2": ("acceleration", 1.0),
    "1/s": ("rate", 1.0),
}


def _parse_quantity(value, kind, path):
    """Number with unit suffix -> SI float; dimensionless accepts bare numbers."""
    if kind == "dimensionless":
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a bare number, got {value!r}")
    if isinstance(value, (int, float)):
        raise ConfigError(f"{path}: dimensional quantity needs a unit suffix "
                          f"(e.g. '{value} ...'), expected kind {kind!r}")
    parts = str(value).split()
    if len(parts) != 2:
        raise ConfigError(f"{path}: expected 'NUMBER UNIT', got {value!r}")
    num, unit = parts
    if unit not in _UNITS:
        raise ConfigError(f"{path}: unknown unit {unit!r}")
    got_kind, factor = _UNITS[unit]
    if got_kind != kind:
        raise ConfigError(f"{path}: unit {unit!r} is a {got_kind}, "
                          f"expected {kind}")
    try:
        return float(num) * factor
    except ValueError:
        raise ConfigError(f"{path}: cannot parse number {num!r}")


@dataclass(frozen=True)
class GridSpec:
    """Domain extents and resolution (SI)."""

    dimension: int
    x_min: float
    x_max: float
    nx: int
    height: float = 1.0     # transverse strip extent for 1D runs
    y_min: float = None
    y_max: float = None
    ny: int = None


@dataclass(frozen=True)
class SourceRegion:
    """Axis-aligned box with normalized source rates (1/s)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    f_h_norm: float
    f_w_norm: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSpec
    medium: MediumParams
    fluid: FluidParams
    boundaries: tuple            # ((side, condition), ...) sorted by side
    sources: tuple               # SourceRegion entries
    initial_p: float
    initial_X: float
    t_end: float
    output_times: tuple
    newton: NewtonOptions
    timestep: TimeStepControl
    use_printed_krl: bool = False
    no_capillarity: bool = False
    gravity_on: bool = False
    gravity: tuple = (0.0, -9.81)

    def __post_init__(self):
        times = self.output_times
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ConfigError("output times must be sorted strictly ascending")
        if times and times[-1] > self.t_end:
            raise ConfigError("output times must not exceed t_end")


_TABLE1_MEDIUM = dict(k=5e-20, phi=0.15, P_r=2e6, n=1.49, S_lr=0.4, S_gr=0.0)
_TABLE1_FLUID = dict(mu_l=1e-3, mu_g=9e-6, D_l_h=3e-9, M_w=1e-2, M_h=2e-3,
                     rho_l_std=1e3, rho_g_std=8e-2, H=7.65e-6, T=303.0)


def preset(case_id: int) -> ScenarioConfig:
    """Built-in benchmark scenarios (1: strip injection, 2: square source)."""
    medium = MediumParams(**_TABLE1_MEDIUM)
    fluid = FluidParams(**_TABLE1_FLUID)
    if case_id == 1:
        return ScenarioConfig(
            grid=GridSpec(dimension=1, x_min=0.0, x_max=200.0, nx=200,
                          height=20.0),
            medium=medium,
            fluid=fluid,
            boundaries=(
                ("left", InflowGas(q_norm=1.5e-5 / YEAR)),
                ("right", OutflowDirichlet(p_l_out=1e6, X_out=0.0)),
            ),
            sources=(),
            initial_p=1e6,
            initial_X=0.0,
            t_end=1e6 * YEAR,
            output_times=tuple(t * YEAR for t in
                               (1e4, 2.5e4, 5e4, 1.1e5, 2.5e5, 5e5)),
            newton=NewtonOptions(abs_tol=1e-10),
            timestep=TimeStepControl(dt_init=10 * YEAR, dt_min=1e-3 * YEAR,
                                     dt_max=1e4 * YEAR),
        )
    if case_id == 2:
        rho_g_std = _TABLE1_FLUID["rho_g_std"]
        return ScenarioConfig(
            grid=GridSpec(dimension=2, x_min=0.0, x_max=200.0, nx=100,
                          y_min=-100.0, y_max=100.0, ny=100),
            medium=medium,
            fluid=fluid,
            boundaries=(
                ("bottom", OutflowDirichlet(p_l_out=1e6, X_out=0.0)),
                ("left", OutflowDirichlet(p_l_out=1e6, X_out=0.0)),
                ("right", OutflowDirichlet(p_l_out=1e6, X_out=0.0)),
                ("top", OutflowDirichlet(p_l_out=1e6, X_out=0.0)),
            ),
            sources=(SourceRegion(x_min=90.0, x_max=110.0, y_min=-10.0,
                                  y_max=10.0, f_h_norm=8e-13 / rho_g_std),),
            initial_p=1e6,
            initial_X=0.0,
            t_end=2e5 * YEAR,
            output_times=tuple(t * YEAR for t in
                               (50.1, 125.0, 355.0, 2820.0, 2e4, 1e5)),
            # the expanding 2D gas front crosses many cells per step; give
            # the semi-smooth iteration room before the controller cuts dt
            newton=NewtonOptions(abs_tol=1e-10, max_iter=25),
            timestep=TimeStepControl(dt_init=0.1 * YEAR, dt_min=1e-4 * YEAR,
                                     dt_max=2e3 * YEAR),
        )
    raise ConfigError(f"unknown preset case id {case_id!r} (use 1 or 2)")


# ---------------------------------------------------------------------------
# config text parsing / serialization


def _need(tree, key, path):
    if key not in tree:
        raise ConfigError(f"{path}: missing key {key!r}")
    return tree[key]


def _parse_boundary(node, path):
    kind = _need(node, "type", path)
    if kind == "impervious":
        return Impervious()
    if kind == "inflow_gas":
        return InflowGas(q_norm=_parse_quantity(_need(node, "rate", path),
                                                "velocity", f"{path}.rate"))
    if kind == "outflow_dirichlet":
        return OutflowDirichlet(
            p_l_out=_parse_quantity(_need(node, "pressure", path), "pressure",
                                    f"{path}.pressure"),
            X_out=_parse_quantity(_need(node, "X", path), "dimensionless",
                                  f"{path}.X"))
    raise ConfigError(f"{path}: unknown boundary type {kind!r}")


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse a YAML config with unit-suffixed quantities into SI form."""
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}")
    if not isinstance(tree, dict):
        raise ConfigError("config must be a key tree")

    q = _parse_quantity
    g = _need(tree, "grid", "config")
    dim = int(_need(g, "dimension", "grid"))
    grid = GridSpec(
        dimension=dim,
        x_min=q(_need(g, "x_min", "grid"), "length", "grid.x_min"),
        x_max=q(_need(g, "x_max", "grid"), "length", "grid.x_max"),
        nx=int(_need(g, "nx", "grid")),
        height=(q(g["height"], "length", "grid.height")
                if "height" in g else 1.0),
        y_min=(q(g["y_min"], "length", "grid.y_min") if dim == 2 else None),
        y_max=(q(g["y_max"], "length", "grid.y_max") if dim == 2 else None),
        ny=(int(_need(g, "ny", "grid")) if dim == 2 else None),
    )

    mnode = _need(tree, "medium", "config")
    try:
        medium = MediumParams(
            k=q(_need(mnode, "permeability", "medium"), "area",
                "medium.permeability"),
            phi=q(_need(mnode, "porosity", "medium"), "dimensionless",
                  "medium.porosity"),
            P_r=q(_need(mnode, "vg_pressure", "medium"), "pressure",
                  "medium.vg_pressure"),
            n=q(_need(mnode, "vg_n", "medium"), "dimensionless", "medium.vg_n"),
            S_lr=q(_need(mnode, "residual_liquid_saturation", "medium"),
                   "dimensionless", "medium.residual_liquid_saturation"),
            S_gr=q(mnode.get("residual_gas_saturation", 0.0), "dimensionless",
                   "medium.residual_gas_saturation"),
        )
    except ValueError as exc:
        raise ConfigError(f"medium: {exc}")

    fnode = _need(tree, "fluid", "config")
    try:
        fluid = FluidParams(
            mu_l=q(_need(fnode, "viscosity_liquid", "fluid"), "viscosity",
                   "fluid.viscosity_liquid"),
            mu_g=q(_need(fnode, "viscosity_gas", "fluid"), "viscosity",
                   "fluid.viscosity_gas"),
            D_l_h=q(_need(fnode, "diffusion_h2_liquid", "fluid"), "diffusivity",
                    "fluid.diffusion_h2_liquid"),
            M_w=q(_need(fnode, "molar_mass_water", "fluid"), "molar_mass",
                  "fluid.molar_mass_water"),
            M_h=q(_need(fnode, "molar_mass_h2", "fluid"), "molar_mass",
                  "fluid.molar_mass_h2"),
            rho_l_std=q(_need(fnode, "density_liquid_std", "fluid"), "density",
                        "fluid.density_liquid_std"),
            rho_g_std=q(_need(fnode, "density_gas_std", "fluid"), "density",
                        "fluid.density_gas_std"),
            H=q(_need(fnode, "henry_constant", "fluid"), "henry",
                "fluid.henry_constant"),
            T=q(_need(fnode, "temperature", "fluid"), "temperature",
                "fluid.temperature"),
        )
    except ValueError as exc:
        raise ConfigError(f"fluid: {exc}")

    bnode = _need(tree, "boundaries", "config")
    boundaries = tuple(sorted(
        (side, _parse_boundary(node, f"boundaries.{side}"))
        for side, node in bnode.items()))

    rho_g_std = fluid.rho_g_std
    rho_l_std = fluid.rho_l_std
    sources = []
    for i, snode in enumerate(tree.get("sources", []) or []):
        path = f"sources[{i}]"
        region = _need(snode, "region", path)
        sources.append(SourceRegion(
            x_min=q(_need(region, "x_min", path), "length", f"{path}.x_min"),
            x_max=q(_need(region, "x_max", path), "length", f"{path}.x_max"),
            y_min=q(region.get("y_min", "-1e30 m"), "length", f"{path}.y_min"),
            y_max=q(region.get("y_max", "1e30 m"), "length", f"{path}.y_max"),
            f_h_norm=q(snode.get("rate_h2", "0 kg/m^3/s"), "mass_rate_density",
                       f"{path}.rate_h2") / rho_g_std,
            f_w_norm=q(snode.get("rate_water", "0 kg/m^3/s"),
                       "mass_rate_density", f"{path}.rate_water") / rho_l_std,
        ))

    inode = _need(tree, "initial", "config")
    tnode = _need(tree, "time", "config")
    out_times = tuple(q(v, "time", f"time.output_times[{i}]")
                      for i, v in enumerate(tnode.get("output_times", []) or []))

    sol = tree.get("solver", {}) or {}
    nnode = sol.get("newton", {}) or {}
    newton = NewtonOptions(
        abs_tol=q(nnode.get("abs_tol", 1e-9), "dimensionless", "newton.abs_tol"),
        rel_tol=q(nnode.get("rel_tol", 1e-10), "dimensionless", "newton.rel_tol"),
        max_iter=int(nnode.get("max_iter", 12)),
        fd_eps=q(nnode.get("fd_eps", 1e-7), "dimensionless", "newton.fd_eps"),
        damping=q(nnode.get("damping", 0.5), "dimensionless", "newton.damping"),
    )
    dnode = sol.get("timestep", {}) or {}
    timestep = TimeStepControl(
        dt_init=q(_need(dnode, "dt_init", "solver.timestep"), "time",
                  "timestep.dt_init"),
        dt_min=q(_need(dnode, "dt_min", "solver.timestep"), "time",
                 "timestep.dt_min"),
        dt_max=q(_need(dnode, "dt_max", "solver.timestep"), "time",
                 "timestep.dt_max"),
        grow_factor=q(dnode.get("grow_factor", 1.5), "dimensionless",
                      "timestep.grow_factor"),
        cut_factor=q(dnode.get("cut_factor", 0.5), "dimensionless",
                     "timestep.cut_factor"),
        target_newton_iters=int(dnode.get("target_newton_iters", 6)),
    )

    flags = tree.get("flags", {}) or {}
    gravity = tree.get("gravity")
    gravity = (tuple(q(v, "acceleration", f"gravity[{i}]")
                     for i, v in enumerate(gravity))
               if gravity is not None else (0.0, -9.81))

    return ScenarioConfig(
        grid=grid, medium=medium, fluid=fluid, boundaries=boundaries,
        sources=tuple(sources),
        initial_p=q(_need(inode, "pressure", "initial"), "pressure",
                    "initial.pressure"),
        initial_X=q(_need(inode, "X", "initial"), "dimensionless", "initial.X"),
        t_end=q(_need(tnode, "t_end", "time"), "time", "time.t_end"),
        output_times=out_times,
        newton=newton, timestep=timestep,
        use_printed_krl=bool(flags.get("use_printed_krl", False)),
        no_capillarity=bool(flags.get("no_capillarity", False)),
        gravity_on=bool(flags.get("gravity_on", False)),
        gravity=gravity,
    )


def _fmt(value, unit):
    return f"{value!r} {unit}"


def config_to_text(config: ScenarioConfig) -> str:
    """Serialize to the YAML form (SI units); parses back to an equal config."""
    g = config.grid
    gnode = {"dimension": g.dimension, "x_min": _fmt(g.x_min, "m"),
             "x_max": _fmt(g.x_max, "m"), "nx": g.nx,
             "height": _fmt(g.height, "m")}
    if g.dimension == 2:
        gnode.update({"y_min": _fmt(g.y_min, "m"), "y_max": _fmt(g.y_max, "m"),
                      "ny": g.ny})
    m, f = config.medium, config.fluid
    bnode = {}
    for side, cond in config.boundaries:
        if isinstance(cond, Impervious):
            bnode[side] = {"type": "impervious"}
        elif isinstance(cond, InflowGas):
            bnode[side] = {"type": "inflow_gas", "rate": _fmt(cond.q_norm, "m/s")}
        else:
            bnode[side] = {"type": "outflow_dirichlet",
                           "pressure": _fmt(cond.p_l_out, "Pa"),
                           "X": cond.X_out}
    snodes = [{"region": {"x_min": _fmt(s.x_min, "m"), "x_max": _fmt(s.x_max, "m"),
                          "y_min": _fmt(s.y_min, "m"), "y_max": _fmt(s.y_max, "m")},
               "rate_h2": _fmt(s.f_h_norm * f.rho_g_std, "kg/m^3/s"),
               "rate_water": _fmt(s.f_w_norm * f.rho_l_std, "kg/m^3/s")}
              for s in config.sources]
    tree = {
        "grid": gnode,
        "medium": {"permeability": _fmt(m.k, "m^2"), "porosity": m.phi,
                   "vg_pressure": _fmt(m.P_r, "Pa"), "vg_n": m.n,
                   "residual_liquid_saturation": m.S_lr,
                   "residual_gas_saturation": m.S_gr},
        "fluid": {"viscosity_liquid": _fmt(f.mu_l, "Pa.s"),
                  "viscosity_gas": _fmt(f.mu_g, "Pa.s"),
                  "diffusion_h2_liquid": _fmt(f.D_l_h, "m^2/s"),
                  "molar_mass_water": _fmt(f.M_w, "kg/mol"),
                  "molar_mass_h2": _fmt(f.M_h, "kg/mol"),
                  "density_liquid_std": _fmt(f.rho_l_std, "kg/m^3"),
                  "density_gas_std": _fmt(f.rho_g_std, "kg/m^3"),
                  "henry_constant": _fmt(f.H, "mol/Pa/m^3"),
                  "temperature": _fmt(f.T, "K")},
        "boundaries": bnode,
        "sources": snodes,
        "initial": {"pressure": _fmt(config.initial_p, "Pa"),
                    "X": config.initial_X},
        "time": {"t_end": _fmt(config.t_end, "s"),
                 "output_times": [_fmt(t, "s") for t in config.output_times]},
        "solver": {
            "newton": {"abs_tol": config.newton.abs_tol,
                       "rel_tol": config.newton.rel_tol,
                       "max_iter": config.newton.max_iter,
                       "fd_eps": config.newton.fd_eps,
                       "damping": config.newton.damping},
            "timestep": {"dt_init": _fmt(config.timestep.dt_init, "s"),
                         "dt_min": _fmt(config.timestep.dt_min, "s"),
                         "dt_max": _fmt(config.timestep.dt_max, "s"),
                         "grow_factor": config.timestep.grow_factor,
                         "cut_factor": config.timestep.cut_factor,
                         "target_newton_iters":
                             config.timestep.target_newton_iters}},
        "flags": {"use_printed_krl": config.use_printed_krl,
                  "no_capillarity": config.no_capillarity,
                  "gravity_on": config.gravity_on},
        "gravity": [_fmt(v, "m/s^2") for v in config.gravity],
    }
    return yaml.safe_dump(tree, sort_keys=False)


def load_config(path) -> ScenarioConfig:
    with open(path, "r") as fh:
        return parse_config_text(fh.read())


# ---------------------------------------------------------------------------
# scenario -> problem


def build_problem(config: ScenarioConfig):
    """Instantiate (FlowProblem, p0, X0) from a scenario config."""
    g = config.grid
    if g.dimension == 1:
        grid = StructuredGrid.make_1d(g.x_min, g.x_max, g.nx, height=g.height)
    else:
        grid = StructuredGrid.make_2d(g.x_min, g.x_max, g.y_min, g.y_max,
                                      g.nx, g.ny)

    medium = config.medium
    if config.no_capillarity:
        medium = replace(medium, P_r=0.0)

    g_vec = tuple(config.gravity) if config.gravity_on else (0.0, 0.0)
    fluid = replace(config.fluid, g_vec=g_vec)
    consts = derived_constants(fluid)

    sources = SourceField.zeros(grid.ncells)
    for s in config.sources:
        inside = ((grid.cell_x >= s.x_min) & (grid.cell_x <= s.x_max)
                  & (grid.cell_y >= s.y_min) & (grid.cell_y <= s.y_max))
        if not inside.any():
            raise ConfigError("source region contains no cells")
        sources.f_h_norm[inside] += s.f_h_norm
        sources.f_w_norm[inside] += s.f_w_norm

    bc = BoundarySpec(conditions=dict(config.boundaries))
    try:
        bc.validate(grid)
    except ValueError as exc:
        raise ConfigError(str(exc))

    problem = FlowProblem(grid=grid, bc=bc, sources=sources, medium=medium,
                          fluid=fluid, consts=consts,
                          use_printed_krl=config.use_printed_krl)
    p0 = np.full(grid.ncells, config.initial_p)
    X0 = np.full(grid.ncells, config.initial_X)
    return problem, p0, X0


def run_scenario(config: ScenarioConfig):
    """Build and march a scenario; returns (problem, summary, snapshots)."""
    problem, p0, X0 = build_problem(config)
    summary, snapshots = run_simulation(
        problem, p0, X0, config.t_end, config.output_times,
        newton=config.newton, control=config.timestep)
    return problem, summary, snapshots


# ---------------------------------------------------------------------------
# output records


def linecut_table(problem: FlowProblem, snap, consts=None):
    """Line-cut arrays (x, p_l, X, S_g, hydrogen molar density) of a snapshot."""
    cells = problem.grid.linecut_cells()
    consts = consts or problem.consts
    c_h2 = (problem.fluid.rho_g_std / problem.fluid.M_h) * snap["X"]
    return np.column_stack([
        problem.grid.cell_x[cells],
        snap["p_l"][cells],
        snap["X"][cells],
        snap["S_g"][cells],
        c_h2[cells],
    ])


def write_outputs(outdir, problem: FlowProblem, summary: RunSummary, snapshots):
    """One line-cut CSV per output time plus a key=value summary file."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for snap in snapshots:
        t_years = snap["t"] / YEAR
        name = f"linecut_{t_years:g}yr.csv"
        table = linecut_table(problem, snap)
        path = os.path.join(outdir, name)
        np.savetxt(path, table, delimiter=",",
                   header=",".join(LINECUT_COLUMNS), comments="")
        paths.append(path)

    rho = problem.fluid.rho_g_std

    def years_or_none(t):
        return "none" if t is None else repr(t / YEAR)

    lines = [
        f"T1_years={years_or_none(summary.T1)}",
        f"T2_years={years_or_none(summary.T2)}",
        f"T3_years={years_or_none(summary.T3)}",
        f"steps={summary.steps}",
        f"newton_iters_total={summary.newton_iters_total}",
        f"mass_initial_kg={summary.mass_initial * rho!r}",
        f"mass_final_kg={summary.mass_final * rho!r}",
        f"mass_injected_kg={summary.mass_injected * rho!r}",
        f"mass_outflow_kg={summary.mass_outflow * rho!r}",
        f"mass_balance_error_kg={summary.mass_balance_error * rho!r}",
        f"mass_balance_error_rel={summary.mass_balance_error_rel!r}",
    ]
    spath = os.path.join(outdir, "summary.txt")
    with open(spath, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return paths, spath
