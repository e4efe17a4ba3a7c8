"""Render line-cut CSV records as one-figure-per-quantity plots.

Consumes the simulator's record schema verbatim: comma-separated columns
x_m, p_l_Pa, X, S_g, c_h2_mol_per_m3 with a one-line header, one file per
output time.  Produces a static figure with one labeled curve per time.
"""

import os
import re
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["QUANTITIES", "FigureSpec", "read_record", "time_from_filename",
           "plot_linecuts"]

# quantity -> (csv column, axis label)
QUANTITIES = {
    "p_l": ("p_l_Pa", "liquid pressure $p_l$ [Pa]"),
    "S_g": ("S_g", "gas saturation $S_g$ [-]"),
    "c_h2": ("c_h2_mol_per_m3",
             "total hydrogen molar density [mol/m$^3$]"),
}

_FILENAME_TIME = re.compile(r"([0-9]+(?:\.[0-9]+)?(?:e[+-]?[0-9]+)?)yr",
                            re.IGNORECASE)


class RecordError(ValueError):
    """A record file is missing, malformed, or inconsistent with the rest."""


@dataclass
class FigureSpec:
    """What to draw: one quantity, several record files with their times."""

    quantity: str                 # one of QUANTITIES
    records: list                 # file paths
    times_years: list             # legend times, one per record
    out_path: str
    overwrite: bool = False
    title: str = ""

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise RecordError(f"unknown quantity {self.quantity!r}; "
                              f"choose from {sorted(QUANTITIES)}")
        if not self.records:
            raise RecordError("no record files given")
        if len(self.records) != len(self.times_years):
            raise RecordError("need exactly one time per record file")


def time_from_filename(path):
    """Extract the output time in years from names like linecut_125yr.csv."""
    m = _FILENAME_TIME.search(os.path.basename(path))
    if not m:
        raise RecordError(f"{path}: cannot infer the output time from the "
                          f"file name; pass times explicitly")
    return float(m.group(1))


def read_record(path):
    """Record file -> dict of named columns."""
    if not os.path.exists(path):
        raise RecordError(f"{path}: no such record file")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise RecordError(f"{path}: cannot parse as CSV ({exc})")
    if data.shape[1] != len(header):
        raise RecordError(f"{path}: {data.shape[1]} columns but "
                          f"{len(header)} header fields")
    return {name: data[:, i] for i, name in enumerate(header)}


def plot_linecuts(spec: FigureSpec) -> str:
    """Write the figure for one quantity; returns the output path."""
    column, ylabel = QUANTITIES[spec.quantity]
    if os.path.exists(spec.out_path) and not spec.overwrite:
        raise RecordError(f"{spec.out_path} exists; pass overwrite/--force "
                          f"to replace it")

    curves = []
    x_ref = None
    for path, t in zip(spec.records, spec.times_years):
        cols = read_record(path)
        if "x_m" not in cols:
            raise RecordError(f"{path}: missing x_m column")
        if column not in cols:
            raise RecordError(f"{path}: missing {column} column")
        if x_ref is None:
            x_ref = cols["x_m"]
            ref_path = path
        elif cols["x_m"].shape != x_ref.shape or \
                not np.allclose(cols["x_m"], x_ref, rtol=1e-12, atol=0.0):
            raise RecordError(f"{path}: x grid differs from {ref_path}")
        curves.append((t, cols[column]))

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for t, y in sorted(curves, key=lambda c: c[0]):
        ax.plot(x_ref, y, label=f"t = {t:g} years")
    ax.set_xlabel("x [m]")
    ax.set_ylabel(ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    # strip volatile metadata so identical inputs give identical bytes
    meta = {"Date": None} if spec.out_path.endswith(".svg") else None
    fig.savefig(spec.out_path, metadata=meta)
    plt.close(fig)
    return spec.out_path
