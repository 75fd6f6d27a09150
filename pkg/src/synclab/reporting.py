"""Deterministic result files.

Every output file begins with one comment line carrying the tool version,
the configuration hash and the master seed.  Floats are written with
shortest round-trip repr and JSON bodies with sorted keys, so a rerun of
the same configuration and seed produces byte-identical files.  No
timestamps, hostnames or other environment leakage belong in outputs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from . import __version__


def header_line(config_hash: str, master_seed: int) -> str:
    return f"# synclab {__version__} config_sha256={config_hash} master_seed={master_seed}"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_rows_csv(path: Path, columns, rows, config_hash: str, master_seed: int) -> None:
    lines = [header_line(config_hash, master_seed), ",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return repr(obj)
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _jsonable(obj.item())
    return obj


def write_summary(path: Path, summary: dict, config_hash: str, master_seed: int) -> None:
    body = json.dumps(_jsonable(summary), sort_keys=True, indent=2)
    Path(path).write_text(header_line(config_hash, master_seed) + "\n" + body + "\n")


def write_plot_data(path: Path, triples, config_hash: str, master_seed: int) -> None:
    lines = [header_line(config_hash, master_seed), "x,y,err"]
    for x, y, err in triples:
        lines.append(",".join(_cell(float(v)) for v in (x, y, err)))
    Path(path).write_text("\n".join(lines) + "\n")


def write_text(path: Path, text: str, config_hash: str, master_seed: int) -> None:
    Path(path).write_text(header_line(config_hash, master_seed) + "\n" + text + "\n")


def write_cartesian_trajectory(path: Path, dt: float, history, labels,
                               config_hash: str, master_seed: int) -> None:
    """history: (n_steps+1, n_points, d) array from a recorded run; one
    row per (time, point)."""
    import numpy as np

    history = np.asarray(history)
    d = history.shape[2]
    columns = ["t", "point_id"] + [f"x{j + 1}" for j in range(d)]
    lines = [header_line(config_hash, master_seed), ",".join(columns)]
    for k in range(history.shape[0]):
        t = k * dt
        for i in range(history.shape[1]):
            cells = [repr(float(t)), str(labels[i])]
            cells += [repr(float(v)) for v in history[k, i]]
            lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_polar_trajectory(path: Path, dt: float, r_sq, phi, z,
                           config_hash: str, master_seed: int) -> None:
    """Accelerated-clock polar/circle trace: columns t, r_sq, phi, z."""
    lines = [header_line(config_hash, master_seed), "t,r_sq,phi,z"]
    for k in range(len(r_sq)):
        lines.append(",".join(repr(float(v))
                              for v in (k * dt, r_sq[k], phi[k], z[k])))
    Path(path).write_text("\n".join(lines) + "\n")
