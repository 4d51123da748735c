"""
Emission of reports and rendered grids.

JSON is the canonical output; CSV and PGM are projections of the same data.
Payloads never carry wall-clock time; the generation timestamp lives only in
the `<stem>.meta.json` sidecar written next to grid artifacts.
"""

import csv
import sys
import json
import logging
import os
from datetime import datetime
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, TextIO

import numpy as np
from PIL import Image

from dynmand.config import RENDER_PARAMS
from dynmand.mandelbrot import ParamGrid
from dynmand.poly_core import format_fraction
from dynmand.preperiodic import PrepSolution

logger = logging.getLogger(__name__)

GRID_COLUMNS = ["x", "y", "G", "error", "flag"]
PREP_COLUMNS = ["n", "k", "re", "im", "residual"]


def _json_default(obj: Any):
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps(payload: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(payload: Any, path: Optional[str] = None, stream: Optional[TextIO] = None) -> Optional[str]:
    """
    Write a payload as canonical JSON.

    Args:
        payload: A report dict or any object with to_dict()
        path: Destination file; when omitted the text goes to stream

    Returns:
        str: The path written, or None when writing to a stream
    """
    text = dumps(payload)
    if path is None:
        (stream or sys.stdout).write(text)
        return None
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.debug(f"wrote JSON to {path}")
    return path


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(parent):
        os.makedirs(parent)


def grid_payload(grid: ParamGrid, g_cap: Optional[float] = None, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """JSON body of a rendered grid; row 0 is the top row (largest imaginary part)."""
    payload = {
        "window": grid.window(),
        "nx": grid.nx,
        "ny": grid.ny,
        "g_cap": g_cap if g_cap is not None else RENDER_PARAMS["g_cap"],
        "G": grid.values().tolist(),
        "error": grid.errors().tolist(),
        "flag": grid.flags().tolist(),
    }
    if extra:
        payload.update(extra)
    return payload


def grid_rows(grid: ParamGrid) -> List[List[Any]]:
    values, errors, flags = grid.values(), grid.errors(), grid.flags()
    rows = []
    for j in range(grid.ny):
        for i in range(grid.nx):
            z = grid.center(i, j)
            rows.append([repr(z.real), repr(z.imag), repr(float(values[j, i])), repr(float(errors[j, i])), int(flags[j, i])])
    return rows


def grid_pixels(grid: ParamGrid, g_cap: Optional[float] = None) -> np.ndarray:
    """
    8-bit gray levels: pixel = round(255 * min(1, G / g_cap)).

    Inconclusive cells have G within the error bound of 0 and come out black,
    the same as cells inside the set; the flag channel keeps them apart.
    """
    g_cap = g_cap if g_cap is not None else RENDER_PARAMS["g_cap"]
    if g_cap <= 0:
        raise ValueError(f"g_cap must be positive (got {g_cap})")
    values = np.clip(grid.values(), 0.0, None)
    scaled = np.minimum(1.0, values / g_cap)
    return np.rint(255.0 * scaled).astype(np.uint8)


def write_csv(header: List[str], rows: Iterable[List[Any]], path: Optional[str] = None,
              stream: Optional[TextIO] = None) -> Optional[str]:
    if path is None:
        writer = csv.writer(stream or sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return None
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.debug(f"wrote CSV to {path}")
    return path


def prep_solution_rows(solutions: Iterable[PrepSolution]) -> List[List[Any]]:
    return [[s.n, s.k, repr(s.lam.real), repr(s.lam.imag), repr(s.residual)] for s in solutions]


def prep_solutions_csv(solutions: Iterable[PrepSolution], path: Optional[str] = None,
                       stream: Optional[TextIO] = None) -> Optional[str]:
    """CSV projection (n, k, re, im, residual) of a prep_roots solution list."""
    return write_csv(PREP_COLUMNS, prep_solution_rows(solutions), path=path, stream=stream)


class GridExporter:
    """
    Write rendered parameter grids as JSON, CSV and PGM artifacts.
    """

    def __init__(self, output_dir: str = "renders", g_cap: Optional[float] = None, threads: Optional[int] = None):
        """
        Initialize the grid exporter.

        Args:
            output_dir: Directory to write artifacts into
            g_cap: Green value mapped to white in PGM output
            threads: Worker count recorded in the metadata sidecar
        """
        self.output_dir = output_dir
        self.g_cap = g_cap if g_cap is not None else RENDER_PARAMS["g_cap"]
        self.threads = threads or RENDER_PARAMS["threads"]
        if not os.path.exists(output_dir):
            os.makedirs(output_dir)

    def _path(self, stem: str, suffix: str) -> str:
        return os.path.join(self.output_dir, f"{stem}{suffix}")

    def export_json(self, grid: ParamGrid, stem: str, extra: Optional[Dict[str, Any]] = None) -> str:
        path = write_json(grid_payload(grid, self.g_cap, extra), self._path(stem, ".json"))
        self.write_metadata(grid, stem)
        return path

    def export_csv(self, grid: ParamGrid, stem: str) -> str:
        path = write_csv(GRID_COLUMNS, grid_rows(grid), self._path(stem, ".csv"))
        self.write_metadata(grid, stem)
        return path

    def export_pgm(self, grid: ParamGrid, stem: str) -> str:
        """
        Save the grid as a binary (P5) graymap.

        Returns:
            str: Path to the saved file
        """
        path = self._path(stem, ".pgm")
        try:
            Image.fromarray(grid_pixels(grid, self.g_cap), "L").save(path, format="PPM")
        except Exception as e:
            logger.exception(f"Error saving PGM to {path}: {e}")
            raise
        self.write_metadata(grid, stem)
        logger.info(f"saved {grid.nx}x{grid.ny} PGM to {path}")
        return path

    def export(self, grid: ParamGrid, stem: str, fmt: str = "json", extra: Optional[Dict[str, Any]] = None) -> str:
        if fmt == "json":
            return self.export_json(grid, stem, extra)
        if fmt == "csv":
            return self.export_csv(grid, stem)
        if fmt == "pgm":
            return self.export_pgm(grid, stem)
        raise ValueError(f"unknown grid format '{fmt}'")

    def write_metadata(self, grid: ParamGrid, stem: str) -> str:
        """The only artifact carrying a timestamp."""
        meta = {
            "generated_at": datetime.now().isoformat(),
            "g_cap": self.g_cap,
            "pixel_mapping": "round(255*min(1, G/g_cap))",
            "window": grid.window(),
            "nx": grid.nx,
            "ny": grid.ny,
            "threads": self.threads,
        }
        return write_json(meta, self._path(stem, ".meta.json"))
