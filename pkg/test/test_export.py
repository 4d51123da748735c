#!/usr/bin/env python
"""
Tests for JSON, CSV and PGM emission.

Run with:
    python -m unittest test.test_export
"""

import csv
import io
import json
import logging
import os
import shutil
import tempfile
import unittest
from fractions import Fraction

import numpy as np
from PIL import Image

from dynmand.export import (
    GRID_COLUMNS,
    PREP_COLUMNS,
    GridExporter,
    dumps,
    grid_payload,
    grid_pixels,
    prep_solutions_csv,
    write_json,
)
from dynmand.heights import CYCLE, ESCAPED, INCONCLUSIVE, GreenValue
from dynmand.mandelbrot import FLAG_INCONCLUSIVE, FLAG_INSIDE, FLAG_OUTSIDE, ParamGrid
from dynmand.poly_core import RatPoly
from dynmand.preperiodic import PrepSolution

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger("test_export")


def sample_grid():
    """2x3 grid with hand-picked cells."""
    grid = ParamGrid(-1.0, 1.0, -1.0, 1.0, 3, 2)
    grid.cells = [
        GreenValue(0.0, 1e-9, 12, False, CYCLE),
        GreenValue(1.0, 1e-9, 5, True, ESCAPED),
        GreenValue(8.0, 1e-9, 3, True, ESCAPED),
        GreenValue(2.0, 1e-9, 4, True, ESCAPED),
        GreenValue(0.0, 0.5, 100, False, INCONCLUSIVE),
        GreenValue(0.5, 1e-9, 6, True, ESCAPED),
    ]
    return grid


class TestJson(unittest.TestCase):
    def test_canonical_text(self):
        text = dumps({"b": Fraction(1, 3), "a": RatPoly([1, 2]), "c": np.float64(0.5), "z": 1 + 2j})
        self.assertTrue(text.endswith("\n"))
        self.assertLess(text.index('"a"'), text.index('"b"'))
        data = json.loads(text)
        self.assertEqual(data, {"a": ["1", "2"], "b": "1/3", "c": 0.5, "z": {"im": 2.0, "re": 1.0}})
        self.assertIn('\n  "a"', text)

    def test_unknown_type(self):
        with self.assertRaises(TypeError):
            dumps({"x": object()})

    def test_stream_and_file(self):
        stream = io.StringIO()
        self.assertIsNone(write_json({"k": 1}, stream=stream))
        self.assertEqual(json.loads(stream.getvalue()), {"k": 1})

        tmp = tempfile.mkdtemp()
        try:
            path = os.path.join(tmp, "nested", "out.json")
            self.assertEqual(write_json({"k": 2}, path=path), path)
            with open(path) as f:
                self.assertEqual(json.load(f), {"k": 2})
        finally:
            shutil.rmtree(tmp)


class TestGridProjections(unittest.TestCase):
    def test_payload(self):
        payload = grid_payload(sample_grid(), g_cap=4.0, extra={"family": "x^2 + (l)"})
        self.assertEqual(payload["nx"], 3)
        self.assertEqual(payload["ny"], 2)
        self.assertEqual(payload["G"], [[0.0, 1.0, 8.0], [2.0, 0.0, 0.5]])
        self.assertEqual(payload["flag"], [[FLAG_INSIDE, FLAG_OUTSIDE, FLAG_OUTSIDE],
                                           [FLAG_OUTSIDE, FLAG_INCONCLUSIVE, FLAG_OUTSIDE]])
        self.assertEqual(payload["family"], "x^2 + (l)")

    def test_pixels(self):
        pixels = grid_pixels(sample_grid(), g_cap=4.0)
        self.assertEqual(pixels.dtype, np.uint8)
        np.testing.assert_array_equal(pixels, [[0, 64, 255], [128, 0, 32]])
        with self.assertRaises(ValueError):
            grid_pixels(sample_grid(), g_cap=0)

    def test_prep_csv(self):
        solutions = [
            PrepSolution(1, 0, 0j, 0.0, 2, 0.0, True),
            PrepSolution(2, 1, complex(-2, 0), 1e-30, 1, 1e-40, True),
        ]
        stream = io.StringIO()
        prep_solutions_csv(solutions, stream=stream)
        rows = list(csv.reader(io.StringIO(stream.getvalue())))
        self.assertEqual(rows[0], PREP_COLUMNS)
        self.assertEqual(rows[2][:4], ["2", "1", "-2.0", "0.0"])
        self.assertEqual(float(rows[2][4]), 1e-30)


class TestGridExporter(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.exporter = GridExporter(os.path.join(self.tmp, "renders"), g_cap=4.0, threads=2)

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_pgm_round_trip(self):
        path = self.exporter.export(sample_grid(), "grid", "pgm")
        with open(path, "rb") as f:
            self.assertEqual(f.read(2), b"P5")
        with Image.open(path) as img:
            self.assertEqual(img.size, (3, 2))
            self.assertEqual(img.mode, "L")
            np.testing.assert_array_equal(np.array(img), [[0, 64, 255], [128, 0, 32]])

    def test_csv_columns(self):
        path = self.exporter.export(sample_grid(), "grid", "csv")
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], GRID_COLUMNS)
        self.assertEqual(len(rows), 7)
        # first data row is the top-left cell center
        x, y, g = (float(v) for v in rows[1][:3])
        self.assertAlmostEqual(x, -2.0 / 3)
        self.assertEqual((y, g), (0.5, 0.0))

    def test_metadata_sidecar(self):
        self.exporter.export(sample_grid(), "grid", "json", extra={"c": "l"})
        meta_path = os.path.join(self.tmp, "renders", "grid.meta.json")
        with open(meta_path) as f:
            meta = json.load(f)
        self.assertIn("generated_at", meta)
        self.assertEqual(meta["threads"], 2)
        self.assertEqual(meta["pixel_mapping"], "round(255*min(1, G/g_cap))")
        with open(os.path.join(self.tmp, "renders", "grid.json")) as f:
            body = json.load(f)
        self.assertNotIn("generated_at", body)
        self.assertEqual(body["c"], "l")

    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            self.exporter.export(sample_grid(), "grid", "png")


if __name__ == "__main__":
    unittest.main()
