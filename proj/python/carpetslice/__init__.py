"""Python access to the carpetslice library.

Exact rationals are exchanged as ``fractions.Fraction``; experiment results come
back as parsed JSON plus the CSV table text.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from ._core import (
    Carpet,
    SpecError,
    approximate_square_count as _approximate_square_count,
    closed_form_matches as _closed_form_matches,
    cover_inclusion_swap,
    dims,
    line_cell_count as _line_cell_count,
    normalize_spec_text,
    r_k as _r_k,
    run_spec_text,
)

__all__ = [
    "Carpet",
    "SpecError",
    "approximate_square_count",
    "closed_form_matches",
    "cover_inclusion_swap",
    "dims",
    "line_cell_count",
    "r_k",
    "run_spec",
    "normalize_spec",
]


def _q(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def approximate_square_count(carpet: Carpet, k: int) -> int:
    return int(_approximate_square_count(carpet, k))


def line_cell_count(carpet: Carpet, slope, intercept, k: int) -> tuple[int, int]:
    lo, hi = _line_cell_count(carpet, _q(slope), _q(intercept), k)
    return int(lo), int(hi)


def r_k(m1: int, m2: int, t, k: int) -> int:
    return _r_k(m1, m2, _q(t), k)


def closed_form_matches(m1: int, m2: int, z, t, k: int) -> bool:
    return _closed_form_matches(m1, m2, _q(z[0]), _q(z[1]), _q(t), k)


def run_spec(path, workers: int = 1) -> dict:
    """Runs a spec file; returns verdict, exit code, result document and CSV text."""
    path = Path(path)
    verdict, result, csv, code = run_spec_text(path.read_text(), str(path.parent), workers)
    return {"verdict": verdict, "exit_code": code, "result": json.loads(result), "csv": csv}


def normalize_spec(path) -> dict:
    path = Path(path)
    return json.loads(normalize_spec_text(path.read_text(), str(path.parent)))
