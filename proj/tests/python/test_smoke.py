from fractions import Fraction
from pathlib import Path

import pytest

import carpetslice as cs

DATA = Path(__file__).resolve().parents[2] / "data"


def carpet_F():
    return cs.Carpet(3, 2, [(0, 0), (0, 1), (2, 0)])


def test_dims_exact():
    d = cs.dims(carpet_F())
    assert d["dim_star"]["exact"] == "1 + log(2)/log(3)"
    assert Fraction(d["dim_star"]["lo"]) <= Fraction(d["dim_star"]["hi"])
    e = cs.Carpet.from_text((DATA / "carpet_E.json").read_text())
    assert cs.dims(e)["dim_star"]["exact"] == "2"


def test_carpet_text_round_trip():
    c = carpet_F()
    assert cs.Carpet.from_text(c.to_text()) == c
    assert c.digits == [(0, 0), (0, 1), (2, 0)]
    with pytest.raises(ValueError):
        cs.Carpet(3, 2, [(0, 0), (0, 1)])


def test_counts_and_rotation():
    # |Gamma|^l R^(k-l) with l = floor(k log 2 / log 3)
    assert cs.approximate_square_count(carpet_F(), 2) == 3 * 2
    lo, hi = cs.line_cell_count(carpet_F(), 1, 0, 6)
    assert 0 < lo <= hi
    assert cs.r_k(3, 2, 0, 5) == 3
    assert cs.closed_form_matches(3, 2, (Fraction(1, 7), Fraction(1, 3)), Fraction(1, 5), 10)


def test_embedding_pair():
    E = cs.Carpet.from_text((DATA / "carpet_E.json").read_text())
    assert cs.cover_inclusion_swap(carpet_F(), E, 4)


def test_run_spec():
    r = cs.run_spec(DATA / "specs" / "dims_F.json")
    assert r["verdict"] == "PASS"
    assert r["exit_code"] == 0
    assert r["result"]["schema_version"] == 1
    assert r["csv"].startswith("# carpetslice kind=dims")
    forced = cs.run_spec(DATA / "specs" / "slice_full_forced.json", workers=2)
    assert forced["exit_code"] == 1


def test_spec_errors():
    with pytest.raises(cs.SpecError):
        cs.normalize_spec_text('{"kind": "dims", "carpet": {"m": 3, "n": 2, "digits": [[3, 0]]}}', "")
