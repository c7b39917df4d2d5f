"""Quick smoke checks of the runners on small configurations."""

import json

from hypothesis import given, settings, strategies as st

import branch_scan
import lemma_ladders
import pohozaev_refinement
import uniqueness
from common import parse


def test_parse_overrides():
    cfg = parse(uniqueness.Config, ["--N", "6", "--eps", "1e-3", "1e-4"])
    assert cfg.N == 6 and cfg.eps == (1e-3, 1e-4) and cfg.s == 2.0


@settings(max_examples=5, deadline=None)
@given(M=st.integers(16, 5000), out=st.text("abc", min_size=1, max_size=5))
def test_parse_roundtrip(M, out):
    cfg = parse(branch_scan.Config, ["--M", str(M), "--out", out])
    assert cfg.M == M and cfg.out == out


def test_branch_scan(tmp_path):
    cfg = branch_scan.Config(cases=("5:2:1e-1:1e-2",), M=400, out=str(tmp_path))
    branch_scan.main(cfg)
    (row,) = json.loads((tmp_path / "summary.json").read_text())
    assert row["kind"] == "power" and abs(row["slope"] / (-2 / 3) - 1) < 0.1


def test_refinement(tmp_path):
    pohozaev_refinement.main(pohozaev_refinement.Config(M0=400, levels=2, out=str(tmp_path)))
    assert (tmp_path / "refinement.csv").read_text().count("\n") == 3


def test_ladders(tmp_path):
    lemma_ladders.main(lemma_ladders.Config(dims=(5,), exponents=(2.0,), out=str(tmp_path)))
    assert (tmp_path / "ladders.csv").exists()


def test_uniqueness(tmp_path):
    uniqueness.main(uniqueness.Config(M=800, eps=(1e-3,), height_factors=(2.0,), out=str(tmp_path)))
    (row,) = json.loads((tmp_path / "probe.json").read_text())
    assert row["same"]
