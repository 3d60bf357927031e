"""
Tests for benchmarking.microbench. MAC columns only: timings are never asserted.
Run: pytest tests/test_bench.py
"""

import pytest

from benchmarking.microbench import BENCH_COLUMNS, MicroBench, Variant, parse_variant, parse_variants
from kernels.geometry import ConvGeometry
from utils.validation import ValidationError


@pytest.mark.parametrize("text, expected", [
    ("standard", Variant("standard")),
    ("hetconv:4", Variant("hetconv", 4)),
    (" dwc_pwc ", Variant("dwc_pwc")),
    ("gwc_pwc:2", Variant("gwc_pwc", 2)),
])
def test_parse_variant(text, expected):
    assert parse_variant(text) == expected


@pytest.mark.parametrize("text", ["winograd", "hetconv", "standard:2", "gwc_pwc:0"])
def test_parse_variant_rejects(text):
    with pytest.raises(ValidationError):
        parse_variant(text)


def test_parse_variants_labels():
    labels = [v.label for v in parse_variants("standard,hetconv:4,dwc_pwc,gwc_pwc:4")]
    assert labels == ["standard", "hetconv:4", "dwc_pwc", "gwc_pwc:4"]


@pytest.fixture(scope="module")
def table():
    bench = MicroBench(ConvGeometry(8, 8, 3, 1, 1), input_size=8, repetitions=2, seed=0)
    return bench.run(["standard", "hetconv:4", "hetconv:3", "dwc_pwc", "gwc_pwc:4"]).set_index("variant")


def test_columns(table):
    assert ["variant", *table.columns] == BENCH_COLUMNS


def test_mac_ratios_match_closed_forms(table):
    assert table.loc["standard", "mac_ratio"] == 1.0
    assert table.loc["hetconv:4", "mac_ratio"] == 0.3333
    assert table.loc["hetconv:4", "macs"] == 64 * 8 * (2 * 9 + 6)
    for variant in ("standard", "hetconv:4", "dwc_pwc", "gwc_pwc:4"):
        assert table.loc[variant, "matches_closed_form"]


def test_latency_units(table):
    assert table.loc["hetconv:4", "latency"] == 0
    assert table.loc["dwc_pwc", "latency"] == 1
    assert table.loc["gwc_pwc:4", "latency"] == 1


def test_invalid_variant_is_skipped(table):
    status = table.loc["hetconv:3", "status"]
    assert status.startswith("skipped:") and "3 does not divide 8" in status
    assert table.loc["standard", "status"] == "ok"


def test_timing_columns(table):
    assert table.loc["standard", "mean_ms"] >= 0
    assert table.loc["standard", "ci95_ms"] >= 0


def test_no_timing_is_deterministic():
    def run():
        bench = MicroBench(ConvGeometry(4, 6, 3, 2, 1), input_size=7, seed=5, batch=2)
        return bench.run(["standard", "hetconv:2", "dwc_pwc"], timing=False)
    first, second = run(), run()
    assert first.equals(second)
    assert first["mean_ms"].isna().all()
