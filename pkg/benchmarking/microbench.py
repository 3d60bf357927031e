# benchmarking/microbench.py
"""
Wall-clock + MAC-count microbenchmarks of one layer geometry across conv variants.

Usage:
    from benchmarking.microbench import MicroBench

    bench = MicroBench(ConvGeometry(64, 64, 3, 1, 1), input_size=32, repetitions=5, seed=0)
    table = bench.run(["standard", "hetconv:4", "dwc_pwc", "gwc_pwc:4"])

Timings are reported, never gated: the kernels are straightforward numpy and need not
realise the theoretical speedup. The MAC columns are exact.
"""

import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from scipy import stats

from analyzer import cost_model as cm
from core.tensor import Rng, random_uniform
from kernels import conv
from kernels.filter_banks import DenseFilterBank, HetConvFilterBank
from kernels.geometry import ConvGeometry, MulCounter
from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("MicroBench")

VARIANT_KINDS = ("standard", "hetconv", "dwc_pwc", "gwc_pwc")
BENCH_COLUMNS = ["variant", "status", "mean_ms", "std_ms", "ci95_ms", "macs",
                 "mac_ratio", "predicted_ratio", "matches_closed_form", "latency"]


@dataclass(frozen=True)
class Variant:
    kind: str
    value: int = 1        # P for hetconv, G for gwc_pwc

    @property
    def label(self) -> str:
        return self.kind if self.kind in ("standard", "dwc_pwc") else f"{self.kind}:{self.value}"


def parse_variant(text: str) -> Variant:
    """"standard", "hetconv:4", "dwc_pwc", "gwc_pwc:4" """
    kind, _, value = text.strip().partition(":")
    if kind not in VARIANT_KINDS:
        raise ValidationError(f"unknown variant '{kind}'; choose from {', '.join(VARIANT_KINDS)}")
    if kind in ("hetconv", "gwc_pwc"):
        if not value:
            raise ValidationError(f"variant '{kind}' needs a value, e.g. {kind}:4")
        return Variant(kind, Sanitizer.sanitize_count(value, "part" if kind == "hetconv" else "groups"))
    if value:
        raise ValidationError(f"variant '{kind}' takes no value")
    return Variant(kind)


def parse_variants(text: str) -> List[Variant]:
    items = [item for item in text.split(",") if item.strip()]
    if not items:
        raise ValidationError("variant list must not be empty")
    return [parse_variant(item) for item in items]


class MicroBench:
    """
    Times each variant of one layer and counts its multiplications

    Metrics per variant:
    - mean / std / 95% t-interval half-width of wall time (ms)
    - exact MACs per forward pass and their ratio to the standard conv
    - closed-form reduction the ratio must equal
    - latency units (extra sequential stages)
    """

    def __init__(self, geometry: ConvGeometry, input_size: int, repetitions: int = 5,
                 seed: int = 0, batch: int = 1):
        self.geometry = geometry
        self.input_size = Sanitizer.sanitize_count(input_size, "input_size")
        self.repetitions = Sanitizer.sanitize_count(repetitions, "repetitions")
        self.batch = Sanitizer.sanitize_count(batch, "batch")
        self.seed = Sanitizer.sanitize_seed(seed)
        rng = Rng(self.seed)
        self.x = random_uniform((self.batch, geometry.in_channels, self.input_size, self.input_size), rng)
        self.d_out, self.d_out_w = geometry.output_size(self.input_size, self.input_size)
        logger.info(f"MicroBench M={geometry.in_channels} N={geometry.out_channels} K={geometry.kernel} "
                    f"input {self.input_size}px, {self.repetitions} reps")

    def _cost_input(self, part: int = 1, groups: int = 1) -> cm.LayerCostInput:
        g = self.geometry
        return cm.LayerCostInput(self.d_out, g.in_channels, g.out_channels, g.kernel,
                                 part=part, groups=groups, d_out_w=self.d_out_w)

    def _prepare(self, variant: Variant, rng: Rng) -> Callable[[Optional[MulCounter]], object]:
        """Build weights once; the returned closure runs the forward pass"""
        g, x = self.geometry, self.x
        if variant.kind == "standard":
            bank = DenseFilterBank.random(g, rng)
            return lambda counter: conv.conv2d_forward(x, bank, counter)
        if variant.kind == "hetconv":
            bank = HetConvFilterBank.random(g, variant.value, rng)
            return lambda counter: conv.hetconv_forward(x, bank, counter)

        m, n, k = g.in_channels, g.out_channels, g.kernel
        pw = rng.normal_array((n, m), np.sqrt(2.0 / m))
        if variant.kind == "dwc_pwc":
            dw = rng.normal_array((m, k, k), np.sqrt(2.0 / (k * k)))

            def run(counter):
                y = conv.dwc_forward(x, dw, counter, g.stride, g.padding)
                return conv.pwc_forward(y, pw, counter)
            return run

        groups = Sanitizer.sanitize_groups(variant.value, m, m)
        gw = rng.normal_array((m, m // groups, k, k), np.sqrt(2.0 * groups / (m * k * k)))

        def run(counter):
            y = conv.gwc_forward(x, groups, gw, counter, g.stride, g.padding)
            return conv.pwc_forward(y, pw, counter)
        return run

    def _predicted(self, variant: Variant) -> Fraction:
        k = self.geometry.kernel
        if variant.kind == "standard":
            return Fraction(1)
        if variant.kind == "hetconv":
            return cm.reduction_hetconv(variant.value, k)
        if variant.kind == "dwc_pwc":
            return cm.reduction_mobnet(self.geometry.out_channels, k)
        return cm.reduction_group(variant.value, k)

    def _time(self, run: Callable) -> np.ndarray:
        run(None)  # warm-up
        samples = []
        for _ in range(self.repetitions):
            t0 = time.perf_counter()
            run(None)
            samples.append((time.perf_counter() - t0) * 1000.0)
        return np.array(samples)

    @staticmethod
    def _summarize(samples: np.ndarray) -> Dict[str, float]:
        mean = float(samples.mean())
        if len(samples) < 2:
            return {"mean_ms": mean, "std_ms": 0.0, "ci95_ms": 0.0}
        std = float(samples.std(ddof=1))
        half = float(stats.t.ppf(0.975, len(samples) - 1) * std / np.sqrt(len(samples)))
        return {"mean_ms": mean, "std_ms": std, "ci95_ms": half}

    def run(self, variants: List, timing: bool = True) -> pd.DataFrame:
        """
        One row per variant. A variant whose geometry is invalid (e.g. P does not divide M)
        is kept with status "skipped: <reason>".
        """
        variants = [parse_variant(v) if isinstance(v, str) else v for v in variants]
        standard_macs = cm.flops_standard(self._cost_input()) * self.batch
        rows = []
        for i, variant in enumerate(variants):
            row = dict.fromkeys(BENCH_COLUMNS)
            row["variant"] = variant.label
            try:
                run = self._prepare(variant, Rng(self.seed).spawn(i + 1))
            except ValidationError as e:
                row["status"] = f"skipped: {e}"
                logger.warning(f"{variant.label} skipped: {e}")
                rows.append(row)
                continue

            counter = MulCounter()
            run(counter)
            ratio = Fraction(counter.count, standard_macs)
            predicted = self._predicted(variant)
            row.update({
                "status": "ok",
                "macs": counter.count,
                "mac_ratio": round(float(ratio), 4),
                "predicted_ratio": round(float(predicted), 4),
                "matches_closed_form": ratio == predicted,
                "latency": 0 if variant.kind in ("standard", "hetconv") else 1,
            })
            if timing:
                row.update({k: round(v, 4) for k, v in self._summarize(self._time(run)).items()})
            rows.append(row)
            logger.info(f"{variant.label}: {counter.count:,} MACs (ratio {float(ratio):.4f})")
        return pd.DataFrame(rows, columns=BENCH_COLUMNS)
