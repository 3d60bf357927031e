# cli/verify_suite.py
"""
Seeded randomized property suites behind `verify`.

Trial i of every suite draws from Rng(seed).spawn(i), so a failure is replayed by
rerunning with the same seed and trial count. Suites:

    oracle        hetconv_forward == conv2d_forward(embed_as_dense(f))
    counts        MulCounter of every kernel == its closed form
    coverage      shifted layout covers every input channel when N >= P
    linearity     hetconv_forward(a*x) == a*hetconv_forward(x) with zero bias
    gradients     hetconv_backward == central differences (input, weights, bias)
    dominance     R_HetConv(P=M) < R_MobNet(N=M) and R_HetConv(P=G) < R_Group(G)
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np
import pandas as pd

from analyzer import cost_model as cm
from core.tensor import Rng, Tensor4, max_abs_diff, random_uniform
from kernels import conv
from kernels.filter_banks import HetConvFilterBank, embed_as_dense
from kernels.geometry import ConvGeometry, MulCounter
from training.gradcheck import check_hetconv_layer

logger = logging.getLogger("Verify")

SUMMARY_COLUMNS = ["property", "trials", "passed", "failed", "max_error"]


def divisors(n: int) -> List[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


@dataclass
class TrialConfig:
    """One randomized layer instance"""

    trial: int
    batch: int
    m: int
    n: int
    part: int
    kernel: int
    stride: int
    padding: int
    size: int

    @property
    def geometry(self) -> ConvGeometry:
        return ConvGeometry(self.m, self.n, self.kernel, self.stride, self.padding)

    def describe(self) -> str:
        return (f"trial={self.trial} B={self.batch} M={self.m} N={self.n} P={self.part} "
                f"K={self.kernel} stride={self.stride} pad={self.padding} size={self.size}")


def draw_config(trial: int, rng: Rng, max_channels: int = 32) -> TrialConfig:
    """M in [2, 32], N in [1, 32], P | M, K in {1,3,5}, stride in {1,2}, pad in {0,1,2}"""
    m = int(rng.integers(2, max_channels + 1))
    n = int(rng.integers(1, max_channels + 1))
    options = divisors(m)
    part = options[int(rng.integers(0, len(options)))]
    kernel = (1, 3, 5)[int(rng.integers(0, 3))]
    stride = int(rng.integers(1, 3))
    padding = int(rng.integers(0, 3))
    smallest = max(1, kernel - 2 * padding)
    size = int(rng.integers(smallest, smallest + 6))
    batch = int(rng.integers(1, 3))
    return TrialConfig(trial, batch, m, n, part, kernel, stride, padding, size)


@dataclass
class PropertyResult:
    name: str
    trials: int = 0
    failed: int = 0
    max_error: float = 0.0
    failures: List[str] = field(default_factory=list)

    def record(self, ok: bool, error: float, describe: Callable[[], str]) -> None:
        self.trials += 1
        self.max_error = max(self.max_error, float(error))
        if not ok:
            self.failed += 1
            self.failures.append(describe())

    @property
    def passed(self) -> int:
        return self.trials - self.failed


class VerifySuite:
    """
    Usage:
        suite = VerifySuite(trials=100, seed=0)
        summary = suite.run()
        ok = suite.ok
    """

    def __init__(self, trials: int = 100, seed: int = 0, gradient_trials: int = 20,
                 oracle_tolerance: float = 1e-10, gradient_tolerance: float = 1e-4,
                 inject_fault: bool = False):
        self.trials = trials
        self.seed = seed
        self.gradient_trials = gradient_trials
        self.oracle_tolerance = oracle_tolerance
        self.gradient_tolerance = gradient_tolerance
        self.inject_fault = inject_fault
        self.results: Dict[str, PropertyResult] = {}

    # -----------------------------------------------------------------------
    # Kernels under test
    # -----------------------------------------------------------------------

    def _hetconv(self, x: Tensor4, bank: HetConvFilterBank, counter=None) -> Tensor4:
        out = conv.hetconv_forward(x, bank, counter)
        if self.inject_fault:
            # negative control: one corrupted element must be caught
            return out.with_value((0, 0, 0, 0), out.get(0, 0, 0, 0) + 1e-6)
        return out

    # -----------------------------------------------------------------------
    # Suites
    # -----------------------------------------------------------------------

    def _layer_suites(self) -> None:
        oracle = PropertyResult("oracle")
        counts = PropertyResult("counts")
        coverage = PropertyResult("coverage")
        linearity = PropertyResult("linearity")
        base = Rng(self.seed)

        for i in range(self.trials):
            rng = base.spawn(i)
            cfg = draw_config(i, rng)
            g = cfg.geometry
            x = random_uniform((cfg.batch, cfg.m, cfg.size, cfg.size), rng)
            bank = HetConvFilterBank.random(g, cfg.part, rng, with_bias=True)
            ho, wo = g.output_size(cfg.size, cfg.size)
            inp = cm.LayerCostInput(ho, cfg.m, cfg.n, cfg.kernel, part=cfg.part, d_out_w=wo)

            het_counter, dense_counter = MulCounter(), MulCounter()
            out = self._hetconv(x, bank, het_counter)
            ref = conv.conv2d_forward(x, embed_as_dense(bank), dense_counter)
            err = max_abs_diff(out, ref)
            oracle.record(err < self.oracle_tolerance, err, cfg.describe)

            expected = {
                "hetconv": cm.flops_hetconv(inp) * cfg.batch,
                "standard": cm.flops_standard(inp) * cfg.batch,
            }
            observed = {"hetconv": het_counter.count, "standard": dense_counter.count}
            expected.update(self._separable_counts(cfg, x, rng, inp, observed))
            bad = [k for k in expected if expected[k] != observed[k]]
            counts.record(not bad, len(bad), lambda: f"{cfg.describe()} mismatched={bad}")

            if cfg.n >= cfg.part:
                covered = set()
                for f in range(cfg.n):
                    covered.update(int(c) for c in bank.kxk_channels(f))
                coverage.record(covered == set(range(cfg.m)), cfg.m - len(covered), cfg.describe)

            a = float(rng.uniform_array((1,), -3.0, 3.0)[0])
            unbiased = HetConvFilterBank(g, cfg.part, bank.kxk_weights, bank.one_weights)
            scaled = self._hetconv(x.scaled(a), unbiased).array
            expected_scaled = a * self._hetconv(x, unbiased).array
            scale = max(float(np.max(np.abs(expected_scaled))), 1e-300)
            rel = float(np.max(np.abs(scaled - expected_scaled))) / scale
            linearity.record(rel < 1e-12, rel, cfg.describe)

        for result in (oracle, counts, coverage, linearity):
            self.results[result.name] = result

    @staticmethod
    def _separable_counts(cfg: TrialConfig, x: Tensor4, rng: Rng, inp: cm.LayerCostInput,
                          observed: Dict[str, int]) -> Dict[str, int]:
        """Run DWC / PWC / GWC on the trial geometry; returns their closed forms"""
        k = cfg.kernel
        dw = rng.normal_array((cfg.m, k, k))
        c = MulCounter()
        depthwise = conv.dwc_forward(x, dw, c, cfg.stride, cfg.padding)
        observed["dwc"] = c.count

        # pointwise consumes the depthwise output, already on the D_o grid
        pw = rng.normal_array((cfg.n, cfg.m))
        c = MulCounter()
        conv.pwc_forward(depthwise, pw, c)
        observed["pwc"] = c.count

        common = [d for d in divisors(cfg.m) if cfg.n % d == 0]
        groups = common[int(rng.integers(0, len(common)))]
        gw = rng.normal_array((cfg.n, cfg.m // groups, k, k))
        c = MulCounter()
        conv.gwc_forward(x, groups, gw, c, cfg.stride, cfg.padding)
        observed["gwc"] = c.count

        gwc_inp = cm.LayerCostInput(inp.d_out, cfg.m, cfg.n, k, groups=groups, d_out_w=inp.d_out_w)
        return {
            "dwc": cm.flops_dwc(inp) * cfg.batch,
            "pwc": cm.flops_pwc(inp) * cfg.batch,
            "gwc": cm.flops_gwc(gwc_inp) * cfg.batch,
        }

    def _gradient_suite(self) -> None:
        result = PropertyResult("gradients")
        base = Rng(self.seed).spawn(1_000_000)
        for i in range(self.gradient_trials):
            rng = base.spawn(i)
            m = (2, 4)[int(rng.integers(0, 2))]
            parts = divisors(m)
            # first trials pin the extremes P=1 and P=M
            part = 1 if i == 0 else m if i == 1 else parts[int(rng.integers(0, len(parts)))]
            cfg = TrialConfig(i, 1, m, int(rng.integers(1, 5)), part, 3,
                              int(rng.integers(1, 3)), 1, 5)
            x = random_uniform((1, cfg.m, cfg.size, cfg.size), rng)
            bank = HetConvFilterBank.random(cfg.geometry, cfg.part, rng, with_bias=True)
            checks = check_hetconv_layer(bank, x, rng)
            worst = max(r.max_rel_error for r in checks.values())
            result.record(worst < self.gradient_tolerance, worst, cfg.describe)
        self.results[result.name] = result

    def _dominance_suite(self) -> None:
        result = PropertyResult("dominance")
        for k in (3, 5, 7):
            for m in range(2, 513):
                het = cm.reduction_hetconv(m, k)
                ok = het < cm.reduction_mobnet(m, k) and het < cm.reduction_group(m, k)
                ok = ok and Fraction(1, k * k) < het <= 1
                result.record(ok, 0.0, lambda: f"M=P=G={m} K={k}")
        self.results[result.name] = result

    def run(self) -> pd.DataFrame:
        self.results = {}
        logger.info(f"verify: {self.trials} layer trials, {self.gradient_trials} gradient trials, "
                    f"seed {self.seed}")
        self._layer_suites()
        self._gradient_suite()
        self._dominance_suite()
        for result in self.results.values():
            for failure in result.failures:
                logger.error(f"FAIL {result.name}: {failure}")
        return self.summary()

    @property
    def ok(self) -> bool:
        return bool(self.results) and all(r.failed == 0 for r in self.results.values())

    def summary(self) -> pd.DataFrame:
        rows = [{
            "property": r.name,
            "trials": r.trials,
            "passed": r.passed,
            "failed": r.failed,
            "max_error": float(f"{r.max_error:.3e}"),
        } for r in self.results.values()]
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    def failures(self) -> Dict[str, List[str]]:
        return {name: r.failures for name, r in self.results.items() if r.failures}

