# analyzer/cost_model.py
"""
Closed-form cost engine for standard, HetConv, DWC+PWC and GWC+PWC layers.

Conventions:
- 1 FLOP = 1 multiply-accumulate; additions and bias are free
- all absolute counts are per batch item, per layer
- reductions are exact Fractions so strict inequalities compare without float noise

Depthwise+pointwise follows D_o^2*M*K^2 + D_o^2*M*N (one K x K kernel per input channel,
then a 1 x 1 projection). Groupwise+pointwise follows D_o^2*M*N*K^2/G + D_o^2*M*N.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional

import pandas as pd

from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("CostModel")

# Decimal places used when exact fractions are flattened into CSV/JSON tables
TABLE_DECIMALS = 6


@dataclass(frozen=True)
class LayerCostInput:
    """
    One layer's cost symbols

    d_out: output spatial size (height); d_out_w overrides the width for non-square maps
    part: HetConv P; groups: GWC G
    """

    d_out: int
    in_channels: int
    out_channels: int
    kernel: int
    part: int = 1
    groups: int = 1
    d_out_w: Optional[int] = None

    def __post_init__(self):
        Sanitizer.sanitize_count(self.d_out, "d_out")
        if self.d_out_w is not None:
            Sanitizer.sanitize_count(self.d_out_w, "d_out_w")
        Sanitizer.sanitize_count(self.in_channels, "in_channels")
        Sanitizer.sanitize_count(self.out_channels, "out_channels")
        Sanitizer.sanitize_kernel(self.kernel)
        Sanitizer.sanitize_part(self.part, in_channels=self.in_channels)
        Sanitizer.sanitize_groups(self.groups, self.in_channels, self.out_channels)

    @property
    def spatial(self) -> int:
        """D_o x D_o (or height x width)"""
        return self.d_out * (self.d_out if self.d_out_w is None else self.d_out_w)


# ---------------------------------------------------------------------------
# Absolute FLOP counts
# ---------------------------------------------------------------------------

def flops_standard(inp: LayerCostInput) -> int:
    """FL_S = D_o^2 * M * N * K^2"""
    return inp.spatial * inp.in_channels * inp.out_channels * inp.kernel * inp.kernel


def flops_hetconv(inp: LayerCostInput) -> int:
    """FL_HC = FL_K + FL_1 = D_o^2 * N * (M/P * K^2 + M - M/P)"""
    m, p = inp.in_channels, inp.part
    kxk = inp.spatial * (m // p) * inp.out_channels * inp.kernel * inp.kernel
    one = inp.spatial * (m - m // p) * inp.out_channels
    return kxk + one


def flops_dwc(inp: LayerCostInput) -> int:
    return inp.spatial * inp.in_channels * inp.kernel * inp.kernel


def flops_pwc(inp: LayerCostInput) -> int:
    return inp.spatial * inp.in_channels * inp.out_channels


def flops_gwc(inp: LayerCostInput) -> int:
    return flops_standard(inp) // inp.groups


def flops_dwc_pwc(inp: LayerCostInput) -> int:
    """FL_MobNet = D_o^2 * M * K^2 + D_o^2 * M * N"""
    return flops_dwc(inp) + flops_pwc(inp)


def flops_gwc_pwc(inp: LayerCostInput) -> int:
    """FL_G = D_o^2 * M * N * K^2 / G + D_o^2 * M * N"""
    return flops_gwc(inp) + flops_pwc(inp)


# ---------------------------------------------------------------------------
# Parameter counts (weights only; callers add N for a bias)
# ---------------------------------------------------------------------------

def params_standard(inp: LayerCostInput) -> int:
    return inp.out_channels * inp.in_channels * inp.kernel * inp.kernel


def params_hetconv(inp: LayerCostInput) -> int:
    """N * (M/P * K^2 + M - M/P)"""
    m, p = inp.in_channels, inp.part
    return inp.out_channels * ((m // p) * inp.kernel * inp.kernel + m - m // p)


def params_dwc(inp: LayerCostInput) -> int:
    return inp.in_channels * inp.kernel * inp.kernel


def params_pwc(inp: LayerCostInput) -> int:
    return inp.in_channels * inp.out_channels


def params_gwc(inp: LayerCostInput) -> int:
    return params_standard(inp) // inp.groups


def params_dwc_pwc(inp: LayerCostInput) -> int:
    """M * K^2 + M * N"""
    return params_dwc(inp) + params_pwc(inp)


def params_gwc_pwc(inp: LayerCostInput) -> int:
    """M * N * K^2 / G + M * N"""
    return params_gwc(inp) + params_pwc(inp)


# ---------------------------------------------------------------------------
# Reduction ratios
# ---------------------------------------------------------------------------

def _positive(value: int, name: str) -> int:
    return Sanitizer.sanitize_count(value, name)


def reduction_hetconv(part: int, kernel: int) -> Fraction:
    """R_HetConv = 1/P + (1 - 1/P)/K^2"""
    p, k = _positive(part, "part"), _positive(kernel, "kernel")
    return Fraction(1, p) + Fraction(p - 1, p * k * k)


def reduction_mobnet(out_channels: int, kernel: int) -> Fraction:
    """R_MobNet = 1/N + 1/K^2"""
    n, k = _positive(out_channels, "out_channels"), _positive(kernel, "kernel")
    return Fraction(1, n) + Fraction(1, k * k)


def reduction_group(groups: int, kernel: int) -> Fraction:
    """R_Group = 1/G + 1/K^2 (above 1 at G=1, reported as-is)"""
    g, k = _positive(groups, "groups"), _positive(kernel, "kernel")
    return Fraction(1, g) + Fraction(1, k * k)


def speedup(reduction: Fraction) -> Fraction:
    """Speedup = 1 / Reduction"""
    if reduction <= 0:
        raise ValidationError(f"reduction must be positive, got {reduction}")
    return 1 / Fraction(reduction)


# ---------------------------------------------------------------------------
# Curves and tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpeedupPoint:
    part: int
    reduction: Fraction
    speedup: Fraction

    def as_row(self) -> Dict[str, float]:
        return {
            "P": self.part,
            "R_hetconv": round(float(self.reduction), TABLE_DECIMALS),
            "speedup": round(float(self.speedup), TABLE_DECIMALS),
        }


def speedup_curve(kernel: int, part_values: Iterable[int]) -> List[SpeedupPoint]:
    """One SpeedupPoint per P, speedup = 1 / R_HetConv(P, K)"""
    parts = Sanitizer.sanitize_part_list(list(part_values))
    points = []
    for p in parts:
        r = reduction_hetconv(p, kernel)
        points.append(SpeedupPoint(p, r, speedup(r)))
    logger.debug(f"speedup_curve K={kernel}: {len(points)} points")
    return points


def curve_frame(points: List[SpeedupPoint]) -> pd.DataFrame:
    return pd.DataFrame([pt.as_row() for pt in points], columns=["P", "R_hetconv", "speedup"])


def comparison_table(kernel: int, part_values: Iterable[int]) -> pd.DataFrame:
    """
    HetConv vs GWC+PWC vs DWC+PWC per P.

    R_group is taken at G = P and R_mobnet at N = P, the extreme-case pairing under which
    HetConv's advantage is stated.

    Columns: P, R_hetconv, R_group, R_mobnet, speedup
    """
    rows = []
    for point in speedup_curve(kernel, part_values):
        p = point.part
        rows.append({
            "P": p,
            "R_hetconv": round(float(point.reduction), TABLE_DECIMALS),
            "R_group": round(float(reduction_group(p, kernel)), TABLE_DECIMALS),
            "R_mobnet": round(float(reduction_mobnet(p, kernel)), TABLE_DECIMALS),
            "speedup": round(float(point.speedup), TABLE_DECIMALS),
        })
    return pd.DataFrame(rows, columns=["P", "R_hetconv", "R_group", "R_mobnet", "speedup"])


def frame_records(df: pd.DataFrame) -> List[Dict]:
    """JSON-ready records with native Python scalars; missing cells become null"""
    return df.astype(object).where(df.notna(), None).to_dict(orient="records")
