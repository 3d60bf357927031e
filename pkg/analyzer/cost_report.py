# analyzer/cost_report.py
"""
Per-layer cost reports and latency analysis over an ArchSpec.

FLOPs are MACs of conv and FC layers; pooling, residual add and bias are free.
Parameters are weights plus biases where a layer declares one.
Latency: the conv layers sharing a block label replace one baseline conv; every conv stage
after the first in its block costs one latency unit.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from analyzer import cost_model as cm
from architectures.arch_spec import ArchSpec, LayerSpec, ResolvedLayer
from utils.file_io import dataframe_to_csv, to_json_text

logger = logging.getLogger("CostModel")

REPORT_COLUMNS = ["layer", "kind", "flops", "params", "latency"]
REDUCTION_COLUMNS = ["flops_reduced_pct", "params_reduced_pct"]
PCT_DECIMALS = 4


def _cost_input(layer: LayerSpec, out_shape) -> cm.LayerCostInput:
    _, ho, wo = out_shape
    return cm.LayerCostInput(ho, layer.in_channels, layer.out_channels, layer.kernel,
                             part=layer.part, groups=layer.groups, d_out_w=wo)


def layer_costs(r: ResolvedLayer) -> Tuple[int, int]:
    """(flops, params) of one resolved layer"""
    layer = r.layer
    bias = layer.out_channels if layer.bias else 0
    if layer.kind == "fc":
        return layer.in_channels * layer.out_channels, layer.in_channels * layer.out_channels + bias
    if not layer.is_conv:
        return 0, 0
    inp = _cost_input(layer, r.out_shape)
    if layer.kind == "standard_conv":
        return cm.flops_standard(inp), cm.params_standard(inp) + bias
    if layer.kind == "hetconv":
        return cm.flops_hetconv(inp), cm.params_hetconv(inp) + bias
    if layer.kind == "dwc":
        return cm.flops_dwc(inp), cm.params_dwc(inp) + bias
    if layer.kind == "pwc":
        return cm.flops_pwc(inp), cm.params_pwc(inp) + bias
    return cm.flops_gwc(inp), cm.params_gwc(inp) + bias


def _block_key(r: ResolvedLayer) -> str:
    return r.layer.block or r.layer.name


def layer_latency(a: ArchSpec) -> List[int]:
    """Latency units per layer, in layer order"""
    seen: Dict[str, int] = {}
    units = []
    for r in a.resolved:
        if not r.layer.is_conv:
            units.append(0)
            continue
        key = _block_key(r)
        units.append(1 if key in seen else 0)
        seen[key] = seen.get(key, 0) + 1
    return units


@dataclass(frozen=True)
class LatencyChain:
    """Per-block sequential conv stages and latency (stages - 1)"""

    arch: str
    stages: "OrderedDict[str, int]"

    @property
    def blocks(self) -> Dict[str, int]:
        return OrderedDict((k, v - 1) for k, v in self.stages.items())

    @property
    def max_latency(self) -> int:
        return max(self.blocks.values(), default=0)

    def to_frame(self) -> pd.DataFrame:
        rows = [{"block": k, "stages": v, "latency": v - 1} for k, v in self.stages.items()]
        return pd.DataFrame(rows, columns=["block", "stages", "latency"])

    def to_csv(self) -> str:
        return dataframe_to_csv(self.to_frame())

    def to_json(self) -> str:
        return to_json_text({
            "arch": self.arch,
            "max_latency": self.max_latency,
            "blocks": self.to_frame().to_dict(orient="records"),
        })


def latency_chain(a: ArchSpec) -> LatencyChain:
    stages: "OrderedDict[str, int]" = OrderedDict()
    for r in a.resolved:
        if r.layer.is_conv:
            key = _block_key(r)
            stages[key] = stages.get(key, 0) + 1
    chain = LatencyChain(a.name, stages)
    logger.debug(f"latency_chain {a.name}: {len(stages)} blocks, max {chain.max_latency}")
    return chain


@dataclass(frozen=True, eq=False)
class CostReport:
    """
    rows: DataFrame with REPORT_COLUMNS, one row per layer
    baseline_*: totals of the baseline report when one was given
    """

    name: str
    rows: pd.DataFrame
    baseline_name: Optional[str] = None
    baseline_flops: Optional[int] = None
    baseline_params: Optional[int] = None

    @property
    def total_flops(self) -> int:
        return int(self.rows["flops"].sum())

    @property
    def total_params(self) -> int:
        return int(self.rows["params"].sum())

    @property
    def total_latency(self) -> int:
        return int(self.rows["latency"].sum())

    @property
    def has_baseline(self) -> bool:
        return self.baseline_flops is not None

    @property
    def flops_ratio(self) -> Optional[Fraction]:
        """Exact total / baseline_total"""
        if not self.has_baseline:
            return None
        return Fraction(self.total_flops, self.baseline_flops)

    @property
    def params_ratio(self) -> Optional[Fraction]:
        if not self.has_baseline:
            return None
        return Fraction(self.total_params, self.baseline_params)

    @property
    def flops_reduced_pct(self) -> Optional[float]:
        ratio = self.flops_ratio
        return None if ratio is None else round(float(100 * (1 - ratio)), PCT_DECIMALS)

    @property
    def params_reduced_pct(self) -> Optional[float]:
        ratio = self.params_ratio
        return None if ratio is None else round(float(100 * (1 - ratio)), PCT_DECIMALS)

    def layer(self, name: str) -> Dict:
        match = self.rows[self.rows["layer"] == name]
        if match.empty:
            raise KeyError(name)
        return match.iloc[0].to_dict()

    def to_frame(self) -> pd.DataFrame:
        """Layer rows plus a TOTAL row; reduction columns only when a baseline was given"""
        df = self.rows.copy()
        total = {"layer": "TOTAL", "kind": "", "flops": self.total_flops,
                 "params": self.total_params, "latency": self.total_latency}
        if self.has_baseline:
            for column in REDUCTION_COLUMNS:
                df[column] = pd.Series([None] * len(df), dtype=object)
            total["flops_reduced_pct"] = self.flops_reduced_pct
            total["params_reduced_pct"] = self.params_reduced_pct
        return pd.concat([df, pd.DataFrame([total])], ignore_index=True)

    def to_csv(self) -> str:
        return dataframe_to_csv(self.to_frame())

    def to_dict(self) -> Dict:
        payload = {
            "arch": self.name,
            "layers": [
                {k: (int(v) if k in ("flops", "params", "latency") else v) for k, v in row.items()}
                for row in self.rows.to_dict(orient="records")
            ],
            "totals": {
                "flops": self.total_flops,
                "params": self.total_params,
                "latency": self.total_latency,
            },
        }
        if self.has_baseline:
            payload["baseline"] = {
                "arch": self.baseline_name,
                "flops": self.baseline_flops,
                "params": self.baseline_params,
            }
            payload["totals"]["flops_reduced_pct"] = self.flops_reduced_pct
            payload["totals"]["params_reduced_pct"] = self.params_reduced_pct
        return payload

    def to_json(self) -> str:
        return to_json_text(self.to_dict())


def cost_report(a: ArchSpec, baseline: Optional[Union[ArchSpec, "CostReport"]] = None) -> CostReport:
    """Per-layer FLOPs, params and latency; reductions against `baseline` when given"""
    latency = layer_latency(a)
    rows = []
    for r, lat in zip(a.resolved, latency):
        flops, params = layer_costs(r)
        rows.append({"layer": r.layer.name, "kind": r.layer.kind,
                     "flops": flops, "params": params, "latency": lat})
    df = pd.DataFrame(rows, columns=REPORT_COLUMNS).astype(
        {"flops": "int64", "params": "int64", "latency": "int64"})

    if baseline is None:
        report = CostReport(a.name, df)
    else:
        base = baseline if isinstance(baseline, CostReport) else cost_report(baseline)
        report = CostReport(a.name, df, base.name, base.total_flops, base.total_params)
    logger.info(f"cost_report {a.name}: {report.total_flops:,} FLOPs, {report.total_params:,} params")
    return report


def format_count(n: int) -> str:
    """313460000 -> '313.46M', 3663761408 -> '3.66G'"""
    for scale, suffix in ((10 ** 9, "G"), (10 ** 6, "M"), (10 ** 3, "K")):
        if abs(n) >= scale:
            return f"{n / scale:.2f}{suffix}"
    return str(n)


def reduction_table(reports: Sequence[CostReport], baseline: CostReport) -> pd.DataFrame:
    """
    Model comparison in the usual compression-table layout:
    Model, FLOPs, FLOPs Reduced (%), Parameters, Parameters Reduced (%)
    """
    rows = []
    for report in [baseline, *[r for r in reports if r is not baseline]]:
        flops_pct = 100 * (1 - Fraction(report.total_flops, baseline.total_flops))
        params_pct = 100 * (1 - Fraction(report.total_params, baseline.total_params))
        rows.append({
            "Model": report.name,
            "FLOPs": format_count(report.total_flops),
            "FLOPs Reduced (%)": round(float(flops_pct), 2),
            "Parameters": format_count(report.total_params),
            "Parameters Reduced (%)": round(float(params_pct), 2),
        })
    return pd.DataFrame(rows, columns=["Model", "FLOPs", "FLOPs Reduced (%)",
                                       "Parameters", "Parameters Reduced (%)"])
