# cli/commands.py
"""
Subcommand handlers. Each takes the parsed namespace plus Settings and returns
(stdout text, exit code); main.py owns writing and error mapping.
"""

import logging
import os
from typing import Callable, Dict, Tuple

import pandas as pd

from analyzer import cost_model as cm
from analyzer.cost_report import cost_report, latency_chain, reduction_table
from architectures.arch_spec import ArchSpec
from architectures.builders import BUILTIN_ARCHS, builtin_arch
from architectures.config_io import emit_arch, load_arch
from architectures.transforms import (hetconvify, merge_separable, parse_part_policy,
                                      substitute_dwc_pwc, substitute_gwc_pwc)
from benchmarking.microbench import MicroBench, parse_variants
from cli.svg_chart import speedup_svg
from cli.verify_suite import VerifySuite
from config.settings import Settings
from kernels.geometry import ConvGeometry
from training.toy_dataset import ToyDataset
from training.toy_net import ToyNet, toy_arch
from training.trainer import TrainConfig, ToyTrainer, compare_convergence, trace_to_csv
from utils.file_io import atomic_write_text, dataframe_to_csv, to_json_text
from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("HetConvCLI")

Result = Tuple[str, int]
TRANSFORMS = ("hetconv", "gwc_pwc", "dwc_pwc", "merge_separable")


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def resolve_arch(ref: str) -> ArchSpec:
    """A builtin name, or a path to an architecture file"""
    if ref in BUILTIN_ARCHS:
        return builtin_arch(ref)
    if os.path.exists(ref):
        return load_arch(ref)
    raise ValidationError(f"'{ref}' is neither a builtin architecture "
                          f"({', '.join(sorted(BUILTIN_ARCHS))}) nor an existing file")


def render_frame(df: pd.DataFrame, fmt: str) -> str:
    if fmt == "json":
        return to_json_text(cm.frame_records(df))
    return dataframe_to_csv(df)


def _pick(value, default):
    return default if value is None else value


def _output_format(args, settings: Settings) -> str:
    return Sanitizer.sanitize_format(args.format or settings.get("general.output_format", "csv"))


def _seed(args, settings: Settings) -> int:
    return Sanitizer.sanitize_seed(args.seed) if args.seed is not None else settings.seed


def _skip_first(args, settings: Settings) -> bool:
    return False if args.no_skip_first else bool(settings.get("analysis.skip_first", True))


def apply_transform(a: ArchSpec, to: str, part=None, groups=None, skip_first: bool = True) -> ArchSpec:
    if to == "hetconv":
        if part is None:
            raise ValidationError("--to hetconv needs --p")
        return hetconvify(a, part, skip_first)
    if to == "merge_separable":
        if part is None:
            raise ValidationError("--to merge_separable needs --p")
        return merge_separable(a, part)
    if to == "gwc_pwc":
        if groups is None:
            raise ValidationError("--to gwc_pwc needs --groups")
        return substitute_gwc_pwc(a, groups, skip_first)
    if to == "dwc_pwc":
        return substitute_dwc_pwc(a, skip_first)
    raise ValidationError(f"unknown transform '{to}'; choose from {', '.join(TRANSFORMS)}")


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------

def cmd_analyze(args, settings: Settings) -> Result:
    fmt = _output_format(args, settings)
    arch = resolve_arch(args.arch)
    skip_first = _skip_first(args, settings)

    if args.p_list:
        parts = [parse_part_policy(p) for p in args.p_list.split(",") if p.strip()]
        if not parts:
            raise ValidationError("part list must not be empty")
        baseline = cost_report(arch)
        reports = [cost_report(hetconvify(arch, p, skip_first), baseline) for p in parts]
        return render_frame(reduction_table(reports, baseline), fmt), 0

    baseline = resolve_arch(args.baseline) if args.baseline else None
    if args.p is not None:
        baseline = baseline or arch
        arch = hetconvify(arch, parse_part_policy(args.p), skip_first)
    report = cost_report(arch, baseline)
    return (report.to_json() if fmt == "json" else report.to_csv()), 0


def cmd_transform(args, settings: Settings) -> Result:
    arch = resolve_arch(args.arch)
    part = parse_part_policy(args.p) if args.p is not None else None
    out = apply_transform(arch, args.to, part, args.groups, _skip_first(args, settings))
    logger.info(f"transform {arch.name} -> {out.name}")
    return emit_arch(out), 0


def cmd_speedup(args, settings: Settings) -> Result:
    fmt = _output_format(args, settings)
    kernel = _pick(args.k, settings.get("analysis.speedup_kernel", 3))
    parts = _pick(args.p_list, settings.get("analysis.speedup_parts", [1, 2, 4, 8, 16, 32, 64]))
    points = cm.speedup_curve(Sanitizer.sanitize_count(kernel, "kernel"),
                              Sanitizer.sanitize_part_list(parts))
    if args.svg:
        atomic_write_text(args.svg, speedup_svg(points, kernel))
        logger.info(f"Speedup chart written to {args.svg}")
    return render_frame(cm.curve_frame(points), fmt), 0


def cmd_compare(args, settings: Settings) -> Result:
    fmt = _output_format(args, settings)
    kernel = _pick(args.k, settings.get("analysis.speedup_kernel", 3))
    parts = _pick(args.p_list, settings.get("analysis.speedup_parts", [1, 2, 4, 8, 16, 32, 64]))
    table = cm.comparison_table(Sanitizer.sanitize_count(kernel, "kernel"),
                                Sanitizer.sanitize_part_list(parts))
    return render_frame(table, fmt), 0


def cmd_latency(args, settings: Settings) -> Result:
    fmt = _output_format(args, settings)
    arch = resolve_arch(args.arch)
    if args.to:
        part = parse_part_policy(args.p) if args.p is not None else None
        arch = apply_transform(arch, args.to, part, args.groups, _skip_first(args, settings))
    chain = latency_chain(arch)
    return (chain.to_json() if fmt == "json" else chain.to_csv()), 0


def cmd_verify(args, settings: Settings) -> Result:
    fmt = _output_format(args, settings)
    section = settings.section("verify")
    trials = Sanitizer.sanitize_count(_pick(args.trials, section.get("trials", 100)), "trials")
    gradient_trials = Sanitizer.sanitize_count(
        _pick(args.gradient_trials, section.get("gradient_trials", 20)), "gradient_trials")
    suite = VerifySuite(
        trials=trials,
        seed=_seed(args, settings),
        gradient_trials=gradient_trials,
        oracle_tolerance=float(section.get("oracle_tolerance", 1e-10)),
        gradient_tolerance=float(section.get("gradient_tolerance", 1e-4)),
        inject_fault=args.inject_fault,
    )
    summary = suite.run()
    if suite.ok:
        logger.info("✅ All properties hold")
        return render_frame(summary, fmt), 0
    logger.error(f"❌ Verification failed (replay with --seed {suite.seed} --trials {suite.trials})")
    return render_frame(summary, fmt), 1


def cmd_bench(args, settings: Settings) -> Result:
    fmt = _output_format(args, settings)
    section = settings.section("bench")
    geometry = ConvGeometry(args.m, args.n, args.k, args.stride, args.padding)
    bench = MicroBench(
        geometry,
        input_size=_pick(args.input_size, section.get("input_size", 32)),
        repetitions=_pick(args.repetitions, section.get("repetitions", 5)),
        seed=_seed(args, settings),
        batch=args.batch,
    )
    variants = parse_variants(_pick(args.variants, section.get("variants", "standard")))
    return render_frame(bench.run(variants, timing=not args.no_timing), fmt), 0


def _train_config(args, settings: Settings) -> TrainConfig:
    return TrainConfig.from_settings(
        settings.section("training"),
        lr=args.lr, lr_decay=args.lr_decay, decay_every=args.decay_every,
        momentum=args.momentum, weight_decay=args.weight_decay,
        batch_size=args.batch_size, epochs=args.epochs, seed=_seed(args, settings),
    )


def cmd_train_toy(args, settings: Settings) -> Result:
    fmt = _output_format(args, settings)
    cfg = _train_config(args, settings)
    data_cfg = settings.section("dataset")
    data = ToyDataset(cfg.seed,
                      n_train=_pick(args.n_train, data_cfg.get("n_train", 2000)),
                      n_val=_pick(args.n_val, data_cfg.get("n_val", 500)),
                      noise=_pick(args.noise, data_cfg.get("noise", 0.25)))
    width = Sanitizer.sanitize_count(_pick(args.width, settings.get("training.width", 16)), "width")

    if args.compare:
        parts = Sanitizer.sanitize_part_list(args.compare)
        return render_frame(compare_convergence(parts, data, cfg, width), fmt), 0

    part = parse_part_policy(args.p) if args.p is not None else 1
    net = ToyNet(toy_arch(part, width), seed=cfg.seed)
    trainer = ToyTrainer(net, data, cfg)
    report = trainer.run()
    if args.report:
        trainer.save_report(report, args.report)
    trace = trainer.trace_frame()
    return (to_json_text(cm.frame_records(trace)) if fmt == "json" else trace_to_csv(trace)), 0


HANDLERS: Dict[str, Callable[..., Result]] = {
    "analyze": cmd_analyze,
    "transform": cmd_transform,
    "speedup": cmd_speedup,
    "compare": cmd_compare,
    "latency": cmd_latency,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "train-toy": cmd_train_toy,
}
