#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
TOY TRAINER - SGD for ToyNet on the synthetic dataset

Features:
- Momentum SGD with weight decay and a step learning-rate schedule
- Deterministic: seeded init, seeded per-epoch batch order, fixed summation order
- Per-epoch trace (epoch, loss, train_acc, val_acc); epoch 0 is the untrained network
- HetConv vs standard-conv convergence comparison

Schedule: lr(epoch) = lr * lr_decay ** ((epoch - 1) // decay_every), epochs counted from 1.
Update:   v = momentum * v + (grad + weight_decay * w);  w = w - lr(epoch) * v
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from analyzer.cost_report import cost_report
from core.tensor import Rng
from training.toy_dataset import ToyDataset
from training.toy_net import ToyNet, build_toy_arch, toy_arch
from utils.file_io import atomic_write_text, dataframe_to_csv, to_json_text
from utils.validation import Sanitizer, ValidationError

logger = logging.getLogger("Trainer")

TRACE_COLUMNS = ["epoch", "loss", "train_acc", "val_acc"]


class TrainingError(RuntimeError):
    """Raised when training diverges (non-finite loss)"""
    pass


@dataclass(frozen=True)
class TrainConfig:
    """
    Defaults echo the reference CIFAR regime (lr 0.1, wd 5e-4, batch 128);
    toy runs override them from config/hetconv_config.json.
    """

    lr: float = 0.1
    lr_decay: float = 0.1
    decay_every: int = 30
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 128
    epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.lr, (int, float)) and self.lr >= 0 and math.isfinite(self.lr)):
            raise ValidationError(f"lr must be a finite value >= 0, got {self.lr}")
        if not 0 < self.lr_decay <= 1:
            raise ValidationError(f"lr_decay must be in (0, 1], got {self.lr_decay}")
        if not 0 <= self.momentum < 1:
            raise ValidationError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValidationError(f"weight_decay must be >= 0, got {self.weight_decay}")
        Sanitizer.sanitize_count(self.decay_every, "decay_every")
        Sanitizer.sanitize_count(self.batch_size, "batch_size")
        Sanitizer.sanitize_count(self.epochs, "epochs")
        Sanitizer.sanitize_seed(self.seed)

    def lr_at(self, epoch: int) -> float:
        return self.lr * self.lr_decay ** ((epoch - 1) // self.decay_every)

    @classmethod
    def from_settings(cls, section: Dict, **overrides) -> "TrainConfig":
        values = {k: section[k] for k in cls.__dataclass_fields__ if k in section}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class SGD:
    """Momentum SGD with L2 weight decay folded into the gradient"""

    def __init__(self, params: Dict[str, np.ndarray], momentum: float = 0.9, weight_decay: float = 0.0):
        self.params = params
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = {name: np.zeros_like(p) for name, p in params.items()}

    def step(self, grads: Dict[str, np.ndarray], lr: float) -> None:
        for name, p in self.params.items():
            g = grads[name] + self.weight_decay * p
            v = self.velocity[name]
            v *= self.momentum
            v += g
            p -= lr * v


class ToyTrainer:
    """
    Trains one ToyNet and keeps its trace and summary metrics

    Usage:
        trainer = ToyTrainer(net, data, cfg)
        report = trainer.run()
        trainer.save_report(report, "results/train_p4.json")
    """

    def __init__(self, net: ToyNet, data: ToyDataset, cfg: TrainConfig):
        x, _ = data.train
        if tuple(x.shape[1:]) != tuple(net.arch.input):
            raise ValidationError(
                f"net input {net.arch.input} does not match dataset images {tuple(x.shape[1:])}")
        self.net = net
        self.data = data
        self.cfg = cfg
        self.trace: List[Dict] = []
        self.metrics = {
            'arch': net.arch.name,
            'flops': 0,
            'params': 0,
            'initial_val_acc': 0.0,
            'final_val_acc': 0.0,
            'final_train_acc': 0.0,
            'final_loss': 0.0,
            'steps': 0,
        }
        report = cost_report(net.arch)
        self.metrics['flops'] = report.total_flops
        self.metrics['params'] = report.total_params
        logger.info(f"Trainer initialized - {net.arch.name}: {report.total_flops:,} FLOPs, "
                    f"{report.total_params:,} params")

    def _evaluate(self, epoch: int) -> Dict:
        x, y = self.data.train
        xv, yv = self.data.val
        row = {
            "epoch": epoch,
            "loss": self.net.loss(x, y),
            "train_acc": self.net.accuracy(x, y),
            "val_acc": self.net.accuracy(xv, yv),
        }
        if not math.isfinite(row["loss"]):
            raise TrainingError(f"non-finite loss {row['loss']} after epoch {epoch}")
        return row

    def run(self) -> Dict:
        cfg = self.cfg
        x, y = self.data.train
        optimizer = SGD(self.net.parameters(), cfg.momentum, cfg.weight_decay)
        rng = Rng(cfg.seed)

        self.trace = [self._evaluate(0)]
        logger.info(f"Starting training: {cfg.epochs} epochs, batch {cfg.batch_size}, lr {cfg.lr}")

        for epoch in range(1, cfg.epochs + 1):
            lr = cfg.lr_at(epoch)
            order = rng.spawn(epoch).permutation(len(y))
            for b, start in enumerate(range(0, len(y), cfg.batch_size)):
                idx = order[start:start + cfg.batch_size]
                loss, grads = self.net.loss_and_grads(x[idx], y[idx])
                if not math.isfinite(loss):
                    raise TrainingError(
                        f"non-finite loss {loss} at epoch {epoch} batch {b} (lr={lr}); "
                        f"lower the learning rate")
                optimizer.step(grads, lr)
                self.metrics['steps'] += 1
            row = self._evaluate(epoch)
            self.trace.append(row)
            logger.info(f"[{epoch}/{cfg.epochs}] loss {row['loss']:.4f} "
                        f"train {row['train_acc']:.3f} val {row['val_acc']:.3f}")

        self._calculate_metrics()
        logger.info(f"✅ Training complete - val acc {self.metrics['final_val_acc']:.3f}")
        return self._generate_report()

    def _calculate_metrics(self):
        self.metrics['initial_val_acc'] = self.trace[0]['val_acc']
        self.metrics['final_val_acc'] = self.trace[-1]['val_acc']
        self.metrics['final_train_acc'] = self.trace[-1]['train_acc']
        self.metrics['final_loss'] = self.trace[-1]['loss']

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace, columns=TRACE_COLUMNS)

    def _generate_report(self) -> Dict:
        return {
            'summary': dict(self.metrics),
            'config': asdict(self.cfg),
            'trace': self.trace_frame().to_dict(orient="records"),
        }

    def save_report(self, report: Dict, filename: str) -> str:
        atomic_write_text(filename, to_json_text(report))
        logger.info(f"Report saved to {filename}")
        return filename


def train(net: ToyNet, data: ToyDataset, cfg: TrainConfig) -> pd.DataFrame:
    """Train `net` in place; returns the per-epoch trace"""
    trainer = ToyTrainer(net, data, cfg)
    trainer.run()
    return trainer.trace_frame()


def trace_to_csv(trace: pd.DataFrame) -> str:
    return dataframe_to_csv(trace, float_format="%.6f")


def compare_convergence(part_values: Iterable, data: Optional[ToyDataset] = None,
                        cfg: Optional[TrainConfig] = None, width: int = 16) -> pd.DataFrame:
    """
    Train the standard toy net (P=1) and its HetConv twins from the same seed.

    Columns: P, final_val_acc, final_train_acc, flops, params, flops_ratio
    """
    cfg = cfg or TrainConfig()
    data = data or ToyDataset(cfg.seed)
    baseline = build_toy_arch(width)
    parts = [1] + [p for p in part_values if p != 1]
    rows = []
    for p in parts:
        net = ToyNet(toy_arch(p, width), seed=cfg.seed)
        trainer = ToyTrainer(net, data, cfg)
        trainer.run()
        report = cost_report(net.arch, baseline)
        rows.append({
            "P": p,
            "final_val_acc": trainer.metrics['final_val_acc'],
            "final_train_acc": trainer.metrics['final_train_acc'],
            "flops": report.total_flops,
            "params": report.total_params,
            "flops_ratio": round(float(report.flops_ratio), 6),
        })
        logger.info(f"P={p}: val acc {rows[-1]['final_val_acc']:.3f}, {report.total_flops:,} FLOPs")
    return pd.DataFrame(rows, columns=["P", "final_val_acc", "final_train_acc",
                                       "flops", "params", "flops_ratio"])
