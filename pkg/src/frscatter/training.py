"""Mini-batch Adam training of a decoder against an L1 objective.

The encoder side (scattering + reduction) is frozen: training consumes
precomputed embeddings and target images.  Images are mapped to [-1, 1] to
match the tanh output; PSNR/SSIM are computed after mapping back to [0, 1].
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .metrics import evaluate_split
from .nn import AdamState, DecoderModel, adam_step, l1_loss, l1_loss_grad
from .tensorio import SeededRng


@dataclass
class TrainConfig:
    batch_size: int = 64
    max_steps: int = 20000
    seed: int = 0
    lr: float = 0.001
    eval_interval: int = 0        # 0 disables periodic PSNR/SSIM evaluation
    checkpoint_interval: int = 0  # 0 disables intermediate checkpoints
    eval_max_images: int = 64     # cap per-split images scored at eval points
    out_dir: str | None = None

    def __post_init__(self):
        if self.batch_size < 1 or self.max_steps < 1:
            raise ValueError("batch_size and max_steps must be >= 1")


def to_signed(images: np.ndarray) -> np.ndarray:
    """[0, 1] -> [-1, 1]."""
    return images * 2.0 - 1.0


def to_unit(images: np.ndarray) -> np.ndarray:
    """[-1, 1] -> [0, 1]."""
    return (images + 1.0) / 2.0


def generate(model: DecoderModel, embeddings: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Eval-mode forward over a whole split, returned in [0, 1]."""
    outs = []
    for i in range(0, embeddings.shape[0], batch_size):
        outs.append(model.forward(embeddings[i:i + batch_size], mode="eval"))
    return to_unit(np.concatenate(outs))


def _batch_indices(n: int, batch_size: int, rng: SeededRng):
    """Endless deterministic stream of shuffled batches; size-1 tails are dropped."""
    while True:
        order = rng.permutation(n)
        for i in range(0, n, batch_size):
            chunk = order[i:i + batch_size]
            if len(chunk) >= 2 or (batch_size == 1 and len(chunk) == 1):
                yield chunk


def train(
    embeddings: np.ndarray,
    images: np.ndarray,
    model: DecoderModel,
    cfg: TrainConfig,
    test_embeddings: np.ndarray | None = None,
    test_images: np.ndarray | None = None,
) -> list[dict]:
    """Train ``model`` in place; returns the per-step curve records.

    Each record has ``step`` and ``loss``; records at eval points also carry
    train/test PSNR and SSIM.  With ``out_dir`` set, the curve is written to
    curve.csv and checkpoints to checkpoint_<step>/ plus final/.
    """
    n = embeddings.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    targets = to_signed(images)
    rng = SeededRng(cfg.seed)
    state = AdamState(lr=cfg.lr)
    batches = _batch_indices(n, cfg.batch_size, rng)
    curve: list[dict] = []
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)

    for step in range(1, cfg.max_steps + 1):
        idx = next(batches)
        pred = model.forward(embeddings[idx], mode="train")
        loss = l1_loss(targets[idx], pred)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss {loss} at step {step}")
        model.backward(l1_loss_grad(targets[idx], pred))
        params = dict(model.parameters())
        grads = dict(model.gradients())
        adam_step(params, grads, state)
        rec = {"step": step, "loss": loss}
        if cfg.eval_interval and (step % cfg.eval_interval == 0 or step == cfg.max_steps):
            rec.update(_eval_metrics(model, embeddings, images, "train", cfg))
            if test_embeddings is not None:
                rec.update(_eval_metrics(model, test_embeddings, test_images, "test", cfg))
        curve.append(rec)
        if cfg.out_dir and cfg.checkpoint_interval and step % cfg.checkpoint_interval == 0:
            model.save(os.path.join(cfg.out_dir, f"checkpoint_{step:06d}"))

    if cfg.out_dir:
        model.save(os.path.join(cfg.out_dir, "final"))
        write_curve_csv(curve, os.path.join(cfg.out_dir, "curve.csv"))
    return curve


def _eval_metrics(model, embeddings, images, tag, cfg):
    m = cfg.eval_max_images
    gen = generate(model, embeddings[:m], cfg.batch_size)
    report = evaluate_split(images[:m], gen)
    return {f"{tag}_psnr": report.mean_psnr, f"{tag}_ssim": report.mean_ssim}


def write_curve_csv(curve: list[dict], path) -> None:
    cols = ["step", "loss", "train_psnr", "train_ssim", "test_psnr", "test_ssim"]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for rec in curve:
            w.writerow([repr(rec[c]) if c in rec else "" for c in cols])
