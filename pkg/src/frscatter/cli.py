"""Command-line interface.

Subcommands: ingest, filters, scatter, reduce, train, eval, fuse, run.
Config files are JSON; see README for the key sets.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .datasets import DatasetSpec, load_dataset
from .filters import FilterParams, build_bank, littlewood_paley_report
from .metrics import FusionConfig, evaluate_split, fuse
from .nn import g1_build, g2_build
from .pipeline import load_plan, run_plan
from .reduction import FmfConfig, fmf, pca_fit, pca_load, pca_project, pca_save
from .scattering import FracOrderPair, enumerate_paths, scatter_batch
from .tensorio import SeededRng, ensure_dir, png_read, png_write, tensor_read, tensor_write


def _read_config(path) -> dict:
    with open(path) as f:
        return json.load(f)


def _filter_params(cfg: dict) -> FilterParams:
    kwargs = {k: cfg[k] for k in ("sigma0", "xi0", "slant") if k in cfg}
    return FilterParams(J=cfg["J"], L=cfg["L"], **kwargs)


def cmd_ingest(args) -> None:
    source = {"cifar10": "cifar10_binary_dir", "imagedir": "image_dir"}[args.source]
    spec = DatasetSpec(source=source, train_n=args.train_n, test_n=args.test_n,
                       height=args.size, width=args.size, seed=args.seed)
    train, test = load_dataset(args.dir, spec, log=lambda m: print(m, file=sys.stderr))
    ensure_dir(args.out)
    tensor_write(train, os.path.join(args.out, "train.frst"))
    tensor_write(test, os.path.join(args.out, "test.frst"))
    with open(os.path.join(args.out, "manifest.txt"), "w") as f:
        f.write(f"source={args.source}\ndir={args.dir}\n")
        f.write(f"train_n={args.train_n}\ntest_n={args.test_n}\n")
        f.write(f"size={args.size}\nseed={args.seed}\n")
        f.write("grayscale=bt601 0.299/0.587/0.114\n")
        f.write("crop=center-largest-square, bilinear resize, pixel/255\n")
    print(f"wrote {train.shape[0]} train / {test.shape[0]} test images to {args.out}")


def cmd_filters(args) -> None:
    cfg = _read_config(args.config)
    params = _filter_params(cfg)
    h = cfg.get("height", cfg.get("size", 32))
    w = cfg.get("width", h)
    bank = build_bank(params, h, w)
    ensure_dir(args.out)
    for (j, k), f in sorted(bank.psi_hat.items()):
        tensor_write(f.astype(np.complex128), os.path.join(args.out, f"psi_j{j}_k{k}.frst"))
        mag = np.fft.fftshift(np.abs(f))
        png_write(mag / max(mag.max(), 1e-12), os.path.join(args.out, f"psi_j{j}_k{k}.png"))
    tensor_write(bank.phi_hat, os.path.join(args.out, "phi.frst"))
    mag = np.fft.fftshift(np.abs(bank.phi_hat))
    png_write(mag / mag.max(), os.path.join(args.out, "phi.png"))
    lo, hi = littlewood_paley_report(bank)
    print(f"wrote {len(bank.psi_hat)} band-pass + 1 low-pass filters; "
          f"frame bounds [{lo:.6f}, {hi:.6f}]")


def _load_images(path, cfg) -> np.ndarray:
    if os.path.isfile(path) and path.endswith(".frst"):
        return tensor_read(path).astype(np.float64)
    if os.path.isdir(path) and any(n.endswith(".bin") for n in os.listdir(path)):
        spec = DatasetSpec(source="cifar10_binary_dir",
                           train_n=cfg.get("train_n", 50000), test_n=0,
                           seed=cfg.get("seed", 0))
        train, _ = load_dataset(path, spec)
        return train.astype(np.float64)
    names = sorted(n for n in os.listdir(path) if n.lower().endswith(".png"))
    return np.stack([png_read(os.path.join(path, n)) for n in names])[:, None]


def cmd_scatter(args) -> None:
    cfg = _read_config(args.config)
    params = _filter_params(cfg)
    images = _load_images(getattr(args, "in"), cfg)
    bank = build_bank(params, images.shape[2], images.shape[3])
    table = enumerate_paths(params.J, params.L)
    alpha = FracOrderPair(args.alpha1, args.alpha2)
    emb = scatter_batch(images, bank, alpha, table, workers=cfg.get("workers", 1))
    tensor_write(emb.tensor.astype(np.float32), args.out)
    print(f"embeddings {emb.tensor.shape} -> {args.out}")


def cmd_reduce(args) -> None:
    emb = tensor_read(getattr(args, "in")).astype(np.float64)
    if args.method == "fmf":
        table = enumerate_paths(args.j, args.l)
        grouping = {"blocks": "consecutive_blocks", "parent": "parent_path"}[args.grouping]
        from .scattering import Embedding
        alpha = FracOrderPair(1.0, 1.0)  # metadata only; fusion is alpha-independent
        out = fmf(Embedding(emb, table, alpha), FmfConfig(grouping))
    else:
        flat = emb.reshape(emb.shape[0], -1)
        if args.model and os.path.exists(os.path.join(args.model, "model.json")):
            model = pca_load(args.model)
        else:
            udim = args.udim or min(flat.shape[0] - 1, flat.shape[1])
            model = pca_fit(flat, udim, whiten=not args.no_whiten)
            if args.model:
                pca_save(model, args.model)
        out = pca_project(flat, model)
    tensor_write(np.asarray(out, np.float32), args.out)
    print(f"reduced {emb.shape} -> {out.shape} ({args.method})")


def cmd_train(args) -> None:
    from .training import TrainConfig, generate, train

    cfg = _read_config(args.config)
    emb = tensor_read(args.embeddings).astype(np.float64)
    images = tensor_read(args.images).astype(np.float64)
    rng = SeededRng(cfg.get("seed", 0))
    base_width = cfg.get("base_width", 256)
    target_hw = images.shape[2]
    if args.arch == "g1":
        model = g1_build(int(np.prod(emb.shape[1:])), target_hw, base_width, rng)
        emb = emb.reshape(emb.shape[0], -1)
    else:
        model = g2_build(emb.shape[1], emb.shape[2], target_hw, base_width, rng)
    tc = TrainConfig(
        batch_size=cfg.get("batch_size", 64),
        max_steps=cfg.get("max_steps", 20000),
        seed=cfg.get("seed", 0),
        eval_interval=cfg.get("eval_interval", 0),
        checkpoint_interval=cfg.get("checkpoint_interval", 0),
        out_dir=args.out,
    )
    curve = train(emb, images, model, tc)
    gen = generate(model, emb, tc.batch_size)
    tensor_write(gen.astype(np.float32), os.path.join(args.out, "generated.frst"))
    print(f"final loss {curve[-1]['loss']:.6f}; artifacts in {args.out}")


def cmd_eval(args) -> None:
    ref = tensor_read(args.ref).astype(np.float64)
    gen = tensor_read(args.gen).astype(np.float64)
    report = evaluate_split(ref, gen)
    report.write_csv(args.out)
    print(f"mean PSNR {report.mean_psnr:.5f} dB, mean SSIM {report.mean_ssim:.5f}")


def cmd_fuse(args) -> None:
    a = tensor_read(args.a).astype(np.float64)
    b = tensor_read(args.b).astype(np.float64)
    out = fuse(a, b, FusionConfig(args.weight))
    tensor_write(out.astype(np.float32), args.out)
    print(f"fused -> {args.out}")


def cmd_run(args) -> None:
    plan = load_plan(args.plan)
    results = run_plan(plan, args.out)
    for name, row in results.items():
        print(f"{name}: test PSNR {row['test_psnr']:.5f}  test SSIM {row['test_ssim']:.5f}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frscatter")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="decode a dataset into train.frst/test.frst")
    s.add_argument("--source", choices=["cifar10", "imagedir"], required=True)
    s.add_argument("--dir", required=True)
    s.add_argument("--train-n", dest="train_n", type=int, required=True)
    s.add_argument("--test-n", dest="test_n", type=int, required=True)
    s.add_argument("--size", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("filters", help="dump the Morlet filter bank")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_filters)

    s = sub.add_parser("scatter", help="compute scattering embeddings")
    s.add_argument("--config", required=True)
    s.add_argument("--alpha1", type=float, default=1.0)
    s.add_argument("--alpha2", type=float, default=1.0)
    s.add_argument("--in", dest="in", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scatter)

    s = sub.add_parser("reduce", help="reduce embeddings with FMF or PCA")
    s.add_argument("--method", choices=["fmf", "pca"], required=True)
    s.add_argument("--grouping", choices=["blocks", "parent"], default="blocks")
    s.add_argument("--j", type=int, help="J for FMF grouping")
    s.add_argument("--l", type=int, help="L for FMF grouping")
    s.add_argument("--udim", type=int)
    s.add_argument("--no-whiten", action="store_true")
    s.add_argument("--model", help="PCA model directory (load if present, else save)")
    s.add_argument("--in", dest="in", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("train", help="train a decoder on embeddings")
    s.add_argument("--arch", choices=["g1", "g2"], required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--embeddings", required=True)
    s.add_argument("--images", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="PSNR/SSIM report for generated images")
    s.add_argument("--ref", required=True)
    s.add_argument("--gen", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("fuse", help="convex blend of two generated image tensors")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--weight", type=float, default=0.5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("run", help="execute a full experiment plan")
    s.add_argument("--plan", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
