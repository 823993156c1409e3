"""End-to-end experiment orchestration.

A plan (JSON) names a dataset, a scattering configuration, a list of arms
(one trained decoder per fractional-order / reduction / architecture
combination), and optional fusion pairs.  Arms sharing a fractional order
share the same cached embeddings.  Every run directory receives a manifest
from which the run can be reproduced bitwise.

Plan keys::

    seed        int, master seed; arm i trains with seed XOR (i + 1)
    dataset     {"source": "frst_dir"|"cifar10_binary_dir"|"image_dir",
                 "dir": path, "train_n": N, "test_n": M, "size": H}
    scattering  {"J", "L", "sigma0", "xi0", "slant", "workers"}
    train       {"batch_size", "max_steps", "base_width", "eval_interval",
                 "eval_max_images"}
    arms        [{"name", "alpha": [a1, a2], "reduction": "fmf"|"pca",
                  "grouping", "udim", "whiten", "arch": "g1"|"g2"}]
    fusions     [{"a": arm, "b": arm, "weight": 0.5}]
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np
from PIL import Image

from . import __version__
from .datasets import DatasetSpec, load_dataset
from .filters import FilterParams, build_bank
from .metrics import FusionConfig, evaluate_split, fuse
from .nn import g1_build, g2_build
from .reduction import FmfConfig, fmf, pca_fit, pca_project, pca_save
from .scattering import Embedding, FracOrderPair, enumerate_paths, scatter_batch
from .tensorio import SeededRng, tensor_read, tensor_write

MASTER_COLUMNS = [
    "name", "alpha1", "alpha2", "reduction", "fused",
    "train_psnr", "train_ssim", "test_psnr", "test_ssim",
]


def load_plan(path) -> dict:
    with open(path) as f:
        plan = json.load(f)
    for key in ("seed", "dataset", "scattering", "train", "arms"):
        if key not in plan:
            raise ValueError(f"plan is missing required key {key!r}")
    names = [arm["name"] for arm in plan["arms"]]
    if len(set(names)) != len(names):
        raise ValueError("arm names must be unique")
    for pair in plan.get("fusions", []):
        if pair["a"] not in names or pair["b"] not in names:
            raise ValueError("fusion pair references an unknown arm")
    return plan


def _load_plan_dataset(plan):
    ds = plan["dataset"]
    if ds["source"] == "frst_dir":
        train = tensor_read(os.path.join(ds["dir"], "train.frst"))
        test = tensor_read(os.path.join(ds["dir"], "test.frst"))
        return train[: ds["train_n"]], test[: ds["test_n"]]
    spec = DatasetSpec(
        source=ds["source"], train_n=ds["train_n"], test_n=ds["test_n"],
        height=ds.get("size", 32), width=ds.get("size", 32),
        seed=plan["seed"],
    )
    return load_dataset(ds["dir"], spec)


def _filter_params(plan) -> FilterParams:
    sc = plan["scattering"]
    kwargs = {k: sc[k] for k in ("sigma0", "xi0", "slant") if k in sc}
    return FilterParams(J=sc["J"], L=sc["L"], **kwargs)


class PlanRunner:
    """Executes a plan sequentially with per-alpha embedding caching."""

    def __init__(self, plan: dict, out_dir):
        self.plan = plan
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.train_images, self.test_images = _load_plan_dataset(plan)
        h, w = self.train_images.shape[2:]
        self.params = _filter_params(plan)
        self.bank = build_bank(self.params, h, w)
        self.table = enumerate_paths(self.params.J, self.params.L)
        self.workers = plan["scattering"].get("workers", 1)
        self._emb_cache: dict[tuple, tuple] = {}
        self.results: dict[str, dict] = {}
        self.generated: dict[str, tuple] = {}

    def embeddings_for(self, alpha: FracOrderPair):
        key = (alpha.alpha1, alpha.alpha2)
        if key not in self._emb_cache:
            train = scatter_batch(
                self.train_images.astype(np.float64), self.bank, alpha, self.table,
                workers=self.workers,
            )
            test = scatter_batch(
                self.test_images.astype(np.float64), self.bank, alpha, self.table,
                workers=self.workers,
            )
            self._emb_cache[key] = (train, test)
        return self._emb_cache[key]

    def run_arm(self, index: int) -> dict:
        arm = self.plan["arms"][index]
        alpha = FracOrderPair(*arm["alpha"])
        arm_dir = os.path.join(self.out_dir, arm["name"])
        os.makedirs(arm_dir, exist_ok=True)
        emb_train, emb_test = self.embeddings_for(alpha)
        tensor_write(emb_train.tensor.astype(np.float32),
                     os.path.join(arm_dir, "embeddings_train.frst"))
        tensor_write(emb_test.tensor.astype(np.float32),
                     os.path.join(arm_dir, "embeddings_test.frst"))

        seed = self.plan["seed"] ^ (index + 1)
        tc = self.plan["train"]
        base_width = tc.get("base_width", 256)
        target_hw = self.train_images.shape[2]

        if arm["reduction"] == "pca":
            flat_train = emb_train.tensor.reshape(emb_train.tensor.shape[0], -1)
            flat_test = emb_test.tensor.reshape(emb_test.tensor.shape[0], -1)
            udim = arm.get("udim", min(flat_train.shape[0] - 1, flat_train.shape[1]))
            model_pca = pca_fit(flat_train, udim, whiten=arm.get("whiten", True))
            pca_save(model_pca, os.path.join(arm_dir, "pca_model"))
            z_train = pca_project(flat_train, model_pca)
            z_test = pca_project(flat_test, model_pca)
            in_train, in_test = z_train, z_test
        else:
            cfg = FmfConfig(arm.get("grouping", "consecutive_blocks"))
            in_train = fmf(emb_train, cfg)
            in_test = fmf(Embedding(emb_test.tensor, self.table, alpha), cfg)
        tensor_write(np.asarray(in_train, np.float32), os.path.join(arm_dir, "reduced_train.frst"))
        tensor_write(np.asarray(in_test, np.float32), os.path.join(arm_dir, "reduced_test.frst"))

        rng = SeededRng(seed)
        if arm["arch"] == "g1":
            model = g1_build(in_train.shape[-1] if in_train.ndim == 2
                             else int(np.prod(in_train.shape[1:])),
                             target_hw, base_width, rng)
        else:
            model = g2_build(in_train.shape[1], in_train.shape[2], target_hw, base_width, rng)

        from .training import TrainConfig, generate, train

        cfg_train = TrainConfig(
            batch_size=tc.get("batch_size", 64),
            max_steps=tc.get("max_steps", 20000),
            seed=seed,
            eval_interval=tc.get("eval_interval", 0),
            eval_max_images=tc.get("eval_max_images", 64),
            out_dir=os.path.join(arm_dir, "ckpt"),
        )
        train(in_train, self.train_images.astype(np.float64), model, cfg_train,
              test_embeddings=in_test,
              test_images=self.test_images.astype(np.float64))

        gen_train = generate(model, in_train, cfg_train.batch_size)
        gen_test = generate(model, in_test, cfg_train.batch_size)
        tensor_write(gen_train.astype(np.float32), os.path.join(arm_dir, "generated_train.frst"))
        tensor_write(gen_test.astype(np.float32), os.path.join(arm_dir, "generated_test.frst"))
        self.generated[arm["name"]] = (gen_train, gen_test)

        rep_train = evaluate_split(self.train_images.astype(np.float64), gen_train)
        rep_test = evaluate_split(self.test_images.astype(np.float64), gen_test)
        rep_train.write_csv(os.path.join(arm_dir, "report_train.csv"))
        rep_test.write_csv(os.path.join(arm_dir, "report_test.csv"))

        row = {
            "name": arm["name"], "alpha1": alpha.alpha1, "alpha2": alpha.alpha2,
            "reduction": arm["reduction"], "fused": "No",
            "train_psnr": rep_train.mean_psnr, "train_ssim": rep_train.mean_ssim,
            "test_psnr": rep_test.mean_psnr, "test_ssim": rep_test.mean_ssim,
        }
        self.results[arm["name"]] = row
        self._write_manifest(arm_dir, {"arm": arm, "seed": seed})
        _grid_png(self.train_images, os.path.join(arm_dir, "grid_train_original.png"))
        _grid_png(gen_train, os.path.join(arm_dir, "grid_train_generated.png"))
        _grid_png(self.test_images, os.path.join(arm_dir, "grid_test_original.png"))
        _grid_png(gen_test, os.path.join(arm_dir, "grid_test_generated.png"))
        return row

    def run_fusions(self) -> list[dict]:
        rows = []
        for pair in self.plan.get("fusions", []):
            a, b = pair["a"], pair["b"]
            cfg = FusionConfig(pair.get("weight", 0.5))
            fused_train = fuse(self.generated[a][0], self.generated[b][0], cfg)
            fused_test = fuse(self.generated[a][1], self.generated[b][1], cfg)
            rep_train = evaluate_split(self.train_images.astype(np.float64), fused_train)
            rep_test = evaluate_split(self.test_images.astype(np.float64), fused_test)
            ra = self.results[a]
            row = {
                "name": f"{a}+{b}", "alpha1": ra["alpha1"], "alpha2": ra["alpha2"],
                "reduction": ra["reduction"], "fused": "Yes",
                "train_psnr": rep_train.mean_psnr, "train_ssim": rep_train.mean_ssim,
                "test_psnr": rep_test.mean_psnr, "test_ssim": rep_test.mean_ssim,
            }
            rows.append(row)
            self.results[row["name"]] = row
        return rows

    def reference_row(self) -> dict | None:
        candidates = [
            r for r in self.results.values()
            if r["fused"] == "No" and r["alpha1"] == 1.0 and r["alpha2"] == 1.0
            and r["reduction"] == "fmf"
        ] or [
            r for r in self.results.values()
            if r["fused"] == "No" and r["alpha1"] == 1.0 and r["alpha2"] == 1.0
        ]
        return candidates[0] if candidates else None

    def write_reports(self) -> None:
        rows = list(self.results.values())
        with open(os.path.join(self.out_dir, "master.csv"), "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(MASTER_COLUMNS)
            for row in rows:
                w.writerow([row[c] if isinstance(row[c], str) else repr(row[c])
                            for c in MASTER_COLUMNS])
        ref = self.reference_row()
        if ref is not None:
            with open(os.path.join(self.out_dir, "improvements.csv"), "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["name", "fused", "train_psnr_pct", "test_psnr_pct",
                            "train_ssim_pct", "test_ssim_pct"])
                for row in rows:
                    w.writerow([row["name"], row["fused"]] + [
                        repr(round(100.0 * (row[k] - ref[k]) / ref[k], 1))
                        for k in ("train_psnr", "test_psnr", "train_ssim", "test_ssim")
                    ])

    def _write_manifest(self, directory, extra=None) -> None:
        manifest = dict(self.plan)
        manifest["frscatter_version"] = __version__
        if extra:
            manifest.update(extra)
        with open(os.path.join(directory, "manifest.json"), "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)

    def run(self) -> dict:
        self._write_manifest(self.out_dir)
        for i in range(len(self.plan["arms"])):
            self.run_arm(i)
        self.run_fusions()
        self.write_reports()
        return self.results


def run_plan(plan: dict, out_dir) -> dict:
    """Run every arm, the fusion study, and the reports.  Returns all rows."""
    return PlanRunner(plan, out_dir).run()


def run_gsn_baseline(plan: dict, out_dir, arm_name: str) -> dict:
    """Run a single PCA-reduction arm (the ScatNet -> PCA -> G1 baseline)."""
    runner = PlanRunner(plan, out_dir)
    index = [a["name"] for a in plan["arms"]].index(arm_name)
    if plan["arms"][index]["reduction"] != "pca":
        raise ValueError("baseline arm must use PCA reduction")
    return runner.run_arm(index)


def run_gfrsn_arm(plan: dict, out_dir, arm_name: str) -> dict:
    """Run a single FMF-reduction arm (FrScatNet -> FMF -> G2)."""
    runner = PlanRunner(plan, out_dir)
    index = [a["name"] for a in plan["arms"]].index(arm_name)
    return runner.run_arm(index)


def _grid_png(images: np.ndarray, path, rows: int = 8, cols: int = 8) -> None:
    """Tile the first rows*cols images into one PNG grid."""
    images = images.reshape(images.shape[0], images.shape[-2], images.shape[-1])
    n = min(images.shape[0], rows * cols)
    rows = max(1, min(rows, math.ceil(n / cols)))
    h, w = images.shape[1:]
    grid = np.zeros((rows * h, cols * w))
    for i in range(n):
        r, c = divmod(i, cols)
        if r >= rows:
            break
        grid[r * h:(r + 1) * h, c * w:(c + 1) * w] = images[i]
    arr = np.clip(grid, 0.0, 1.0)
    Image.fromarray(np.round(arr * 255.0).astype(np.uint8), mode="L").save(path)
