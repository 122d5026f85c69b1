"""Training protocol: subsampling, batched fine-tuning with class-weighted
loss, loss-based rollback, prediction, and the seeded experiment grid.

Subsampling first shuffles the whole dataset with the split seed, holds out
the first ``train_pool_size`` indices as the training pool and uses
everything else as the test set; the training set is the first ``n`` of the
pool, so smaller training sizes nest inside larger ones for the same seed
and the test set stays fixed.

Rollback keeps the parameters from the epoch with the lowest mean training
loss (earliest epoch on ties), standing in for validation-based early
stopping when no validation data exists.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError
from .metrics import auc, class_weights, weighted_ce
from .model import (
    ModelConfig,
    ModelParams,
    accumulate_params,
    backward,
    clone_params,
    forward,
    init_params,
    zeros_like_params,
)
from .optim import adam_init, adam_step
from .rng import Rng
from .storage import Document, EmbeddedDataset, pad_to_m

POSITIVE_CLASS = 1


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 4
    lr: float = 2e-5
    seed: int = 0
    rollback: bool = True
    shuffle: bool = True
    adam_eps: float = 1e-8

    def validate(self) -> "TrainConfig":
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        return self


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    checkpoint_ref: str | None = None


@dataclass
class SplitSpec:
    train_pool_size: int = 200
    train_size: int = 200
    seed: int = 0

    def validate(self) -> "SplitSpec":
        if not 1 <= self.train_size <= self.train_pool_size:
            raise ConfigError(
                f"train_size {self.train_size} must be in 1..{self.train_pool_size}"
            )
        return self


def subsample(
    dataset: EmbeddedDataset, spec: SplitSpec
) -> tuple[list[Document], list[Document]]:
    """Seeded split into (n training documents, fixed test set)."""
    spec.validate()
    total = len(dataset.documents)
    if total <= spec.train_pool_size:
        raise ConfigError(
            f"dataset has {total} documents; need more than the pool size "
            f"{spec.train_pool_size}"
        )
    perm = Rng(spec.seed).permutation(total)
    train_idx = perm[: spec.train_size]
    test_idx = perm[spec.train_pool_size :]
    docs = dataset.documents
    return [docs[i] for i in train_idx], [docs[i] for i in test_idx]


def _prepare(docs: list[Document], config: ModelConfig):
    mats = [pad_to_m(d, config.max_sentences) for d in docs]
    reals = [min(d.sentence_count, config.max_sentences) for d in docs]
    labels = [d.label for d in docs]
    return mats, reals, labels


def train(
    train_docs: list[Document], config: ModelConfig, tconf: TrainConfig
) -> tuple[ModelParams, list[EpochRecord]]:
    """Fit on the training documents; returns (params, per-epoch history).

    With rollback enabled the returned parameters are the end-of-epoch
    snapshot from the epoch with the lowest mean training loss.
    """
    config.validate()
    tconf.validate()
    if not train_docs:
        raise ConfigError("training set is empty")
    mats, reals, labels = _prepare(train_docs, config)
    for doc, mat in zip(train_docs, mats):
        if mat.shape[1] != config.embed_dim:
            raise DataError(
                f"doc {doc.doc_id}: embedding width {mat.shape[1]} != model {config.embed_dim}"
            )
    counts = np.bincount(labels, minlength=config.num_classes)
    weights = class_weights(counts)  # rejects any absent class

    rng = Rng(tconf.seed)
    params = init_params(config, rng)
    state = adam_init(params, lr=tconf.lr, eps=tconf.adam_eps)

    n = len(train_docs)
    history: list[EpochRecord] = []
    best_loss = np.inf
    best_params = None

    for epoch in range(tconf.epochs):
        order = rng.permutation(n) if tconf.shuffle else np.arange(n)
        loss_sum = 0.0
        for start in range(0, n, tconf.batch_size):
            batch = order[start : start + tconf.batch_size]
            grads = zeros_like_params(params)
            inv = 1.0 / len(batch)
            for i in batch:
                trace = forward(
                    mats[i], params, config, rng=rng, training=True, real_count=reals[i]
                )
                loss, dlogits = weighted_ce(trace.logits, labels[i], weights)
                loss_sum += loss
                accumulate_params(grads, backward(trace, dlogits * inv))
            params, state = adam_step(params, grads, state)
        mean_loss = loss_sum / n
        history.append(EpochRecord(epoch=epoch, mean_loss=mean_loss))
        if tconf.rollback and mean_loss < best_loss:
            best_loss = mean_loss
            best_params = clone_params(params)

    if tconf.rollback:
        return best_params, history
    return params, history


def predict(params: ModelParams, config: ModelConfig, docs: list[Document]) -> np.ndarray:
    """Positive-class probability per document, dropout disabled."""
    mats, reals, _ = _prepare(docs, config)
    scores = np.empty(len(docs), dtype=np.float64)
    for i, (mat, real) in enumerate(zip(mats, reals)):
        if mat.shape[1] != config.embed_dim:
            raise DataError(
                f"doc {docs[i].doc_id}: embedding width {mat.shape[1]} != model {config.embed_dim}"
            )
        trace = forward(mat, params, config, training=False, real_count=real)
        t = trace.logits.astype(np.float64)
        e = np.exp(t - t.max())
        scores[i] = e[POSITIVE_CLASS] / e.sum()
    return scores


@dataclass
class CellResult:
    train_size: int
    seeds: list[int]
    aucs: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def std(self) -> float:
        return float(np.std(self.aucs, ddof=1)) if len(self.aucs) > 1 else 0.0

    def cell_text(self) -> str:
        return f"{self.mean:.4f}±{self.std:.3f}"


@dataclass
class ExperimentResult:
    cells: list[CellResult] = field(default_factory=list)

    def table_text(self) -> str:
        lines = [f"n={c.train_size}\t{c.cell_text()}" for c in self.cells]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "cells": [
                {
                    "n": c.train_size,
                    "seeds": c.seeds,
                    "aucs": c.aucs,
                    "mean": c.mean,
                    "std": c.std,
                    "cell": c.cell_text(),
                }
                for c in self.cells
            ]
        }


def _run_cell(dataset, config, tconf, pool_size, n, seed) -> float:
    train_docs, test_docs = subsample(
        dataset, SplitSpec(train_pool_size=pool_size, train_size=n, seed=seed)
    )
    params, _ = train(train_docs, config, replace(tconf, seed=seed))
    scores = predict(params, config, test_docs)
    labels = np.array([d.label for d in test_docs])
    return auc(scores, labels)


def run_experiment(
    dataset: EmbeddedDataset,
    n_values: list[int],
    seeds: list[int],
    config: ModelConfig,
    tconf: TrainConfig,
    pool_size: int = 200,
    threads: int | None = None,
) -> ExperimentResult:
    """AUC grid over training sizes x seeds; one training run per cell.

    Cells are independent, so they may run concurrently (capped by
    ``threads`` or the HBM_THREADS environment variable); results are merged
    by (n, seed) key and the output does not depend on scheduling.
    """
    if threads is None:
        threads = int(os.environ.get("HBM_THREADS", "1"))
    jobs = [(n, seed) for n in n_values for seed in seeds]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                (n, seed): pool.submit(_run_cell, dataset, config, tconf, pool_size, n, seed)
                for n, seed in jobs
            }
            results = {key: fut.result() for key, fut in futures.items()}
    else:
        results = {
            (n, seed): _run_cell(dataset, config, tconf, pool_size, n, seed)
            for n, seed in jobs
        }

    cells = [
        CellResult(
            train_size=n,
            seeds=list(seeds),
            aucs=[results[(n, seed)] for seed in seeds],
        )
        for n in n_values
    ]
    return ExperimentResult(cells=cells)
