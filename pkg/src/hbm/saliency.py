"""Salient-sentence inference from attention matrices, and annotation
bundle export for the labeling UI.

A sentence's saliency is the column sum of an attention matrix: the total
attention it receives from every sentence (padding rows included, so the
scores over all m columns always sum to m). A sentence is salient when its
score exceeds ``ratio`` times the maximum; the argmax sentence is always
salient. Scores and flags are reported only for real (non-padding)
sentences, and the maximum is taken over real sentences only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ExportError, ShapeError
from .model import ModelConfig, ModelParams, forward
from .storage import Document, pad_to_m

DEFAULT_RATIO = 0.9
BUNDLE_VERSION = 1


def saliency_scores(attn: np.ndarray, real_count: int) -> np.ndarray:
    """Column sums over all rows, reported for the first real_count columns."""
    if attn.ndim != 2 or attn.shape[0] != attn.shape[1]:
        raise ShapeError(f"attention matrix must be square, got {attn.shape}")
    if not 0 <= real_count <= attn.shape[0]:
        raise ShapeError(f"real_count {real_count} out of range for {attn.shape[0]} sentences")
    return attn.astype(np.float64).sum(axis=0)[:real_count]


def select_salient(scores: np.ndarray, ratio: float = DEFAULT_RATIO) -> set[int]:
    """Indices whose score/max(score) exceeds ratio, plus the argmax itself."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise DataError("no scores to select from")
    top = float(s.max())
    if top <= 0.0:
        raise DataError("degenerate saliency scores: no positive mass")
    chosen = {int(j) for j in np.nonzero(s > ratio * top)[0]}
    chosen.add(int(np.argmax(s)))
    return chosen


@dataclass
class SaliencyReport:
    doc_id: int
    scores: list[float]
    salient: list[bool]
    ratio: float
    predicted_class: int
    predicted_prob: float
    sentences: list[str] | None = None
    missing_texts: bool = False

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "ratio": self.ratio,
            "predicted_class": self.predicted_class,
            "predicted_prob": self.predicted_prob,
            "missing_texts": self.missing_texts,
            "sentences": [
                {
                    "index": j,
                    "text": None if self.sentences is None else self.sentences[j],
                    "score": self.scores[j],
                    "salient": self.salient[j],
                }
                for j in range(len(self.scores))
            ],
        }


def explain(
    document: Document,
    params: ModelParams,
    config: ModelConfig,
    ratio: float = DEFAULT_RATIO,
) -> SaliencyReport:
    """Saliency report for one document using the configured attention layer
    (heads averaged), with the model's prediction attached."""
    mat = pad_to_m(document, config.max_sentences)
    real = min(document.sentence_count, config.max_sentences)
    trace = forward(mat, params, config, training=False, real_count=real)

    heads = trace.attention.layers[config.saliency_layer]
    attn = np.mean([h.astype(np.float64) for h in heads], axis=0)
    scores = saliency_scores(attn, real)
    chosen = select_salient(scores, ratio)

    t = trace.logits.astype(np.float64)
    e = np.exp(t - t.max())
    probs = e / e.sum()
    pred = int(np.argmax(t))

    texts = document.sentences
    missing = texts is None or len(texts) < real
    return SaliencyReport(
        doc_id=document.doc_id,
        scores=[float(x) for x in scores],
        salient=[j in chosen for j in range(real)],
        ratio=ratio,
        predicted_class=pred,
        predicted_prob=float(probs[pred]),
        sentences=None if missing else list(texts[:real]),
        missing_texts=missing,
    )


def bundle_dict(
    reports: list[SaliencyReport],
    documents: dict[int, Document],
    condition: str,
    label_options: list[str],
    include_truth: bool = True,
) -> dict:
    """Annotation bundle consumed by the labeling UI. The plain condition
    carries the same documents with every salient flag stripped."""
    if condition not in ("highlight", "plain"):
        raise ExportError(f"condition must be 'highlight' or 'plain', got {condition!r}")
    docs = []
    for rep in reports:
        doc = documents.get(rep.doc_id)
        if doc is None:
            raise ExportError(f"report references unknown doc id {rep.doc_id}")
        entry = {
            "id": rep.doc_id,
            "label_options": list(label_options),
            "sentences": [
                {
                    "text": rep.sentences[j] if rep.sentences is not None else "",
                    "score": rep.scores[j],
                    "salient": bool(rep.salient[j]) if condition == "highlight" else False,
                }
                for j in range(len(rep.scores))
            ],
        }
        if include_truth:
            entry["truth"] = doc.label
        docs.append(entry)
    return {"version": BUNDLE_VERSION, "condition": condition, "docs": docs}


def export_bundle(
    reports: list[SaliencyReport],
    documents: dict[int, Document],
    condition: str,
    path: str,
    label_options: list[str],
    include_truth: bool = True,
) -> dict:
    bundle = bundle_dict(reports, documents, condition, label_options, include_truth)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(bundle, f, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return bundle


def read_bundle(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
