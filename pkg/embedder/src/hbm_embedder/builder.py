"""Corpus ingestion and HBE1 output.

The corpus is one JSON object per line: {"id": int, "text": str,
"label": 0|1}. Output follows the HBE1 contract:

    magic "HBE1" | u32 version=1 | u32 embed_dim | u32 doc_count
    per document: u32 id | u32 label | u32 sentence_count |
    sentence_count * embed_dim little-endian float32

plus a ``<path>.sentences.json`` sidecar mapping doc id to its sentence
texts. Documents with no sentences after cleaning are skipped with a
warning. Output order follows input order.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import numpy as np

from .encoders import embed_document
from .splitter import split_sentences

MAGIC = b"HBE1"
VERSION = 1
_U32 = np.dtype("<u4")
_F32 = np.dtype("<f4")


@dataclass
class RawDocument:
    doc_id: int
    text: str
    label: int


def read_corpus(path: str) -> list[RawDocument]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                docs.append(RawDocument(int(obj["id"]), obj["text"], int(obj["label"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: bad corpus record: {exc}") from None
    return docs


def build_dataset(corpus: list[RawDocument], out_path: str, encoder, warn=None) -> int:
    """Embed the corpus and write the dataset plus sidecar; returns the
    number of documents written."""
    if warn is None:
        warn = lambda msg: print(f"warning: {msg}", file=sys.stderr)

    encoded = []
    texts = {}
    for doc in corpus:
        if not doc.text:
            warn(f"doc {doc.doc_id}: empty text, skipped")
            continue
        sentences = split_sentences(doc.text)
        if not sentences:
            warn(f"doc {doc.doc_id}: no sentences after cleaning, skipped")
            continue
        matrix = embed_document(sentences, encoder)
        encoded.append((doc, matrix))
        texts[str(doc.doc_id)] = sentences

    chunks = [MAGIC, np.array([VERSION, encoder.dim, len(encoded)], dtype=_U32).tobytes()]
    for doc, matrix in encoded:
        chunks.append(np.array([doc.doc_id, doc.label, matrix.shape[0]], dtype=_U32).tobytes())
        chunks.append(np.ascontiguousarray(matrix, dtype=_F32).tobytes())
    with open(out_path, "wb") as f:
        f.write(b"".join(chunks))

    with open(out_path + ".sentences.json", "w", encoding="utf-8") as f:
        json.dump(texts, f, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return len(encoded)
