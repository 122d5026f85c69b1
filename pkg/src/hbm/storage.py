"""Bit-exact file formats.

Embedded datasets use the HBE1 container:

    magic "HBE1" | u32 version=1 | u32 embed_dim | u32 doc_count
    per document: u32 id | u32 label | u32 sentence_count | then
    sentence_count * embed_dim little-endian float32

Sentence texts live in a JSON sidecar ``<path>.sentences.json`` mapping doc
id to a list of strings. Checkpoints are a "HBC1" magic, a u32 header
length, a canonical-JSON header (config, metadata, tensor directory with
name/shape/byte offset) and a raw little-endian float32 payload. Both
formats round-trip bitwise and are endianness-fixed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, CorruptionError, DataError, FormatError
from .model import LayerParams, ModelConfig, ModelParams, named_arrays

DATASET_MAGIC = b"HBE1"
DATASET_VERSION = 1
CHECKPOINT_MAGIC = b"HBC1"
CHECKPOINT_VERSION = 1

_U32 = np.dtype("<u4")
_F32 = np.dtype("<f4")


@dataclass
class Document:
    doc_id: int
    label: int
    embedding: np.ndarray  # s x embed_dim float32
    sentences: list[str] | None = None

    @property
    def sentence_count(self) -> int:
        return self.embedding.shape[0]


@dataclass
class EmbeddedDataset:
    embed_dim: int
    documents: list[Document] = field(default_factory=list)

    def validate(self) -> "EmbeddedDataset":
        for doc in self.documents:
            if doc.embedding.ndim != 2 or doc.embedding.shape[1] != self.embed_dim:
                raise DataError(
                    f"doc {doc.doc_id}: embedding shape {doc.embedding.shape} "
                    f"does not match embed_dim {self.embed_dim}"
                )
            if doc.embedding.shape[0] < 1:
                raise DataError(f"doc {doc.doc_id}: needs at least one sentence")
            if doc.label < 0:
                raise DataError(f"doc {doc.doc_id}: negative label {doc.label}")
        return self

    def labels(self) -> np.ndarray:
        return np.array([d.label for d in self.documents], dtype=np.int64)


def sidecar_path(path: str) -> str:
    return path + ".sentences.json"


def write_dataset(dataset: EmbeddedDataset, path: str) -> None:
    dataset.validate()
    chunks = [DATASET_MAGIC]
    chunks.append(np.array([DATASET_VERSION, dataset.embed_dim, len(dataset.documents)],
                           dtype=_U32).tobytes())
    for doc in dataset.documents:
        chunks.append(np.array([doc.doc_id, doc.label, doc.sentence_count], dtype=_U32).tobytes())
        chunks.append(np.ascontiguousarray(doc.embedding, dtype=_F32).tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(chunks))

    texts = {str(d.doc_id): d.sentences for d in dataset.documents if d.sentences is not None}
    if texts:
        with open(sidecar_path(path), "w", encoding="utf-8") as f:
            json.dump(texts, f, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


class _Cursor:
    def __init__(self, buf: bytes, what: str):
        self.buf = buf
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptionError(f"{self.what}: truncated (wanted {n} bytes at {self.pos})")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, count: int = 1) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype=_U32)


def read_dataset(path: str) -> EmbeddedDataset:
    with open(path, "rb") as f:
        cur = _Cursor(f.read(), path)
    if cur.take(4) != DATASET_MAGIC:
        raise FormatError(f"{path}: bad magic, not an HBE1 dataset")
    version, embed_dim, count = (int(x) for x in cur.u32(3))
    if version != DATASET_VERSION:
        raise FormatError(f"{path}: unsupported dataset version {version}")
    docs = []
    for _ in range(count):
        doc_id, label, s = (int(x) for x in cur.u32(3))
        raw = cur.take(4 * s * embed_dim)
        emb = np.frombuffer(raw, dtype=_F32).reshape(s, embed_dim).copy()
        docs.append(Document(doc_id=doc_id, label=label, embedding=emb))
    if cur.pos != len(cur.buf):
        raise CorruptionError(f"{path}: {len(cur.buf) - cur.pos} trailing bytes")

    side = sidecar_path(path)
    if os.path.exists(side):
        with open(side, encoding="utf-8") as f:
            texts = json.load(f)
        for doc in docs:
            doc.sentences = texts.get(str(doc.doc_id))
    return EmbeddedDataset(embed_dim=embed_dim, documents=docs).validate()


def pad_to_m(doc: Document, m: int) -> np.ndarray:
    """m x embed_dim matrix: real rows first, zero rows after; documents
    longer than m keep their first m sentences."""
    s, d = doc.embedding.shape
    out = np.zeros((m, d), dtype=np.float32)
    keep = min(s, m)
    out[:keep] = doc.embedding[:keep]
    return out


@dataclass
class Checkpoint:
    config: ModelConfig
    params: ModelParams
    meta: dict


def _config_to_dict(config: ModelConfig) -> dict:
    return {
        "embed_dim": config.embed_dim,
        "max_sentences": config.max_sentences,
        "layers": config.layers,
        "heads": config.heads,
        "ffn_mult": config.ffn_mult,
        "num_classes": config.num_classes,
        "dropout_p": config.dropout_p,
        "layernorm_eps": config.layernorm_eps,
        "mask_padding": config.mask_padding,
        "saliency_layer": config.saliency_layer,
    }


def _config_from_dict(d: dict) -> ModelConfig:
    try:
        return ModelConfig(**d).validate()
    except TypeError as exc:
        raise FormatError(f"checkpoint config is malformed: {exc}") from None


def save_checkpoint(path: str, config: ModelConfig, params: ModelParams, meta: dict | None = None) -> None:
    tensors = []
    payload = []
    offset = 0
    for name, arr in named_arrays(params):
        raw = np.ascontiguousarray(arr, dtype=_F32).tobytes()
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payload.append(raw)
        offset += len(raw)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "config": _config_to_dict(config),
        "meta": meta or {},
        "tensors": tensors,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(np.array([len(head)], dtype=_U32).tobytes())
        f.write(head)
        f.write(b"".join(payload))


def _params_skeleton(config: ModelConfig, fetch) -> ModelParams:
    """Build ModelParams by asking fetch(name, shape) for every tensor."""
    d, h, n = config.embed_dim, config.heads, config.ffn_mult
    layers = []
    for i in range(config.layers):
        layers.append(
            LayerParams(
                wq=[fetch(f"layer{i}.head{j}.wq", (d, d)) for j in range(h)],
                wk=[fetch(f"layer{i}.head{j}.wk", (d, d)) for j in range(h)],
                wv=[fetch(f"layer{i}.head{j}.wv", (d, d)) for j in range(h)],
                wo=fetch(f"layer{i}.wo", (h * d, d)),
                attn_gain=fetch(f"layer{i}.attn_norm.gain", (d,)),
                attn_bias=fetch(f"layer{i}.attn_norm.bias", (d,)),
                ffn_expand=fetch(f"layer{i}.ffn.expand", (d, n * d)),
                ffn_contract=fetch(f"layer{i}.ffn.contract", (n * d, d)),
                ffn_gain=fetch(f"layer{i}.ffn_norm.gain", (d,)),
                ffn_bias=fetch(f"layer{i}.ffn_norm.bias", (d,)),
            )
        )
    return ModelParams(
        layers=layers,
        pooler=fetch("pooler.wt", (d, d)),
        classifier=fetch("classifier.w", (d, config.num_classes)),
    )


def load_checkpoint(path: str, expected_config: ModelConfig | None = None) -> Checkpoint:
    with open(path, "rb") as f:
        cur = _Cursor(f.read(), path)
    if cur.take(4) != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic, not an HBC1 checkpoint")
    head_len = int(cur.u32(1)[0])
    try:
        header = json.loads(cur.take(head_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptionError(f"{path}: unreadable header: {exc}") from None
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {header.get('format_version')}")
    config = _config_from_dict(header["config"])
    if expected_config is not None and _config_to_dict(expected_config) != header["config"]:
        raise ConfigError(f"{path}: checkpoint config does not match the requested config")

    payload = cur.buf[cur.pos :]
    directory = {t["name"]: t for t in header["tensors"]}

    def fetch(name: str, shape: tuple[int, ...]) -> np.ndarray:
        entry = directory.pop(name, None)
        if entry is None:
            raise CorruptionError(f"{path}: missing tensor {name}")
        if tuple(entry["shape"]) != shape:
            raise CorruptionError(
                f"{path}: tensor {name} has shape {entry['shape']}, expected {list(shape)}"
            )
        size = 4 * int(np.prod(shape))
        start = entry["offset"]
        if start + size > len(payload):
            raise CorruptionError(f"{path}: payload truncated at tensor {name}")
        return np.frombuffer(payload[start : start + size], dtype=_F32).reshape(shape).copy()

    params = _params_skeleton(config, fetch)
    if directory:
        raise CorruptionError(f"{path}: unexpected extra tensors {sorted(directory)}")
    return Checkpoint(config=config, params=params, meta=header.get("meta", {}))
