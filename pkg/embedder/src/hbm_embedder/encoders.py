"""Frozen sentence encoders.

An encoder exposes ``dim``, ``token_limit`` and ``encode_sentence(text)``
returning one vector: the average of per-token embeddings, with the token
sequence truncated to the encoder's limit first. Encoders are never
trained or mutated here.

``stub`` is a deterministic test encoder (one-hot per token, token id from
a fixed 64-bit FNV-1a hash); ``hf:<model>`` wraps a pretrained transformer
through the optional ``transformers`` dependency.
"""

from __future__ import annotations

import re

import numpy as np

_TOKEN = re.compile(r"\w+", re.UNICODE)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


def tokenize(sentence: str) -> list[str]:
    return _TOKEN.findall(sentence)


class StubEncoder:
    """One-hot token embeddings: token id = hash(token) mod dim (or a fixed
    vocabulary for tests); sentence vector = mean of token one-hots."""

    name = "stub"

    def __init__(self, dim: int = 16, token_limit: int = 512, vocab: dict[str, int] | None = None):
        if dim < 1:
            raise ValueError(f"encoder dim must be positive, got {dim}")
        self.dim = dim
        self.token_limit = token_limit
        self.vocab = vocab

    def token_id(self, token: str) -> int:
        if self.vocab is not None and token in self.vocab:
            return self.vocab[token] % self.dim
        return _fnv1a64(token.encode("utf-8")) % self.dim

    def encode_sentence(self, sentence: str) -> np.ndarray:
        tokens = tokenize(sentence)[: self.token_limit]
        out = np.zeros(self.dim, dtype=np.float64)
        if not tokens:
            return out.astype(np.float32)
        for tok in tokens:
            out[self.token_id(tok)] += 1.0
        return (out / len(tokens)).astype(np.float32)


class HfEncoder:
    """Mean of last-hidden-state token embeddings from a frozen pretrained
    transformer. Requires the ``hf`` extra; weights are never updated."""

    def __init__(self, model_name: str):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.name = f"hf:{model_name}"
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModel.from_pretrained(model_name)
        self.model.eval()
        for p in self.model.parameters():
            p.requires_grad_(False)
        self.dim = int(self.model.config.hidden_size)
        self.token_limit = int(self.tokenizer.model_max_length)

    def encode_sentence(self, sentence: str) -> np.ndarray:
        enc = self.tokenizer(
            sentence, truncation=True, max_length=self.token_limit, return_tensors="pt"
        )
        with self._torch.no_grad():
            hidden = self.model(**enc).last_hidden_state[0]
        return hidden.mean(dim=0).numpy().astype(np.float32)


def load_encoder(spec: str, dim: int = 16, token_limit: int = 512):
    """'stub' or 'hf:<model name>'."""
    if spec == "stub":
        return StubEncoder(dim=dim, token_limit=token_limit)
    if spec.startswith("hf:"):
        return HfEncoder(spec[3:])
    raise ValueError(f"unknown encoder {spec!r}; use 'stub' or 'hf:<model>'")


def embed_document(sentences: list[str], encoder) -> np.ndarray:
    """s x dim matrix, one encoded row per sentence."""
    if not sentences:
        raise ValueError("cannot embed a document with no sentences")
    rows = [encoder.encode_sentence(s) for s in sentences]
    return np.stack(rows).astype(np.float32)
