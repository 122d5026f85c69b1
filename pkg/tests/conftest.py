import numpy as np
import pytest

import hbm
from hbm.model import LayerParams, ModelParams, named_arrays


def build_params(config, seed, w_std=0.5, dtype=np.float64):
    """Hand-built parameters with weights large enough that every ReLU
    pre-activation stays away from zero (needed for valid finite
    differences). Values are float32-representable."""
    rng = hbm.Rng(seed)
    d, h, n = config.embed_dim, config.heads, config.ffn_mult

    def w(shape):
        return rng.normal(int(np.prod(shape))).reshape(shape) * w_std

    def gain():
        return 1.0 + 0.1 * rng.normal(d)

    def bias():
        return 0.1 * rng.normal(d)

    layers = []
    for _ in range(config.layers):
        layers.append(
            LayerParams(
                wq=[w((d, d)) for _ in range(h)],
                wk=[w((d, d)) for _ in range(h)],
                wv=[w((d, d)) for _ in range(h)],
                wo=w((h * d, d)),
                attn_gain=gain(),
                attn_bias=bias(),
                ffn_expand=w((d, n * d)),
                ffn_contract=w((n * d, d)),
                ffn_gain=gain(),
                ffn_bias=bias(),
            )
        )
    params = ModelParams(layers=layers, pooler=w((d, d)), classifier=w((d, config.num_classes)))
    for _, a in named_arrays(params):
        a[...] = a.astype(np.float32).astype(dtype)
    return params


def make_separable_dataset(n_docs=20, embed_dim=16, sentences=4, sig_scale=4.0,
                           noise=0.1, seed=7):
    """Synthetic binary dataset that is linearly separable after mean
    pooling: each document carries +/- sig_scale along a fixed unit
    direction in exactly one sentence vector; everything else is small
    noise."""
    rng = hbm.Rng(seed)
    u = rng.normal(embed_dim)
    u /= np.linalg.norm(u)
    docs = []
    for i in range(n_docs):
        label = i % 2
        emb = rng.normal(sentences * embed_dim).reshape(sentences, embed_dim) * noise
        row = int(rng.uniform(1)[0] * sentences)
        emb[row] += (1.0 if label == 1 else -1.0) * sig_scale * u
        docs.append(hbm.Document(doc_id=i, label=label, embedding=emb.astype(np.float32)))
    return hbm.EmbeddedDataset(embed_dim=embed_dim, documents=docs)


def make_random_dataset(n_docs, embed_dim=4, max_sentences=3, seed=5, with_texts=False):
    """Unstructured labeled dataset for protocol and format tests."""
    rng = hbm.Rng(seed)
    docs = []
    for i in range(n_docs):
        s = 1 + int(rng.uniform(1)[0] * max_sentences)
        emb = rng.normal(s * embed_dim).reshape(s, embed_dim).astype(np.float32)
        texts = [f"sentence {i}-{j} text." for j in range(s)] if with_texts else None
        docs.append(hbm.Document(doc_id=i, label=i % 2, embedding=emb, sentences=texts))
    return hbm.EmbeddedDataset(embed_dim=embed_dim, documents=docs)


@pytest.fixture
def tiny_config():
    return hbm.ModelConfig(
        embed_dim=8, max_sentences=4, layers=2, heads=2, num_classes=2, dropout_p=0.0
    ).validate()


@pytest.fixture
def overfit_dataset():
    return make_separable_dataset()


@pytest.fixture
def overfit_config():
    return hbm.ModelConfig(
        embed_dim=16, max_sentences=6, layers=4, heads=1, num_classes=2, dropout_p=0.01
    ).validate()
