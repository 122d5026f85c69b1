"""Corpus-to-embeddings tool: splits documents into sentences, encodes each
sentence with a frozen pretrained encoder (token-embedding average), and
writes the HBE1 dataset format plus its sentence-text sidecar."""

__version__ = "0.1.0"

from .builder import RawDocument, build_dataset, read_corpus
from .encoders import StubEncoder, load_encoder
from .splitter import split_sentences
