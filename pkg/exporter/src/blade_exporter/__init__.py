"""Frozen-encoder embedding exporter for the blade embedding-file format."""

__version__ = "0.1.0"

from .export import export, read_corpus
from .format import write_embedding_file
