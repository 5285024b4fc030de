"""Writer for the binary embedding-file interface.

Layout (little-endian throughout):
  magic "BLEM" | version u32 | embed dim E u32 | sentence count u64
  per sentence: index u64 | fragment total P u32 | word count W u32 |
                W fragment counts u32 (summing to P) | P*E float32 rows
Sidecar ``<path>.ids`` maps sentence index to instance id.

This package only communicates with the consumer through this format, so
the writer is self-contained here.
"""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"BLEM"
VERSION = 1


def write_embedding_file(
    path,
    dim: int,
    sentences: list[tuple[np.ndarray, list[int]]],
    ids: list[str] | None = None,
) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(sentences)))
        for i, (rows, counts) in enumerate(sentences):
            rows = np.ascontiguousarray(rows, dtype="<f4")
            if rows.ndim != 2 or rows.shape[1] != dim:
                raise ValueError(
                    f"sentence {i}: rows shape {rows.shape} does not match "
                    f"dim {dim}"
                )
            if sum(counts) != rows.shape[0]:
                raise ValueError(
                    f"sentence {i}: fragment counts sum to {sum(counts)} but "
                    f"there are {rows.shape[0]} rows"
                )
            fh.write(struct.pack("<Q", i))
            fh.write(struct.pack("<I", rows.shape[0]))
            fh.write(struct.pack("<I", len(counts)))
            fh.write(np.asarray(counts, dtype="<u4").tobytes())
            fh.write(rows.tobytes())
    os.replace(tmp, path)
    if ids is not None:
        tmp = str(path) + ".ids.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for i, iid in enumerate(ids):
                fh.write(f"{i}\t{iid}\n")
        os.replace(tmp, str(path) + ".ids")
