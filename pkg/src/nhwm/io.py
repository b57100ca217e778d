"""Deterministic text outputs: time-series CSV and run manifests.

Floats are written with 17 significant digits so they re-read bit-exactly.
Files are written with ``\\n`` line endings and ``.`` decimals whatever the
locale.  A manifest is written before any data file and gets a terminal
``# DONE`` line once all outputs are complete.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np

__all__ = ["write_csv", "read_csv", "Manifest", "write_manifest", "finish_manifest",
           "manifest_complete", "sha256_text", "code_version", "DONE_MARKER"]

DONE_MARKER = "# DONE"


def code_version() -> str:
    from . import __version__

    return f"nhwm {__version__}"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, columns: dict, order=None):
    """Write equal-length 1D columns; header is the column names in ``order``."""
    order = list(order) if order is not None else list(columns)
    arrays = [np.asarray(columns[name], dtype=float) for name in order]
    n = {a.shape for a in arrays}
    if len(n) > 1 or any(a.ndim != 1 for a in arrays):
        raise ValueError("CSV columns must be 1D and of equal length")
    lines = [",".join(order)]
    for row in zip(*arrays):
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i].copy() for i, name in enumerate(header)}


class Manifest:
    """Path plus the pieces written into it."""

    def __init__(self, path, config_text: str, input_hash: str, outputs, extra=None):
        self.path = Path(path)
        self.config_text = config_text
        self.input_hash = input_hash
        self.outputs = list(outputs)
        self.extra = dict(extra or {})


def write_manifest(path, config_text: str, outputs, input_text: str | None = None, extra=None) -> Manifest:
    """Write the resolved configuration and run metadata as comment lines.

    The body is the resolved configuration itself, so a manifest can be fed
    straight back to the parser to reproduce the run.
    """
    input_hash = sha256_text(input_text if input_text is not None else config_text)
    head = [
        "# nhwm run manifest",
        f"# version: {code_version()}",
        f"# input_sha256: {input_hash}",
        f"# threads: {os.environ.get('NHWM_THREADS', '1')}",
    ]
    for k, v in (extra or {}).items():
        head.append(f"# {k}: {v}")
    for o in outputs:
        head.append(f"# output: {o}")
    text = "\n".join(head) + "\n" + config_text.rstrip("\n") + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return Manifest(path, config_text, input_hash, outputs, extra)


def finish_manifest(path):
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        fh.write(DONE_MARKER + "\n")


def manifest_complete(path) -> bool:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        return False
    return bool(lines) and lines[-1].strip() == DONE_MARKER
