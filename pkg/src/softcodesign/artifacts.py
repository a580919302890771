"""Artifact writers: CSV tables, binary PGM label grids and run manifests.

Floats are written with ``repr`` so a rerun with identical numbers gives
byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .exceptions import InvalidArgumentError

__all__ = [
    "LOSS_HEADER",
    "TRAJECTORY_HEADER",
    "EIGENVALUE_HEADER",
    "NOVELTY_HEADER",
    "write_csv",
    "write_loss_csv",
    "write_trajectory_csv",
    "write_eigenvalue_csv",
    "write_novelty_csv",
    "write_pgm",
    "read_pgm",
    "file_sha256",
    "write_manifest",
]

LOSS_HEADER = ("generation", "best_loss", "mean_loss", "sigma")
TRAJECTORY_HEADER = ("step", "time", "node_id", "x", "y")
EIGENVALUE_HEADER = ("index", "eigenvalue", "cumulative_fraction")
NOVELTY_HEADER = ("sample_id", "novelty")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def write_loss_csv(path, history) -> Path:
    """One row per generation: ``generation, best_loss, mean_loss, sigma``."""
    return write_csv(path, LOSS_HEADER, ([h[k] for k in LOSS_HEADER] for h in history))


def write_trajectory_csv(path, traj) -> Path:
    """Long format, one row per node per step; ``node_id`` is the reference mesh id."""
    pos = np.asarray(traj.positions)

    def rows():
        for s in range(pos.shape[0]):
            t = float(traj.times[s])
            for k, nid in enumerate(traj.node_ids):
                yield s, t, int(nid), float(pos[s, k, 0]), float(pos[s, k, 1])

    return write_csv(path, TRAJECTORY_HEADER, rows())


def write_eigenvalue_csv(path, eigenvalues, cumulative) -> Path:
    rows = ((i + 1, float(e), float(c)) for i, (e, c) in enumerate(zip(eigenvalues, cumulative)))
    return write_csv(path, EIGENVALUE_HEADER, rows)


def write_novelty_csv(path, novelty) -> Path:
    return write_csv(path, NOVELTY_HEADER, ((i, float(v)) for i, v in enumerate(novelty)))


def write_pgm(path, labels, dims) -> Path:
    """Binary PGM (P5) with one byte per cell holding the material index.

    ``labels`` is flat with the first axis fastest, so image rows are
    constant second-axis index; the first row is the lowest ``y``.
    """
    nx, ny = (int(d) for d in dims)
    lab = np.asarray(labels).ravel()
    if lab.size != nx * ny:
        raise InvalidArgumentError(f"{lab.size} labels do not fit a {nx}x{ny} grid")
    if lab.min() < 0 or lab.max() > 255:
        raise InvalidArgumentError("labels must fit in one byte")
    img = lab.astype(np.uint8).reshape(ny, nx)
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    """Read a P5 file written by :func:`write_pgm`; returns a ``(rows, cols)`` array."""
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise InvalidArgumentError("not a binary PGM file")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval > 255:
        raise InvalidArgumentError("only 8-bit PGM is supported")
    pixels = data[len(data) - w * h:]
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, *, command, config_hash, seed, artifacts, extra=None) -> Path:
    """JSON manifest listing every artifact with its checksum."""
    path = Path(path)
    doc = {
        "command": command,
        "config_hash": config_hash,
        "seed": int(seed),
        "artifacts": [{"file": Path(a).name, "sha256": file_sha256(a)} for a in artifacts],
    }
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
