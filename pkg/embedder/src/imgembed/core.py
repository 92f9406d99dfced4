"""Embedding extraction: directory of images in, one CSV of pooled features out.

Preprocessing policy (fixed, applied to every image):

1. decode with Pillow and convert to RGB
2. resize so the shorter side is 342 px (bilinear)
3. center-crop to 299x299
4. scale pixel values to [0, 1] and normalise with mean 0.5, std 0.5 per channel

Rows are written sorted by id (the file stem), whatever order the batches ran
in.  Every file in the input directory either yields exactly one row or one
logged skip; nothing is silently dropped.  The final short batch is padded up
to the full batch size (by repeating its last image) so that every forward
pass runs at one fixed shape -- this keeps a row's bytes independent of where
in the run its image happened to land.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from imgembed.model import INPUT_SIZE, MODEL_WIDTHS, load_backbone

log = logging.getLogger("imgembed")

RESIZE_SHORT_SIDE = 342
DEFAULT_DIM = 1536
DEFAULT_BATCH = 32


class EmbedError(Exception):
    """A problem that must abort the run (bad paths, wrong dimension)."""


@dataclass(frozen=True)
class EmbedJob:
    """One embedding run: which directory, where to write, what to expect."""

    input_dir: Path
    output_path: Path
    model_id: str = "inception-resnet-v2"
    dim: int = DEFAULT_DIM
    batch_size: int = DEFAULT_BATCH

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise EmbedError(f"embedding dimension must be positive, got {self.dim}")
        if self.batch_size < 1:
            raise EmbedError(f"batch size must be positive, got {self.batch_size}")


@dataclass
class EmbedResult:
    embedded: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    source: str = ""


def _load_one(path: Path) -> torch.Tensor | None:
    """Decode and preprocess one file, or None if it is not a usable image."""
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        log.warning("skipping %s: %s", path.name, exc)
        return None
    w, h = rgb.size
    scale = RESIZE_SHORT_SIDE / min(w, h)
    rgb = rgb.resize((max(1, round(w * scale)), max(1, round(h * scale))), Image.BILINEAR)
    w, h = rgb.size
    left = (w - INPUT_SIZE) // 2
    top = (h - INPUT_SIZE) // 2
    rgb = rgb.crop((left, top, left + INPUT_SIZE, top + INPUT_SIZE))
    pixels = np.asarray(rgb, dtype=np.float32) / 255.0
    pixels = (pixels - 0.5) / 0.5
    return torch.from_numpy(pixels.transpose(2, 0, 1))


def _discover(input_dir: Path) -> list[Path]:
    if not input_dir.is_dir():
        raise EmbedError(f"input directory not found: {input_dir}")
    files = sorted(p for p in input_dir.iterdir() if p.is_file())
    stems: dict[str, Path] = {}
    for path in files:
        other = stems.get(path.stem)
        if other is not None:
            raise EmbedError(
                f"duplicate id {path.stem!r}: {other.name} and {path.name} "
                "would collide in the output"
            )
        stems[path.stem] = path
    return files


def embed_images(job: EmbedJob) -> EmbedResult:
    """Run one embedding job and write its CSV.

    Returns the lists of embedded and skipped file names.  Raises EmbedError
    when the job cannot be honoured at all (missing directory, duplicate ids,
    or a backbone whose pooled width disagrees with ``job.dim``).
    """
    files = _discover(job.input_dir)
    width = MODEL_WIDTHS.get(job.model_id)
    if width is None:
        raise EmbedError(f"unknown model {job.model_id!r}; known: {sorted(MODEL_WIDTHS)}")
    if width != job.dim:
        raise EmbedError(
            f"model {job.model_id!r} pools to {width} features "
            f"but the job expects {job.dim}"
        )
    model, source = load_backbone(job.model_id)

    result = EmbedResult(source=source)
    tensors: list[torch.Tensor] = []
    ids: list[str] = []
    for path in files:
        tensor = _load_one(path)
        if tensor is None:
            result.skipped.append(path.name)
        else:
            tensors.append(tensor)
            ids.append(path.stem)

    rows: dict[str, np.ndarray] = {}
    with torch.inference_mode():
        for start in range(0, len(tensors), job.batch_size):
            chunk = tensors[start : start + job.batch_size]
            n_real = len(chunk)
            while len(chunk) < job.batch_size:
                chunk.append(chunk[-1])
            out = model(torch.stack(chunk)).numpy()[:n_real]
            if not np.all(np.isfinite(out)):
                raise EmbedError("backbone produced non-finite features")
            for row_id, vector in zip(ids[start : start + n_real], out):
                rows[row_id] = vector.astype(np.float64)

    _write_csv(job.output_path, job.dim, rows)
    result.embedded = sorted(rows)
    return result


def _write_csv(path: Path, dim: int, rows: dict[str, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id"] + [f"e{i}" for i in range(dim)])
        for row_id in sorted(rows):
            writer.writerow([row_id] + [repr(float(v)) for v in rows[row_id]])
