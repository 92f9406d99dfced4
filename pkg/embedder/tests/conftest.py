import shutil
from pathlib import Path

import pytest
from PIL import Image

from imgembed.cli import main as embed_main


def make_gradient(path: Path, *, phase: int = 0, size: tuple[int, int] = (320, 400)) -> None:
    img = Image.new("RGB", size)
    w, h = size
    img.putdata(
        [((x * 7 + phase) % 256, (y * 3 + phase) % 256, (x + y) % 256)
         for y in range(h) for x in range(w)]
    )
    img.save(path)


def make_solid(path: Path, color: tuple[int, int, int], size: tuple[int, int] = (350, 350)) -> None:
    Image.new("RGB", size, color).save(path)


@pytest.fixture(scope="session")
def corpus_run(tmp_path_factory):
    """One shared embed run over a small mixed corpus, batch 2.

    Sorted ids are g1, g2, g2copy, noise, solid, so with batch size 2 the
    byte-copy pair (g2, g2copy) lands in different batches and `solid` sits in
    the padded final batch.
    """
    root = tmp_path_factory.mktemp("corpus")
    images = root / "images"
    images.mkdir()
    make_gradient(images / "g1.png", phase=0)
    make_gradient(images / "g2.png", phase=50)
    shutil.copyfile(images / "g2.png", images / "g2copy.png")
    make_gradient(images / "noise.jpg", phase=113, size=(400, 299))
    make_solid(images / "solid.png", (0, 0, 0))
    out = root / "embeddings.csv"
    code = embed_main(["--input", str(images), "--output", str(out), "--batch", "2"])
    assert code == 0
    return images, out
