"""The embedder's output must feed the forecasting toolkit without friction."""

import json
import subprocess
import sys

import pytest

from conftest import make_gradient, make_solid
from imgembed.cli import main as embed_main

KEYWORDS = ["kuume", "flunssa", "yskä"]


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory):
    """Post and reference images embedded by this tool, plus matching
    posts/surveillance files for two ISO weeks."""
    root = tmp_path_factory.mktemp("roundtrip")

    post_images = root / "post-images"
    post_images.mkdir()
    make_gradient(post_images / "img-a.png", phase=11)
    make_gradient(post_images / "img-b.png", phase=77)
    make_solid(post_images / "img-c.png", (180, 40, 40))
    ref_images = root / "reference-images"
    ref_images.mkdir()
    make_gradient(ref_images / "fever-chart.png", phase=11, size=(300, 330))
    make_solid(ref_images / "thermometer.png", (240, 240, 240))

    embeddings = root / "embeddings.csv"
    references = root / "references.csv"
    assert embed_main(["--input", str(post_images), "--output", str(embeddings)]) == 0
    assert embed_main(["--input", str(ref_images), "--output", str(references)]) == 0

    posts = root / "posts.jsonl"
    records = [
        {"id": "p1", "timestamp": "2016-01-04T09:00:00Z", "hashtags": ["kuume"],
         "embedding_id": "img-a"},
        {"id": "p2", "timestamp": "2016-01-06T18:30:00Z", "hashtags": ["flunssa", "yskä"],
         "embedding_id": "img-b"},
        {"id": "p3", "timestamp": "2016-01-11T12:00:00Z", "hashtags": ["kuume"],
         "embedding_id": "img-c"},
        {"id": "p4", "timestamp": "2016-01-13T07:45:00Z", "hashtags": ["talvi"]},
    ]
    posts.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")

    surveillance = root / "surveillance.csv"
    surveillance.write_text(
        "week_start,count\n2016-01-04,120\n2016-01-11,145\n", encoding="utf-8"
    )
    return root


def test_forecaster_ingest_parses_with_zero_errors(mini_corpus):
    ingest = pytest.importorskip("flucast.ingest")
    with open(mini_corpus / "embeddings.csv", encoding="utf-8") as fp:
        table = ingest.parse_embeddings(fp)
    assert table.dim == 1536
    assert list(table.ids()) == ["img-a", "img-b", "img-c"]
    with open(mini_corpus / "references.csv", encoding="utf-8") as fp:
        refs = ingest.parse_embeddings(fp)
    assert refs.dim == 1536


def test_featurize_cli_accepts_embedder_output(mini_corpus, tmp_path):
    flucast = [sys.executable, "-m", "flucast.cli"]
    try:
        subprocess.run(flucast + ["--version"], check=True, capture_output=True)
    except (subprocess.CalledProcessError, FileNotFoundError):
        pytest.skip("forecasting toolkit not installed")

    out_dir = tmp_path / "out"
    proc = subprocess.run(
        flucast
        + [
            "featurize",
            "--posts", str(mini_corpus / "posts.jsonl"),
            "--embeddings", str(mini_corpus / "embeddings.csv"),
            "--references", str(mini_corpus / "references.csv"),
            "--surveillance", str(mini_corpus / "surveillance.csv"),
            "--keywords", ",".join(KEYWORDS),
            "--profile-corpus", "all",
            "--out", str(out_dir),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    lines = (out_dir / "features.csv").read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    # week_start + 3 date + 3 keyword counts + 2 image similarities + target
    assert header[0] == "week_start"
    assert header[-1] == "target"
    assert "image_fever-chart" in header
    assert "image_thermometer" in header
    assert len(header) == 1 + 3 + len(KEYWORDS) + 2 + 1
    assert len(lines) == 1 + 2
