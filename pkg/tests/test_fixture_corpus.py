"""Checks against the committed 8-week fixture corpus.

The expected features file was computed with independent scalar
arithmetic (plain-Python cosine distances and ISO-calendar lookups) and
committed; these tests hold the pipeline to it byte for byte.
"""
import io
from datetime import date
from pathlib import Path

import numpy as np
import pytest

from flucast.features import (
    cosine_distance,
    extract_features,
    read_features_csv,
    write_features_csv,
)
from flucast.ingest import parse_embeddings, parse_posts, parse_surveillance

FIXTURES = Path(__file__).parent / "fixtures"


def load_corpus():
    with open(FIXTURES / "posts.jsonl", encoding="utf-8") as fp:
        posts = parse_posts(fp)
    with open(FIXTURES / "embeddings.csv", encoding="utf-8") as fp:
        embeddings = parse_embeddings(fp)
    with open(FIXTURES / "references.csv", encoding="utf-8") as fp:
        references = parse_embeddings(fp)
    with open(FIXTURES / "surveillance.csv", encoding="utf-8") as fp:
        series = parse_surveillance(fp)
    return posts, embeddings, references, series


@pytest.fixture(scope="module")
def corpus():
    return load_corpus()


@pytest.fixture(scope="module")
def featurized(corpus):
    posts, embeddings, references, series = corpus
    return extract_features(posts, embeddings, references, series, profile_corpus="all")


def test_features_match_committed_file_byte_for_byte(featurized):
    dataset, _, _ = featurized
    buf = io.StringIO()
    write_features_csv(dataset, buf)
    expected = (FIXTURES / "expected_features.csv").read_bytes()
    assert buf.getvalue().encode("utf-8") == expected


def test_expected_file_round_trips_into_the_same_dataset(featurized):
    dataset, _, _ = featurized
    with open(FIXTURES / "expected_features.csv", encoding="utf-8") as fp:
        loaded = read_features_csv(fp)
    assert loaded.columns == dataset.columns
    assert loaded.week_starts == dataset.week_starts
    assert np.array_equal(loaded.X, dataset.X)
    assert np.array_equal(loaded.y, dataset.y)


def test_layout_is_three_plus_seven_plus_four(featurized):
    dataset, _, _ = featurized
    assert dataset.n_features == 14
    assert dataset.columns[:3] == ("week_no", "month", "year")
    assert sum(c.startswith("count_") for c in dataset.columns) == 7
    assert sum(c.startswith("image_") for c in dataset.columns) == 4
    assert dataset.modalities == ("date",) * 3 + ("count",) * 7 + ("image",) * 4


def test_week_53_row_has_the_documented_date_features(featurized):
    dataset, _, _ = featurized
    i = dataset.week_starts.index(date(2015, 12, 28))
    assert tuple(dataset.X[i, :3]) == (53.0, 12.0, 2015.0)
    j = dataset.week_starts.index(date(2016, 1, 4))
    assert tuple(dataset.X[j, :3]) == (1.0, 1.0, 2016.0)


def test_out_of_range_post_is_dropped_and_tallied(featurized):
    _, _, buckets = featurized
    assert buckets.dropped == 1


def test_hand_counted_hashtag_cells(featurized):
    dataset, _, _ = featurized
    cols = dataset.columns
    row0 = dict(zip(cols, dataset.X[0]))
    # p02 is tagged with both keywords; p03's duplicate tag counts once
    assert row0["count_kuume"] == 1 and row0["count_flunssa"] == 1
    assert row0["count_yskä"] == 1
    # p04's tag is uppercase in the file and casefolds into the count
    row1 = dict(zip(cols, dataset.X[1]))
    assert row1["count_flunssa"] == 1
    # week 4 has no posts at all
    assert not dataset.X[3, 3:].any()


def test_exact_match_embeddings_sit_at_distance_zero(corpus):
    _, embeddings, references, _ = corpus
    assert cosine_distance(embeddings["e04"].vector, references["refA"].vector) == 0.0
    assert cosine_distance(embeddings["e02"].vector, references["refC"].vector) == 0.0
    # e06 is refD scaled by 2: cosine distance ignores magnitude
    assert cosine_distance(embeddings["e06"].vector, references["refD"].vector) == pytest.approx(
        0.0, abs=1e-15
    )


def test_one_embedding_can_match_two_references(featurized):
    dataset, _, _ = featurized
    cols = dataset.columns
    row = dict(zip(cols, dataset.X[4]))  # ISO week 53: post p08
    assert row["image_refA"] == 1 and row["image_refB"] == 1
    assert row["image_refC"] == 0 and row["image_refD"] == 0


def test_every_reference_threshold_is_positive_at_default_multiplier(featurized):
    _, profiles, _ = featurized
    for p in profiles:
        assert p.threshold > 0.0
        assert 0.0 <= p.mean_distance <= 2.0


def test_raising_the_multiplier_never_raises_any_image_cell(corpus):
    posts, embeddings, references, series = corpus
    ds2, _, _ = extract_features(
        posts, embeddings, references, series, profile_corpus="all", multiplier=2.0
    )
    ds3, _, _ = extract_features(
        posts, embeddings, references, series, profile_corpus="all", multiplier=3.0
    )
    img = [i for i, c in enumerate(ds2.columns) if c.startswith("image_")]
    assert (ds3.X[:, img] <= ds2.X[:, img]).all()
    # on this corpus c=3 pushes every threshold below zero: all cells empty
    assert not ds3.X[:, img].any()
    assert ds2.X[:, img].sum() == 5.0


def test_profile_ignores_the_dropped_posts_embedding(corpus):
    # e00 sits exactly on refD; were the out-of-range post profiled, refD's
    # mean distance would drop below the committed value
    posts, embeddings, references, series = corpus
    _, profiles, _ = extract_features(
        posts, embeddings, references, series, profile_corpus="all"
    )
    ref_d = next(p for p in profiles if p.ref_id == "refD")
    in_range_ids = [p.embedding_id for p in posts if p.id != "p00" and p.embedding_id]
    dists = [
        cosine_distance(embeddings[eid].vector, ref_d.vector) for eid in in_range_ids
    ]
    assert ref_d.mean_distance == pytest.approx(np.mean(dists), abs=1e-12)
    assert cosine_distance(embeddings["e00"].vector, ref_d.vector) == pytest.approx(
        0.0, abs=1e-15
    )
    # folding e00's zero distance into the population would drag the mean down
    assert ref_d.mean_distance > np.mean(dists + [0.0]) + 0.01
