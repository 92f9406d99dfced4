"""Weekly feature extraction.

Each surveillance week becomes one feature row with three blocks:

* date features      week_no, month, year (ISO week number, month of the
                     Monday, ISO week-based year)
* count features     per-keyword hashtag hit counts over the week's posts
* image features     per-reference counts of posts whose embedding lies
                     within the reference's similarity threshold

Similarity is cosine distance d(a, b) = 1 - a.b / (|a||b|).  A reference
profile holds the population mean/std of distances from the reference
vector to a profile corpus; a post matches when its distance is strictly
below mean - multiplier * std.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .ingest import EmbeddingRecord, EmbeddingTable, PostRecord, SurveillanceSeries, WeeklyBuckets, bucket_weeks
from .util import fmt_num, is_monday

DEFAULT_KEYWORDS: tuple[str, ...] = (
    "yskä",
    "kuume",
    "flunssa",
    "influenssa",
    "lihaskipu",
    "kipeä",
    "kurkkukipu",
)

DEFAULT_MULTIPLIER = 2.0

DATE_COLUMNS: tuple[str, ...] = ("week_no", "month", "year")

MODALITIES: tuple[str, ...] = ("date", "count", "image")


def validate_keywords(keywords: Sequence[str]) -> tuple[str, ...]:
    kws = tuple(keywords)
    if not kws:
        raise DataError("keyword list is empty")
    if len(set(kws)) != len(kws):
        raise DataError("keyword list contains duplicates")
    for k in kws:
        if not k or k != k.lower():
            raise DataError(f"keyword {k!r} must be non-empty lowercase")
    return kws


def modality_of(column: str) -> str:
    """Modality of a feature column, derived from its name."""
    if column in DATE_COLUMNS:
        return "date"
    if column.startswith("count_"):
        return "count"
    if column.startswith("image_"):
        return "image"
    raise DataError(f"cannot infer modality of column {column!r}")


# ---------------------------------------------------------------------------
# cosine distance and reference profiles
# ---------------------------------------------------------------------------


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(a, b); lies in [0, 2] up to float rounding."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"vector shapes differ: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DataError("cosine distance is undefined for a zero vector")
    return float(1.0 - (a @ b) / (na * nb))


def _distances_to(ref: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Cosine distances from each row of ``matrix`` to ``ref``."""
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        raise DataError("cosine distance is undefined for a zero vector")
    rn = np.linalg.norm(ref)
    if rn == 0.0:
        raise DataError("cosine distance is undefined for a zero vector")
    return 1.0 - (matrix @ ref) / (norms * rn)


@dataclass(frozen=True)
class ReferenceProfile:
    """Distance statistics of one reference vector against a profile corpus."""

    ref_id: str
    vector: np.ndarray
    mean_distance: float
    std_distance: float
    multiplier: float = DEFAULT_MULTIPLIER

    def __post_init__(self):
        if not (-1e-9 <= self.mean_distance <= 2.0 + 1e-9):
            raise DataError(f"mean distance {self.mean_distance} outside [0, 2]")
        if self.std_distance < 0.0:
            raise DataError("distance std must be non-negative")

    @property
    def threshold(self) -> float:
        """Match cutoff: distances strictly below this count as matches."""
        return self.mean_distance - self.multiplier * self.std_distance


def reference_profile(
    ref: EmbeddingRecord,
    corpus: Sequence[EmbeddingRecord],
    multiplier: float = DEFAULT_MULTIPLIER,
) -> ReferenceProfile:
    """Profile one reference against a corpus of embeddings.

    Mean and std are population statistics over cosine distances from the
    reference to every corpus vector.
    """
    if len(corpus) == 0:
        raise DataError(f"profile corpus for reference {ref.id!r} is empty")
    matrix = np.stack([r.vector for r in corpus])
    dists = _distances_to(ref.vector, matrix)
    return ReferenceProfile(
        ref_id=ref.id,
        vector=ref.vector,
        mean_distance=float(np.mean(dists)),
        std_distance=float(np.std(dists)),
        multiplier=multiplier,
    )


def build_profiles(
    references: EmbeddingTable,
    corpus: Sequence[EmbeddingRecord],
    multiplier: float = DEFAULT_MULTIPLIER,
) -> tuple[ReferenceProfile, ...]:
    return tuple(reference_profile(ref, corpus, multiplier) for ref in references)


# ---------------------------------------------------------------------------
# per-block extraction
# ---------------------------------------------------------------------------


def date_features(week_start: date) -> tuple[int, int, int]:
    """(ISO week number, month of the Monday, ISO week-based year)."""
    if not is_monday(week_start):
        raise DataError(f"week start {week_start} is not a Monday")
    iso = week_start.isocalendar()
    return (iso[1], week_start.month, iso[0])


def count_features(
    buckets: WeeklyBuckets,
    posts: Sequence[PostRecord],
    keywords: Sequence[str],
) -> np.ndarray:
    """Per-week, per-keyword hashtag hit counts (n_weeks x n_keywords).

    A post contributes at most 1 to a keyword regardless of repeated tags
    (hashtags are a set), but can contribute to several keywords.
    """
    kws = validate_keywords(keywords)
    by_id = {p.id: p for p in posts}
    out = np.zeros((len(buckets.week_starts), len(kws)), dtype=float)
    for wi, ids in enumerate(buckets.post_ids):
        for pid in ids:
            tags = by_id[pid].hashtags
            for ki, kw in enumerate(kws):
                if kw in tags:
                    out[wi, ki] += 1.0
    return out


def image_features(
    buckets: WeeklyBuckets,
    posts: Sequence[PostRecord],
    embeddings: EmbeddingTable,
    profiles: Sequence[ReferenceProfile],
) -> np.ndarray:
    """Per-week, per-reference counts of threshold-matching posts.

    Posts without an embedding_id are skipped; an embedding_id missing
    from the table is an error (named in the message).
    """
    if not profiles:
        raise DataError("no reference profiles given")
    by_id = {p.id: p for p in posts}
    refs = np.stack([p.vector for p in profiles])
    ref_norms = np.linalg.norm(refs, axis=1)
    thresholds = np.asarray([p.threshold for p in profiles])
    out = np.zeros((len(buckets.week_starts), len(profiles)), dtype=float)
    missing: list[str] = []
    for wi, ids in enumerate(buckets.post_ids):
        vecs = []
        for pid in ids:
            eid = by_id[pid].embedding_id
            if eid is None:
                continue
            rec = embeddings.get(eid)
            if rec is None:
                missing.append(eid)
                continue
            vecs.append(rec.vector)
        if missing or not vecs:
            continue
        matrix = np.stack(vecs)
        norms = np.linalg.norm(matrix, axis=1)
        dists = 1.0 - (matrix @ refs.T) / np.outer(norms, ref_norms)
        out[wi] = (dists < thresholds[None, :]).sum(axis=0)
    if missing:
        shown = ", ".join(repr(m) for m in sorted(set(missing))[:5])
        raise DataError(f"{len(missing)} embedding id(s) missing from table: {shown}")
    return out


# ---------------------------------------------------------------------------
# dataset assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """Aligned design matrix and target for modelling.

    columns names each feature; modalities holds the parallel modality tag
    of each column.  week_starts aligns rows with calendar weeks.
    """

    week_starts: tuple[date, ...]
    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    modalities: tuple[str, ...]

    def __post_init__(self):
        n, p = self.X.shape
        if len(self.week_starts) != n or self.y.shape != (n,):
            raise DataError("dataset arrays are misaligned")
        if len(self.columns) != p or len(self.modalities) != p:
            raise DataError(f"expected {p} column names/modalities")
        if len(set(self.columns)) != p:
            raise DataError("duplicate feature column names")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise DataError("dataset contains non-finite values")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def assemble(
    series: SurveillanceSeries,
    *,
    date_block: np.ndarray | None,
    count_block: np.ndarray | None = None,
    image_block: np.ndarray | None = None,
    keywords: Sequence[str] = (),
    ref_ids: Sequence[str] = (),
) -> Dataset:
    """Stack the per-modality blocks into a Dataset.

    Blocks may be omitted (None) to build reduced feature sets, e.g. a
    date-only design; at least one block must be present.
    """
    n = len(series)
    blocks: list[np.ndarray] = []
    columns: list[str] = []
    modalities: list[str] = []
    if date_block is not None:
        blocks.append(np.asarray(date_block, dtype=float))
        columns.extend(DATE_COLUMNS)
        modalities.extend(["date"] * len(DATE_COLUMNS))
    if count_block is not None:
        kws = validate_keywords(keywords)
        if count_block.shape[1] != len(kws):
            raise DataError("count block width does not match keyword list")
        blocks.append(np.asarray(count_block, dtype=float))
        columns.extend(f"count_{k}" for k in kws)
        modalities.extend(["count"] * len(kws))
    if image_block is not None:
        if image_block.shape[1] != len(ref_ids):
            raise DataError("image block width does not match reference list")
        blocks.append(np.asarray(image_block, dtype=float))
        columns.extend(f"image_{r}" for r in ref_ids)
        modalities.extend(["image"] * len(ref_ids))
    if not blocks:
        raise DataError("no feature blocks to assemble")
    for b in blocks:
        if b.shape[0] != n:
            raise DataError(f"block has {b.shape[0]} rows, series has {n}")
    return Dataset(
        week_starts=series.week_starts,
        X=np.hstack(blocks),
        y=series.counts(),
        columns=tuple(columns),
        modalities=tuple(modalities),
    )


def extract_features(
    posts: Sequence[PostRecord],
    embeddings: EmbeddingTable | None,
    references: EmbeddingTable | None,
    series: SurveillanceSeries,
    *,
    keywords: Sequence[str] = DEFAULT_KEYWORDS,
    multiplier: float = DEFAULT_MULTIPLIER,
    profile_corpus: str = "train",
    split_date: date | None = None,
    modalities: Sequence[str] = MODALITIES,
) -> tuple[Dataset, tuple[ReferenceProfile, ...], WeeklyBuckets]:
    """Full pipeline: bucket posts, profile references, build the Dataset.

    profile_corpus selects which posts' embeddings form the profiling
    population: "train" uses posts in weeks strictly before split_date
    (required then), "all" uses every bucketed post.  Restricting to the
    training period keeps test-period data out of the fitted thresholds.
    """
    wanted = tuple(modalities)
    for m in wanted:
        if m not in MODALITIES:
            raise DataError(f"unknown modality {m!r}")
    if not wanted:
        raise DataError("no modalities requested")
    buckets = bucket_weeks(posts, series)

    date_block = None
    if "date" in wanted:
        date_block = np.asarray([date_features(w) for w in series.week_starts], dtype=float)

    count_block = None
    if "count" in wanted:
        count_block = count_features(buckets, posts, keywords)

    image_block = None
    profiles: tuple[ReferenceProfile, ...] = ()
    ref_ids: tuple[str, ...] = ()
    if "image" in wanted:
        if embeddings is None or references is None:
            raise DataError("image modality requires embeddings and references")
        if profile_corpus not in ("train", "all"):
            raise DataError(f"unknown profile corpus mode {profile_corpus!r}")
        if profile_corpus == "train" and split_date is None:
            raise DataError("profile corpus mode 'train' requires a split date")
        by_id = {p.id: p for p in posts}
        corpus: list[EmbeddingRecord] = []
        missing: list[str] = []
        for wi, week in enumerate(buckets.week_starts):
            if profile_corpus == "train" and week >= split_date:
                continue
            for pid in buckets.post_ids[wi]:
                eid = by_id[pid].embedding_id
                if eid is None:
                    continue
                rec = embeddings.get(eid)
                if rec is None:
                    missing.append(eid)
                else:
                    corpus.append(rec)
        if missing:
            shown = ", ".join(repr(m) for m in sorted(set(missing))[:5])
            raise DataError(f"{len(missing)} embedding id(s) missing from table: {shown}")
        profiles = build_profiles(references, corpus, multiplier)
        image_block = image_features(buckets, posts, embeddings, profiles)
        ref_ids = references.ids()

    dataset = assemble(
        series,
        date_block=date_block,
        count_block=count_block,
        image_block=image_block,
        keywords=keywords if "count" in wanted else (),
        ref_ids=ref_ids,
    )
    return dataset, profiles, buckets


# ---------------------------------------------------------------------------
# z-score normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Column-wise z-score parameters fitted on training rows only."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def constant_columns(self) -> np.ndarray:
        return self.std == 0.0


def zscore_fit(X: np.ndarray) -> Normalizer:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("normalizer needs at least 2 rows")
    return Normalizer(mean=X.mean(axis=0), std=X.std(axis=0))


def zscore_apply(norm: Normalizer, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != norm.mean.shape[0]:
        raise DataError(f"normalizer has {norm.mean.shape[0]} columns, data has {X.shape[1]}")
    safe = np.where(norm.std == 0.0, 1.0, norm.std)
    out = (X - norm.mean) / safe
    out[:, norm.constant_columns] = 0.0
    return out


# ---------------------------------------------------------------------------
# features CSV round trip
# ---------------------------------------------------------------------------


def write_features_csv(dataset: Dataset, fp) -> None:
    fp.write("week_start," + ",".join(dataset.columns) + ",target\n")
    for i, week in enumerate(dataset.week_starts):
        cells = [week.isoformat()]
        cells.extend(fmt_num(v) for v in dataset.X[i])
        cells.append(fmt_num(dataset.y[i]))
        fp.write(",".join(cells) + "\n")


def read_features_csv(lines: Iterable[str], *, path=None) -> Dataset:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("features file is empty", path=path) from None
    if len(header) < 3 or header[0] != "week_start" or header[-1] != "target":
        raise DataError("features header must be week_start,<features...>,target", path=path, line=1)
    columns = tuple(header[1:-1])
    modalities = tuple(modality_of(c) for c in columns)
    weeks: list[date] = []
    rows: list[list[float]] = []
    targets: list[float] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", path=path, line=lineno)
        try:
            weeks.append(date.fromisoformat(row[0]))
            rows.append([float(v) for v in row[1:-1]])
            targets.append(float(row[-1]))
        except ValueError as exc:
            raise DataError(f"invalid value: {exc}", path=path, line=lineno) from exc
    if not rows:
        raise DataError("features file has no data rows", path=path)
    return Dataset(
        week_starts=tuple(weeks),
        X=np.asarray(rows, dtype=float),
        y=np.asarray(targets, dtype=float),
        columns=columns,
        modalities=modalities,
    )
