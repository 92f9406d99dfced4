"""Reading and writing the on-disk data formats.

Three inputs feed the feature pipeline:

* posts             JSONL, one post per line:
                    {"id": ..., "timestamp": ISO-8601, "hashtags": [...],
                     "embedding_id": ...}   (embedding_id optional)
* embeddings        CSV with header ``id,e0,...,e{D-1}``
* surveillance      CSV with header ``week_start,count``; one row per ISO
                    week, Mondays, contiguous

Parsers validate aggressively and raise DataError with the source line so
CLI users get actionable messages.  Writers are exact inverses: parsing a
written file yields identical records (floats are emitted with repr, which
round-trips bit-exactly).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .util import fmt_num, format_utc_timestamp, is_monday, parse_utc_timestamp, week_start_of

# ---------------------------------------------------------------------------
# record types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PostRecord:
    """One social-media post: identifier, UTC timestamp, lowercase hashtags,
    and an optional pointer into the embedding table."""

    id: str
    timestamp: datetime
    hashtags: frozenset[str]
    embedding_id: str | None = None


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """One image embedding vector keyed by id.  Vectors are never zero."""

    id: str
    vector: np.ndarray


@dataclass(frozen=True)
class SurveillanceSeries:
    """Weekly case counts: ordered, contiguous Mondays with counts >= 0."""

    entries: tuple[tuple[date, int], ...]

    def __post_init__(self):
        if not self.entries:
            raise DataError("surveillance series is empty")
        prev = None
        for week, count in self.entries:
            if not is_monday(week):
                raise DataError(f"week_start {week} is not a Monday")
            if count < 0:
                raise DataError(f"negative count {count} for week {week}")
            if prev is not None and (week - prev).days != 7:
                raise DataError(f"weeks are not contiguous: {prev} -> {week}")
            prev = week

    @property
    def week_starts(self) -> tuple[date, ...]:
        return tuple(w for w, _ in self.entries)

    def counts(self) -> np.ndarray:
        return np.asarray([c for _, c in self.entries], dtype=float)

    def __len__(self) -> int:
        return len(self.entries)


class EmbeddingTable:
    """Ordered collection of EmbeddingRecord with id lookup.

    Row order is preserved from the source file; for reference files the
    row order defines the feature column order.
    """

    def __init__(self, records: Sequence[EmbeddingRecord]):
        if not records:
            raise DataError("embedding table is empty")
        dims = {r.vector.shape[0] for r in records}
        if len(dims) != 1:
            raise DataError(f"inconsistent embedding dimensions: {sorted(dims)}")
        self.dim = dims.pop()
        self.records = tuple(records)
        self._by_id = {}
        for r in self.records:
            if r.id in self._by_id:
                raise DataError(f"duplicate embedding id {r.id!r}")
            self._by_id[r.id] = r

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __contains__(self, key: str):
        return key in self._by_id

    def __getitem__(self, key: str) -> EmbeddingRecord:
        return self._by_id[key]

    def get(self, key: str):
        return self._by_id.get(key)

    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)


@dataclass(frozen=True)
class WeeklyBuckets:
    """Posts grouped by the ISO week (Monday) of their timestamp.

    week_starts aligns with a surveillance series; post_ids[i] holds the
    ids of posts falling in week i, sorted for determinism.  ``dropped``
    counts posts outside the series range.
    """

    week_starts: tuple[date, ...]
    post_ids: tuple[tuple[str, ...], ...]
    dropped: int = 0

    def __post_init__(self):
        if len(self.week_starts) != len(self.post_ids):
            raise DataError("bucket arrays are misaligned")


# ---------------------------------------------------------------------------
# posts (JSONL)
# ---------------------------------------------------------------------------


def parse_posts(lines: Iterable[str], *, path=None) -> list[PostRecord]:
    """Parse line-oriented JSON posts.  Blank lines are skipped."""
    records: list[PostRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc.msg}", path=path, line=lineno) from exc
        if not isinstance(obj, dict):
            raise DataError("post record is not a JSON object", path=path, line=lineno)
        try:
            pid = obj["id"]
            raw_ts = obj["timestamp"]
            raw_tags = obj["hashtags"]
        except KeyError as exc:
            raise DataError(f"missing required key {exc.args[0]!r}", path=path, line=lineno) from exc
        if not isinstance(pid, str) or not pid:
            raise DataError("post id must be a non-empty string", path=path, line=lineno)
        if pid in seen:
            raise DataError(f"duplicate post id {pid!r}", path=path, line=lineno)
        if not isinstance(raw_ts, str):
            raise DataError("timestamp must be a string", path=path, line=lineno)
        try:
            ts = parse_utc_timestamp(raw_ts)
        except ValueError as exc:
            raise DataError(f"invalid timestamp {raw_ts!r}", path=path, line=lineno) from exc
        if not isinstance(raw_tags, list) or any(not isinstance(t, str) for t in raw_tags):
            raise DataError("hashtags must be a list of strings", path=path, line=lineno)
        tags = frozenset(t.lower() for t in raw_tags if t)
        emb = obj.get("embedding_id")
        if emb is not None and (not isinstance(emb, str) or not emb):
            raise DataError("embedding_id must be a non-empty string when present", path=path, line=lineno)
        seen.add(pid)
        records.append(PostRecord(id=pid, timestamp=ts, hashtags=tags, embedding_id=emb))
    return records


def write_posts(records: Iterable[PostRecord], fp) -> None:
    """Serialize posts back to JSONL.  Hashtags are emitted sorted so the
    output is deterministic; parse(write(x)) == x."""
    for r in records:
        obj = {
            "id": r.id,
            "timestamp": format_utc_timestamp(r.timestamp),
            "hashtags": sorted(r.hashtags),
        }
        if r.embedding_id is not None:
            obj["embedding_id"] = r.embedding_id
        fp.write(json.dumps(obj, ensure_ascii=True, separators=(", ", ": ")))
        fp.write("\n")


# ---------------------------------------------------------------------------
# surveillance (CSV)
# ---------------------------------------------------------------------------


def parse_surveillance(lines: Iterable[str], *, path=None) -> SurveillanceSeries:
    reader = csv.reader(lines)
    rows = list(reader)
    if not rows:
        raise DataError("surveillance file is empty", path=path)
    if rows[0] != ["week_start", "count"]:
        raise DataError(f"bad surveillance header {rows[0]!r}, expected ['week_start', 'count']", path=path, line=1)
    entries: list[tuple[date, int]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise DataError(f"expected 2 fields, got {len(row)}", path=path, line=lineno)
        try:
            week = date.fromisoformat(row[0])
        except ValueError as exc:
            raise DataError(f"invalid date {row[0]!r}", path=path, line=lineno) from exc
        try:
            count = int(row[1])
        except ValueError as exc:
            raise DataError(f"invalid count {row[1]!r}", path=path, line=lineno) from exc
        entries.append((week, count))
    if not entries:
        raise DataError("surveillance file has no data rows", path=path)
    entries.sort(key=lambda e: e[0])
    for i in range(1, len(entries)):
        if entries[i][0] == entries[i - 1][0]:
            raise DataError(f"duplicate week {entries[i][0]}", path=path)
    try:
        return SurveillanceSeries(entries=tuple(entries))
    except DataError as exc:
        raise DataError(str(exc), path=path) from exc


def write_surveillance(series: SurveillanceSeries, fp) -> None:
    fp.write("week_start,count\n")
    for week, count in series.entries:
        fp.write(f"{week.isoformat()},{count}\n")


# ---------------------------------------------------------------------------
# embeddings (CSV)
# ---------------------------------------------------------------------------


def parse_embeddings(lines: Iterable[str], *, path=None) -> EmbeddingTable:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("embeddings file is empty", path=path) from None
    if len(header) < 2 or header[0] != "id":
        raise DataError("embeddings header must be id,e0,...,e{D-1}", path=path, line=1)
    dim = len(header) - 1
    expected = ["id"] + [f"e{i}" for i in range(dim)]
    if header != expected:
        raise DataError("embeddings header must be id,e0,...,e{D-1}", path=path, line=1)
    records: list[EmbeddingRecord] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != dim + 1:
            raise DataError(f"expected {dim + 1} fields, got {len(row)}", path=path, line=lineno)
        eid = row[0]
        if not eid:
            raise DataError("empty embedding id", path=path, line=lineno)
        try:
            vec = np.asarray([float(v) for v in row[1:]], dtype=float)
        except ValueError as exc:
            raise DataError(f"invalid float in embedding {eid!r}", path=path, line=lineno) from exc
        if not np.all(np.isfinite(vec)):
            raise DataError(f"non-finite value in embedding {eid!r}", path=path, line=lineno)
        if not np.any(vec):
            raise DataError(f"embedding {eid!r} is the zero vector", path=path, line=lineno)
        records.append(EmbeddingRecord(id=eid, vector=vec))
    try:
        return EmbeddingTable(records)
    except DataError as exc:
        raise DataError(str(exc), path=path) from exc


def write_embeddings(table: EmbeddingTable | Sequence[EmbeddingRecord], fp) -> None:
    records = list(table)
    if not records:
        raise DataError("refusing to write an empty embedding table")
    dim = records[0].vector.shape[0]
    fp.write("id," + ",".join(f"e{i}" for i in range(dim)) + "\n")
    for r in records:
        fp.write(r.id + "," + ",".join(fmt_num(v) for v in r.vector) + "\n")


# ---------------------------------------------------------------------------
# weekly bucketing
# ---------------------------------------------------------------------------


def bucket_weeks(posts: Sequence[PostRecord], series: SurveillanceSeries) -> WeeklyBuckets:
    """Assign posts to surveillance weeks by the Monday of their UTC date.

    Posts outside the series range are dropped (tallied, not an error).
    """
    index: Mapping[date, int] = {w: i for i, w in enumerate(series.week_starts)}
    groups: list[list[str]] = [[] for _ in series.week_starts]
    dropped = 0
    for post in posts:
        week = week_start_of(post.timestamp.date())
        slot = index.get(week)
        if slot is None:
            dropped += 1
        else:
            groups[slot].append(post.id)
    return WeeklyBuckets(
        week_starts=series.week_starts,
        post_ids=tuple(tuple(sorted(g)) for g in groups),
        dropped=dropped,
    )
