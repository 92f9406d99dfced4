"""Synthetic corpus generation for end-to-end testing.

Everything derives from one master seed through named SplitMix64 streams
("epidemic", "posts", "embeddings", "season:<year>"), so regenerating
with the same config is byte-identical and changing one stage never
shifts the randomness of another.

The world model: weekly incidence follows a seasonal pulse
lambda_t = base_rate + amplitude * season_mult * exp(-cd^2 / (2 width^2))
(cd = circular ISO-week distance to peak_week, season_mult a per-season
log-normal factor) sampled as Poisson counts.  Each keyword emits
Poisson(base_k + slope_k * incidence) tagged posts per week; a
flu_image_prob fraction of posts carry an embedding near a randomly
chosen reference vector (reference + per-dimension Gaussian noise), the
rest get uniform random unit vectors, so hashtag counts and
image-similarity counts both track incidence.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import DataError
from .features import DEFAULT_KEYWORDS
from .ingest import (
    EmbeddingRecord,
    EmbeddingTable,
    PostRecord,
    SurveillanceSeries,
    write_embeddings,
    write_posts,
    write_surveillance,
)
from .util import is_monday

# ---------------------------------------------------------------------------
# deterministic PRNG
# ---------------------------------------------------------------------------

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream.  Output i is a pure function of (seed, i), so
    blocks of draws are produced vectorized without changing the stream."""

    def __init__(self, seed: int):
        self._seed = seed & _MASK
        self._drawn = 0

    def raw(self, count: int) -> np.ndarray:
        idx = self._drawn + 1 + np.arange(count, dtype=np.uint64)
        self._drawn += count
        z = (np.uint64(self._seed) + idx * np.uint64(_GAMMA)) & np.uint64(_MASK)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniforms(self, count: int) -> np.ndarray:
        """count floats in [0, 1) with 53-bit resolution."""
        return (self.raw(count) >> np.uint64(11)) * (2.0**-53)

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, count: int) -> np.ndarray:
        """Standard normals via Box-Muller on consecutive uniform pairs."""
        pairs = (count + 1) // 2
        u1 = self.uniforms(pairs)
        u2 = self.uniforms(pairs)
        u1 = np.where(u1 == 0.0, 2.0**-53, u1)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:count]

    def poisson(self, lam: float) -> int:
        """Poisson sample by sequential CDF inversion.  Large rates split
        additively (Poisson(a+b) = Poisson(a) + Poisson(b)) to keep
        exp(-lam) representable."""
        if lam < 0 or not math.isfinite(lam):
            raise DataError(f"invalid Poisson rate {lam!r}")
        if lam == 0.0:
            return 0
        if lam > 600.0:
            half = lam / 2.0
            return self.poisson(half) + self.poisson(lam - half)
        u = self.uniform()
        p = math.exp(-lam)
        s = p
        k = 0
        while u > s and p > 0.0:
            k += 1
            p *= lam / k
            s += p
        return k


def derive_seed(master: int, purpose: str) -> int:
    """Stable per-purpose stream seed: master XOR the first 8 bytes of
    SHA-256(purpose)."""
    tag = int.from_bytes(hashlib.sha256(purpose.encode("utf-8")).digest()[:8], "big")
    return (master ^ tag) & _MASK


def stream(master: int, purpose: str) -> SplitMix64:
    return SplitMix64(derive_seed(master, purpose))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

# Per-keyword Poisson post rates: count_k ~ base_k + slope_k * incidence.
DEFAULT_HASHTAG_BASE: tuple[float, ...] = (0.5, 3.0, 10.0, 0.5, 0.1, 2.0, 0.4)
DEFAULT_HASHTAG_SLOPE: tuple[float, ...] = (0.06, 0.4, 1.5, 0.08, 0.01, 0.15, 0.05)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    weeks: int = 317
    start: date = date(2012, 4, 30)
    base_rate: float = 20.0
    peak_amplitude: float = 180.0
    peak_week: int = 8
    peak_width: float = 3.0
    season_jitter: float = 0.25
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    hashtag_base: tuple[float, ...] = DEFAULT_HASHTAG_BASE
    hashtag_slope: tuple[float, ...] = DEFAULT_HASHTAG_SLOPE
    flu_image_prob: float = 0.12
    embedding_dim: int = 16
    embedding_noise: float = 0.075
    n_references: int = 4

    def __post_init__(self):
        if self.weeks < 60:
            raise DataError("need at least 60 weeks for a usable train/test split")
        if not is_monday(self.start):
            raise DataError(f"start {self.start} is not a Monday")
        if not (0 <= self.seed < 2**64):
            raise DataError("seed must be a 64-bit unsigned integer")
        for name in ("base_rate", "peak_amplitude", "peak_width", "season_jitter", "embedding_noise"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be non-negative")
        if not 1 <= self.peak_week <= 53:
            raise DataError("peak_week must be an ISO week number (1-53)")
        if not 0.0 <= self.flu_image_prob <= 1.0:
            raise DataError("flu_image_prob must lie in [0, 1]")
        if self.embedding_dim < 2:
            raise DataError("embedding_dim must be >= 2")
        if self.n_references < 1:
            raise DataError("need at least one reference")
        k = len(self.keywords)
        if len(self.hashtag_base) != k or len(self.hashtag_slope) != k:
            raise DataError("hashtag_base/hashtag_slope must match the keyword list")
        if any(v < 0 for v in self.hashtag_base) or any(v < 0 for v in self.hashtag_slope):
            raise DataError("hashtag rates must be non-negative")


def negative_control(cfg: SynthConfig) -> SynthConfig:
    """Variant whose features carry no signal about incidence: hashtag
    slopes and flu_image_prob zeroed so counts and image matches are pure
    noise, plus a flat epidemic (no seasonal pulse) so date features are
    uninformative too — a seasonal target would still be predictable from
    the week number alone."""
    return replace(
        cfg,
        peak_amplitude=0.0,
        season_jitter=0.0,
        hashtag_slope=tuple(0.0 for _ in cfg.keywords),
        flu_image_prob=0.0,
    )


# ---------------------------------------------------------------------------
# epidemic curve
# ---------------------------------------------------------------------------


def _iso_weeks_in_year(iso_year: int) -> int:
    # the year containing Dec 28 in ISO terms always holds the last week
    return date(iso_year, 12, 28).isocalendar()[1]


def _season_year(week_start: date, peak_week: int) -> int:
    """Group weeks into seasons split opposite the peak, so one seasonal
    pulse never straddles a season boundary."""
    shifted = week_start + timedelta(weeks=26 - peak_week)
    return shifted.isocalendar()[0]


def generate_epidemic(cfg: SynthConfig) -> SurveillanceSeries:
    rng = stream(cfg.seed, "epidemic")
    multipliers: dict[int, float] = {}
    entries = []
    week_start = cfg.start
    for _ in range(cfg.weeks):
        iso_year, iso_week = week_start.isocalendar()[:2]
        season = _season_year(week_start, cfg.peak_week)
        if season not in multipliers:
            z = float(stream(cfg.seed, f"season:{season}").normals(1)[0])
            multipliers[season] = math.exp(cfg.season_jitter * z)
        period = _iso_weeks_in_year(iso_year)
        delta = abs(iso_week - cfg.peak_week)
        cd = min(delta, period - delta)
        if cfg.peak_width == 0.0:
            pulse = 1.0 if cd == 0 else 0.0
        else:
            pulse = math.exp(-(cd**2) / (2.0 * cfg.peak_width**2))
        lam = cfg.base_rate + cfg.peak_amplitude * multipliers[season] * pulse
        entries.append((week_start, rng.poisson(lam)))
        week_start += timedelta(weeks=1)
    return SurveillanceSeries(entries=tuple(entries))


# ---------------------------------------------------------------------------
# posts and embeddings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthCorpus:
    config: SynthConfig
    series: SurveillanceSeries
    posts: tuple[PostRecord, ...]
    embeddings: EmbeddingTable
    references: EmbeddingTable


def generate_corpus(cfg: SynthConfig) -> SynthCorpus:
    series = generate_epidemic(cfg)
    post_rng = stream(cfg.seed, "posts")
    emb_rng = stream(cfg.seed, "embeddings")

    def unit_vector() -> np.ndarray:
        # normalized Gaussian = uniform direction on the sphere
        v = emb_rng.normals(cfg.embedding_dim)
        norm = float(np.linalg.norm(v))
        while norm == 0.0:  # vanishing probability, but never emit a zero vector
            v = emb_rng.normals(cfg.embedding_dim)
            norm = float(np.linalg.norm(v))
        return v / norm

    refs = [EmbeddingRecord(id=f"ref{i + 1}", vector=unit_vector()) for i in range(cfg.n_references)]

    posts: list[PostRecord] = []
    embeddings: list[EmbeddingRecord] = []
    counter = 0
    for week_start, incidence in series.entries:
        week_t0 = datetime(week_start.year, week_start.month, week_start.day, tzinfo=timezone.utc)
        for kw, base, slope in zip(cfg.keywords, cfg.hashtag_base, cfg.hashtag_slope):
            n_posts = post_rng.poisson(base + slope * incidence)
            for _ in range(n_posts):
                counter += 1
                pid = f"p{counter:07d}"
                offset = min(int(post_rng.uniform() * 604800.0), 604799)
                ts = week_t0 + timedelta(seconds=offset)
                if emb_rng.uniform() < cfg.flu_image_prob:
                    ref_idx = min(int(emb_rng.uniform() * cfg.n_references), cfg.n_references - 1)
                    vec = refs[ref_idx].vector + cfg.embedding_noise * emb_rng.normals(cfg.embedding_dim)
                else:
                    vec = unit_vector()
                embeddings.append(EmbeddingRecord(id=pid, vector=vec))
                posts.append(
                    PostRecord(id=pid, timestamp=ts, hashtags=frozenset({kw}), embedding_id=pid)
                )
    return SynthCorpus(
        config=cfg,
        series=series,
        posts=tuple(posts),
        embeddings=EmbeddingTable(embeddings),
        references=EmbeddingTable(refs),
    )


def write_corpus(corpus: SynthCorpus, out_dir) -> dict[str, str]:
    """Write the four corpus files; returns {name: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "posts": out / "posts.jsonl",
        "embeddings": out / "embeddings.csv",
        "references": out / "references.csv",
        "surveillance": out / "surveillance.csv",
    }
    with open(paths["posts"], "w", encoding="utf-8", newline="\n") as fp:
        write_posts(corpus.posts, fp)
    with open(paths["embeddings"], "w", encoding="utf-8", newline="\n") as fp:
        write_embeddings(corpus.embeddings, fp)
    with open(paths["references"], "w", encoding="utf-8", newline="\n") as fp:
        write_embeddings(corpus.references, fp)
    with open(paths["surveillance"], "w", encoding="utf-8", newline="\n") as fp:
        write_surveillance(corpus.series, fp)
    return {k: str(v) for k, v in paths.items()}
