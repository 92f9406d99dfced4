"""Command-line front end.

Subcommands wire the pipeline together::

    flucast synth      --out corpus/ --seed 42 --weeks 317
    flucast featurize  --config run.toml --out out/
    flucast cv-search  --config run.toml --out out/
    flucast train      --config run.toml --out out/ --model gbt
    flucast evaluate   --config run.toml --out out/ --model gbt
    flucast forecast   --config run.toml --out out/ --horizon 3

Settings come from an optional TOML config file; command-line flags
override file values.  Exit status: 0 on success, 1 on a usage/config
mistake, 2 on bad or missing data files.  Every command writes a
``manifest-<command>.json`` recording the resolved settings, their hash,
the effective seed, and the package version — enough to reproduce the
outputs byte for byte.  No command mutates its inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import sys
from datetime import date, datetime
from pathlib import Path
from typing import Any, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import ConvergenceError, CorruptModelError, DataError, ModelVersionError
from .evaluation import SplitConfig, chronological_split, grid_search, shift_horizon, train_eval, train_model
from .features import (
    DEFAULT_KEYWORDS,
    DEFAULT_MULTIPLIER,
    Dataset,
    extract_features,
    read_features_csv,
    validate_keywords,
    write_features_csv,
)
from .ingest import parse_embeddings, parse_posts, parse_surveillance
from .models import KINDS, ModelSpec, feature_importances, save_model
from .synth import SynthConfig, generate_corpus, write_corpus
from .util import fmt_num


class UsageError(Exception):
    """A command-line or config-file mistake; exits with status 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; our contract reserves 2 for data
    # errors, so route usage problems through UsageError instead.
    def error(self, message: str):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "paths": {"posts", "embeddings", "references", "surveillance", "features", "out"},
    "features": {"keywords", "multiplier", "profile_corpus"},
    "eval": {"split_date", "horizon", "folds", "shuffle", "seed"},
    "model": {"kind", "seed", "hyperparameters"},
    "synth": {
        "seed",
        "weeks",
        "start",
        "base_rate",
        "peak_amplitude",
        "peak_week",
        "peak_width",
        "season_jitter",
        "keywords",
        "hashtag_base",
        "hashtag_slope",
        "flu_image_prob",
        "embedding_dim",
        "embedding_noise",
        "n_references",
    },
}
_GRID_KEYS = {"kind", "seed", "hyperparameters"}


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    try:
        with open(p, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{p}: invalid TOML: {exc}") from exc
    for section, body in cfg.items():
        if section == "grid":
            if not isinstance(body, list):
                raise UsageError(f"{p}: [[grid]] must be an array of tables")
            for i, entry in enumerate(body):
                unknown = set(entry) - _GRID_KEYS
                if unknown:
                    raise UsageError(f"{p}: grid entry {i + 1}: unknown keys {sorted(unknown)}")
            continue
        if section not in _CONFIG_KEYS:
            raise UsageError(f"{p}: unknown config section [{section}]")
        if not isinstance(body, dict):
            raise UsageError(f"{p}: [{section}] must be a table")
        unknown = set(body) - _CONFIG_KEYS[section]
        if unknown:
            raise UsageError(f"{p}: [{section}]: unknown keys {sorted(unknown)}")
    return cfg


def _cfg_get(cfg: dict, section: str, key: str, default=None):
    return cfg.get(section, {}).get(key, default)


def _pick(flag_value, cfg: dict, section: str, key: str, default=None):
    """Flag value if given, else config value, else default."""
    if flag_value is not None:
        return flag_value
    return _cfg_get(cfg, section, key, default)


def _as_date(value, what: str) -> date:
    if isinstance(value, datetime):
        raise UsageError(f"{what} must be a plain date (YYYY-MM-DD), not a datetime")
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from exc


def _flag_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _jsonable(value):
    """Settings values -> JSON-serializable, deterministically."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


# ---------------------------------------------------------------------------
# shared resolution helpers
# ---------------------------------------------------------------------------


def _out_dir(cfg: dict, args) -> Path:
    out = _pick(getattr(args, "out", None), cfg, "paths", "out", ".")
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _resolve_threads(args) -> int:
    value = getattr(args, "threads", None)
    if value is None:
        env = os.environ.get("FLUCAST_THREADS")
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"FLUCAST_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise UsageError("threads must be >= 1")
    return value


def _read_lines(path, role: str) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{role} file not found: {p}")
    return p.read_text(encoding="utf-8").splitlines()


def _need_path(cfg: dict, args, key: str):
    value = _pick(getattr(args, key, None), cfg, "paths", key)
    if value is None:
        raise UsageError(f"no {key} path given (--{key} or [paths].{key})")
    return value


def _resolve_keywords(cfg: dict, args) -> tuple[str, ...]:
    flag = getattr(args, "keywords", None)
    if flag is not None:
        kws: Sequence[str] = [k.strip() for k in flag.split(",") if k.strip()]
    else:
        kws = _cfg_get(cfg, "features", "keywords", list(DEFAULT_KEYWORDS))
    try:
        return validate_keywords(kws)
    except DataError as exc:
        raise UsageError(str(exc)) from exc


def _resolve_split_date(cfg: dict, args, *, required: bool) -> date | None:
    value = getattr(args, "split_date", None)
    if value is None:
        value = _cfg_get(cfg, "eval", "split_date")
        if value is not None:
            value = _as_date(value, "[eval].split_date")
    if value is None and required:
        raise UsageError("no split date given (--split-date or [eval].split_date)")
    return value


def _split_config(cfg: dict, args, *, default_horizon: int) -> SplitConfig:
    split_date = _resolve_split_date(cfg, args, required=True)
    horizon = _pick(getattr(args, "horizon", None), cfg, "eval", "horizon", default_horizon)
    folds = _pick(getattr(args, "folds", None), cfg, "eval", "folds", 10)
    try:
        return SplitConfig(split_date=split_date, horizon=int(horizon), folds=int(folds))
    except DataError as exc:
        raise UsageError(str(exc)) from exc


def _mk_spec(doc: dict, *, origin: str) -> ModelSpec:
    """Build a ModelSpec from a {kind, hyperparameters?, seed?} mapping.

    origin="config" maps validation failures to usage errors (the mistake
    is in flags or the config file); origin="file" keeps them as data
    errors (the mistake is in an on-disk artifact).
    """
    try:
        return ModelSpec(
            kind=doc.get("kind"),
            hyperparameters=doc.get("hyperparameters") or {},
            seed=doc.get("seed"),
        )
    except DataError as exc:
        if origin == "config":
            raise UsageError(str(exc)) from exc
        raise


def _expand_grid(entries: list, path_hint: str = "[[grid]]") -> list[ModelSpec]:
    """Expand grid entries into specs.

    Within an entry, a list-valued hyperparameter sweeps those values; the
    Cartesian product is taken in key order, entries in file order, so grid
    position (the tie-breaker) is deterministic.
    """
    specs: list[ModelSpec] = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "kind" not in entry:
            raise UsageError(f"{path_hint} entry {i + 1} must be a table with a 'kind'")
        hp = entry.get("hyperparameters", {})
        if not isinstance(hp, dict):
            raise UsageError(f"{path_hint} entry {i + 1}: hyperparameters must be a table")
        names = list(hp)
        pools = [v if isinstance(v, list) else [v] for v in hp.values()]
        for combo in itertools.product(*pools):
            specs.append(
                _mk_spec(
                    {"kind": entry["kind"], "seed": entry.get("seed"), "hyperparameters": dict(zip(names, combo))},
                    origin="config",
                )
            )
    if not specs:
        raise UsageError(f"{path_hint} is empty")
    return specs


def _resolve_spec_or_grid(cfg: dict, args) -> tuple[ModelSpec | None, list[ModelSpec] | None]:
    """Pick the model: (spec, None) when fixed, (None, grid) when a CV
    search should choose.  Precedence: --spec > --model > [model] > [[grid]].
    """
    spec_path = getattr(args, "spec", None)
    model_kind = getattr(args, "model", None)
    seed_flag = getattr(args, "seed", None)
    if spec_path is not None and model_kind is not None:
        raise UsageError("--model and --spec are mutually exclusive")
    if spec_path is not None:
        p = Path(spec_path)
        if not p.is_file():
            raise DataError(f"spec file not found: {p}")
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"spec file {p} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise DataError(f"spec file {p} must hold a JSON object")
        if seed_flag is not None:
            doc = dict(doc, seed=seed_flag)
        return _mk_spec(doc, origin="file"), None
    model_section = cfg.get("model")
    if model_kind is not None:
        doc = dict(model_section) if model_section else {}
        doc["kind"] = model_kind
        if seed_flag is not None:
            doc["seed"] = seed_flag
        return _mk_spec(doc, origin="config"), None
    if model_section is not None:
        doc = dict(model_section)
        if seed_flag is not None:
            doc["seed"] = seed_flag
        return _mk_spec(doc, origin="config"), None
    if "grid" in cfg:
        return None, _expand_grid(cfg["grid"])
    raise UsageError("no model given (--model, --spec, [model], or [[grid]])")


def _mask_dataset(dataset: Dataset, mask: np.ndarray) -> Dataset:
    return Dataset(
        week_starts=tuple(w for w, keep in zip(dataset.week_starts, mask) if keep),
        X=dataset.X[mask].copy(),
        y=dataset.y[mask].copy(),
        columns=dataset.columns,
        modalities=dataset.modalities,
    )


# ---------------------------------------------------------------------------
# dataset loading (cached features file, or the raw corpus)
# ---------------------------------------------------------------------------


def _load_raw_dataset(cfg: dict, args) -> tuple[Dataset, dict[str, Any]]:
    posts_path = _need_path(cfg, args, "posts")
    embeddings_path = _need_path(cfg, args, "embeddings")
    references_path = _need_path(cfg, args, "references")
    surveillance_path = _need_path(cfg, args, "surveillance")
    keywords = _resolve_keywords(cfg, args)
    multiplier = float(_pick(getattr(args, "multiplier", None), cfg, "features", "multiplier", DEFAULT_MULTIPLIER))
    mode = _pick(getattr(args, "profile_corpus", None), cfg, "features", "profile_corpus", "train")
    if mode not in ("train", "all"):
        raise UsageError(f"profile corpus mode must be 'train' or 'all', got {mode!r}")
    split_date = _resolve_split_date(cfg, args, required=(mode == "train"))

    posts = parse_posts(_read_lines(posts_path, "posts"), path=str(posts_path))
    embeddings = parse_embeddings(_read_lines(embeddings_path, "embeddings"), path=str(embeddings_path))
    references = parse_embeddings(_read_lines(references_path, "references"), path=str(references_path))
    series = parse_surveillance(_read_lines(surveillance_path, "surveillance"), path=str(surveillance_path))

    dataset, _profiles, buckets = extract_features(
        posts,
        embeddings,
        references,
        series,
        keywords=keywords,
        multiplier=multiplier,
        profile_corpus=mode,
        split_date=split_date,
    )
    if buckets.dropped:
        print(f"note: {buckets.dropped} post(s) fell outside the surveillance range and were dropped")
    resolved = {
        "posts": str(posts_path),
        "embeddings": str(embeddings_path),
        "references": str(references_path),
        "surveillance": str(surveillance_path),
        "keywords": list(keywords),
        "multiplier": multiplier,
        "profile_corpus": mode,
    }
    if split_date is not None:
        resolved["profile_split_date"] = split_date.isoformat()
    return dataset, resolved


def _load_dataset(cfg: dict, args) -> tuple[Dataset, dict[str, Any]]:
    features_path = _pick(getattr(args, "features", None), cfg, "paths", "features")
    if features_path is not None:
        dataset = read_features_csv(_read_lines(features_path, "features"), path=str(features_path))
        return dataset, {"features": str(features_path)}
    return _load_raw_dataset(cfg, args)


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------


def _write_json(path: Path, obj, *, indent: int | None = None) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=indent, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def _write_manifest(out_dir: Path, command: str, resolved: dict[str, Any], seed: int | None) -> None:
    config = _jsonable(resolved)
    body = {
        "command": command,
        "config": config,
        "config_sha256": hashlib.sha256(_canonical_json(config).encode("utf-8")).hexdigest(),
        "seed": seed,
        "version": __version__,
    }
    _write_json(out_dir / f"manifest-{command}.json", body)


def _metrics_doc(metrics) -> dict[str, Any]:
    return {
        "mae": metrics.mae,
        "r2": metrics.r2,
        "pearson_r": metrics.pearson_r,
        "p_value": metrics.p_value,
        "n": metrics.n,
    }


def _format_metric(value) -> str:
    return "undefined" if value is None else f"{value:.4g}"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_synth(cfg: dict, args) -> int:
    out_dir = _out_dir(cfg, args)
    section = cfg.get("synth", {})
    fields: dict[str, Any] = dict(section)
    if "start" in fields:
        fields["start"] = _as_date(fields["start"], "[synth].start")
    for name in ("keywords", "hashtag_base", "hashtag_slope"):
        if name in fields:
            fields[name] = tuple(fields[name])
    if args.seed is not None:
        fields["seed"] = args.seed
    if args.weeks is not None:
        fields["weeks"] = args.weeks
    if args.start is not None:
        fields["start"] = args.start
    if args.realistic:
        fields["embedding_dim"] = 1536
    try:
        config = SynthConfig(**fields)
    except (DataError, TypeError) as exc:
        raise UsageError(f"invalid synth settings: {exc}") from exc

    corpus = generate_corpus(config)
    paths = write_corpus(corpus, out_dir)
    resolved = {
        "seed": config.seed,
        "weeks": config.weeks,
        "start": config.start,
        "base_rate": config.base_rate,
        "peak_amplitude": config.peak_amplitude,
        "peak_week": config.peak_week,
        "peak_width": config.peak_width,
        "season_jitter": config.season_jitter,
        "keywords": list(config.keywords),
        "hashtag_base": list(config.hashtag_base),
        "hashtag_slope": list(config.hashtag_slope),
        "flu_image_prob": config.flu_image_prob,
        "embedding_dim": config.embedding_dim,
        "embedding_noise": config.embedding_noise,
        "n_references": config.n_references,
        "out": str(out_dir),
    }
    _write_manifest(out_dir, "synth", resolved, config.seed)
    print(f"wrote {len(corpus.posts)} posts over {config.weeks} weeks to {out_dir}")
    for name in sorted(paths):
        print(f"  {paths[name]}")
    return 0


def _cmd_featurize(cfg: dict, args) -> int:
    out_dir = _out_dir(cfg, args)
    dataset, resolved = _load_raw_dataset(cfg, args)
    resolved["out"] = str(out_dir)
    target = out_dir / "features.csv"
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        write_features_csv(dataset, fh)
    _write_manifest(out_dir, "featurize", resolved, None)
    print(f"wrote {dataset.n_rows} weeks x {len(dataset.columns)} features to {target}")
    return 0


def _cv_settings(cfg: dict, args) -> tuple[bool, int | None]:
    shuffle = _pick(getattr(args, "shuffle", None), cfg, "eval", "shuffle", False)
    cv_seed = _pick(getattr(args, "shuffle_seed", None), cfg, "eval", "seed")
    if shuffle and cv_seed is None:
        raise UsageError("shuffled folds require a seed (--shuffle-seed or [eval].seed)")
    return bool(shuffle), cv_seed


def _cmd_cv_search(cfg: dict, args) -> int:
    out_dir = _out_dir(cfg, args)
    dataset, resolved = _load_dataset(cfg, args)
    threads = _resolve_threads(args)
    shuffle, cv_seed = _cv_settings(cfg, args)
    folds = int(_pick(args.folds, cfg, "eval", "folds", 10))
    horizon = int(_pick(args.horizon, cfg, "eval", "horizon", 0))
    if horizon < 0:
        raise UsageError("horizon must be >= 0")

    if "grid" in cfg:
        grid = _expand_grid(cfg["grid"])
    elif cfg.get("model") is not None or getattr(args, "model", None) is not None:
        spec, _ = _resolve_spec_or_grid(cfg, args)
        grid = [spec]
    else:
        raise UsageError("cv-search needs a [[grid]] (or a single [model] / --model)")

    search_ds = shift_horizon(dataset, horizon)
    split_date = _resolve_split_date(cfg, args, required=False)
    if split_date is not None:
        train_mask, _ = chronological_split(search_ds, split_date)
        search_ds = _mask_dataset(search_ds, train_mask)
    best, table = grid_search(search_ds, grid, folds=folds, shuffle=shuffle, seed=cv_seed, threads=threads)

    resolved.update(
        {
            "horizon": horizon,
            "folds": folds,
            "shuffle": shuffle,
            "grid": [spec.describe() for spec in grid],
        }
    )
    if split_date is not None:
        resolved["split_date"] = split_date.isoformat()
    if cv_seed is not None:
        resolved["cv_seed"] = cv_seed
    _write_json(out_dir / "cv_table.json", table, indent=2)
    _write_json(out_dir / "best_spec.json", best.describe())
    _write_manifest(out_dir, "cv-search", resolved, cv_seed)
    mean = min(row["mean_mae"] for row in table)
    print(f"searched {len(grid)} spec(s) over {folds} folds; best {best.kind} (mean MAE {mean:.4g})")
    print(f"  {out_dir / 'cv_table.json'}")
    print(f"  {out_dir / 'best_spec.json'}")
    return 0


def _cmd_train(cfg: dict, args) -> int:
    out_dir = _out_dir(cfg, args)
    dataset, resolved = _load_dataset(cfg, args)
    split = _split_config(cfg, args, default_horizon=0)
    spec, grid = _resolve_spec_or_grid(cfg, args)
    if spec is None:
        raise UsageError("train needs a single model (--model, --spec, or [model]); run cv-search for grids")
    model, normalizer = train_model(dataset, spec, split)
    doc = json.loads(save_model(model))
    doc["normalizer"] = {"mean": list(normalizer.mean), "std": list(normalizer.std)}
    target = out_dir / "model.json"
    _write_json(target, doc)
    resolved.update(
        {
            "split_date": split.split_date.isoformat(),
            "horizon": split.horizon,
            "folds": split.folds,
            "model": spec.describe(),
        }
    )
    _write_manifest(out_dir, "train", resolved, spec.seed)
    print(f"trained {spec.kind} on {model.n_features} features; wrote {target}")
    return 0


def _run_eval(cfg: dict, args, command: str) -> int:
    out_dir = _out_dir(cfg, args)
    dataset, resolved = _load_dataset(cfg, args)
    default_h = 0 if command == "evaluate" else 1
    split = _split_config(cfg, args, default_horizon=default_h)
    spec, grid = _resolve_spec_or_grid(cfg, args)

    cv_table: list[dict[str, Any]] = []
    if spec is None:
        threads = _resolve_threads(args)
        shuffle, cv_seed = _cv_settings(cfg, args)
        shifted = shift_horizon(dataset, split.horizon)
        train_mask, _ = chronological_split(shifted, split.split_date)
        spec, cv_table = grid_search(
            _mask_dataset(shifted, train_mask),
            grid,
            folds=split.folds,
            shuffle=shuffle,
            seed=cv_seed,
            threads=threads,
        )

    report = train_eval(dataset, spec, split)
    resolved.update(
        {
            "split_date": split.split_date.isoformat(),
            "horizon": split.horizon,
            "folds": split.folds,
            "model": spec.describe(),
        }
    )

    doc: dict[str, Any] = {
        "config": dict(resolved, command=command),
        "metrics": _metrics_doc(report.metrics),
        "cv_table": cv_table,
        "predictions": [
            {"week_start": w.isoformat(), "actual": float(a), "predicted": float(p)}
            for w, a, p in zip(report.week_starts, report.actual, report.predicted)
        ],
    }
    if spec.kind in ("tree", "random_forest", "gbt"):
        try:
            imp = feature_importances(report.model)
        except DataError:
            pass  # a model that never split has no gain to attribute
        else:
            doc["importances"] = {
                "per_feature": {name: value for name, value in imp.per_feature},
                "per_modality": {name: value for name, value in imp.per_modality},
            }

    _write_json(out_dir / "report.json", doc, indent=2)
    with open(out_dir / "predictions.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("week_start,actual,predicted\n")
        for w, a, p in zip(report.week_starts, report.actual, report.predicted):
            fh.write(f"{w.isoformat()},{fmt_num(float(a))},{fmt_num(float(p))}\n")
    _write_manifest(out_dir, command, resolved, spec.seed)

    m = report.metrics
    print(
        f"{spec.kind} h={split.horizon}: n={m.n} MAE={m.mae:.4g} "
        f"R2={_format_metric(m.r2)} r={_format_metric(m.pearson_r)} p={_format_metric(m.p_value)}"
    )
    print(f"  {out_dir / 'report.json'}")
    print(f"  {out_dir / 'predictions.csv'}")
    return 0


def _cmd_evaluate(cfg: dict, args) -> int:
    return _run_eval(cfg, args, "evaluate")


def _cmd_forecast(cfg: dict, args) -> int:
    return _run_eval(cfg, args, "forecast")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="flucast", description="Weekly flu-activity nowcasting from social-media signals.")
    parser.add_argument("--version", action="version", version=f"flucast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="TOML", help="config file; flags override its values")
    common.add_argument("--out", metavar="DIR", help="output directory (default: [paths].out or '.')")

    data = _Parser(add_help=False)
    data.add_argument("--features", metavar="CSV", help="precomputed features file (skips the raw corpus)")
    data.add_argument("--posts", metavar="JSONL")
    data.add_argument("--embeddings", metavar="CSV")
    data.add_argument("--references", metavar="CSV")
    data.add_argument("--surveillance", metavar="CSV")
    data.add_argument("--keywords", metavar="K1,K2,...", help="hashtag keywords (comma-separated)")
    data.add_argument("--multiplier", type=float, metavar="C", help="match threshold: mean - C*std")
    data.add_argument(
        "--profile-corpus",
        dest="profile_corpus",
        choices=("train", "all"),
        help="embeddings population for reference profiling (default train)",
    )
    data.add_argument("--split-date", dest="split_date", type=_flag_date, metavar="YYYY-MM-DD")

    modelargs = _Parser(add_help=False)
    modelargs.add_argument("--model", choices=KINDS, help="model kind with schema defaults")
    modelargs.add_argument("--spec", metavar="JSON", help="model spec file (e.g. best_spec.json)")
    modelargs.add_argument("--seed", type=int, help="model seed")

    cvargs = _Parser(add_help=False)
    cvargs.add_argument("--folds", type=int, metavar="K")
    cvargs.add_argument("--shuffle", action=argparse.BooleanOptionalAction, help="shuffle rows before folding")
    cvargs.add_argument("--shuffle-seed", dest="shuffle_seed", type=int, metavar="N")
    cvargs.add_argument("--threads", type=int, metavar="N", help="grid-search workers (or FLUCAST_THREADS)")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--seed", type=int)
    p.add_argument("--weeks", type=int)
    p.add_argument("--start", type=_flag_date, metavar="YYYY-MM-DD", help="first week's Monday")
    p.add_argument("--realistic", action="store_true", help="full-width embeddings (D=1536)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("featurize", parents=[common, data], help="build the weekly feature table")
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("cv-search", parents=[common, data, modelargs, cvargs], help="grid-search by CV MAE")
    p.add_argument("--horizon", type=int, metavar="H")
    p.set_defaults(func=_cmd_cv_search)

    p = sub.add_parser("train", parents=[common, data, modelargs], help="train and save one model")
    p.add_argument("--horizon", type=int, metavar="H")
    p.add_argument("--folds", type=int, metavar="K", help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", parents=[common, data, modelargs, cvargs], help="train and score on held-out weeks")
    p.add_argument("--horizon", type=int, metavar="H")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("forecast", parents=[common, data, modelargs, cvargs], help="evaluate a look-ahead model")
    p.add_argument("--horizon", type=int, metavar="H", help="weeks ahead (default 1)")
    p.set_defaults(func=_cmd_forecast)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        cfg = _load_config(args.config)
        return args.func(cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ConvergenceError, CorruptModelError, ModelVersionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
