"""Batch image embedder: pooled CNN features written to a CSV, one row per image."""

from imgembed.core import EmbedError, EmbedJob, embed_images

__all__ = ["EmbedError", "EmbedJob", "embed_images"]
