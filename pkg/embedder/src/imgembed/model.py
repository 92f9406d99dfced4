"""Backbone construction.

The default model identifier asks for an Inception-ResNet-v2-class network whose
final pooled layer is 1536-wide.  When a pretrained copy of that network is
installed on the local machine (via ``timm``, weights already on disk) we use it.
This tool never downloads anything, so when no local copy exists we fall back to
a stand-in: a small convolutional stack with the same 299x299 input geometry and
the same 1536-wide global-average-pooled output, initialised from a fixed seed.
The stand-in is not a trained network -- its features are only useful as a
deterministic similarity signal -- but it keeps the whole pipeline runnable on a
machine with no model zoo, and two runs on the same machine produce identical
output either way.

Embeddings are only comparable when produced by the same backbone; the CLI
prints which one was used.
"""

from __future__ import annotations

import importlib.util
import logging
import math

import torch
from torch import nn

log = logging.getLogger("imgembed")

INPUT_SIZE = 299
STAND_IN_SEED = 0x1536

# The pooled width is a property of the network the identifier names, not a
# free parameter: the job's --dim is checked against it, never used to bend it.
MODEL_WIDTHS = {
    "inception-resnet-v2": 1536,
}

_TIMM_NAMES = {
    "inception-resnet-v2": "inception_resnet_v2",
}


def _seeded_fill(tensor: torch.Tensor, bound: float, gen: torch.Generator) -> None:
    with torch.no_grad():
        tensor.copy_(torch.rand(tensor.shape, generator=gen) * (2.0 * bound) - bound)


class StandInBackbone(nn.Module):
    """Fixed-seed conv stack: 3x299x299 in, ``width`` pooled features out."""

    def __init__(self, width: int, seed: int = STAND_IN_SEED) -> None:
        super().__init__()
        channels = [3, 24, 96, 256, width]
        strides = [4, 2, 2, 2]
        layers: list[nn.Module] = []
        for c_in, c_out, stride in zip(channels, channels[1:], strides):
            layers.append(nn.Conv2d(c_in, c_out, kernel_size=3, stride=stride, padding=1))
            layers.append(nn.ReLU(inplace=True))
        self.features = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.width = width

        gen = torch.Generator().manual_seed(seed)
        for module in self.features:
            if isinstance(module, nn.Conv2d):
                fan_in = module.in_channels * module.kernel_size[0] * module.kernel_size[1]
                _seeded_fill(module.weight, math.sqrt(6.0 / fan_in), gen)
                # A seeded nonzero bias keeps constant-colour (even all-black)
                # images away from the ReLU dead zone, so every decodable image
                # gets a nonzero embedding.
                _seeded_fill(module.bias, 0.1, gen)
        self.eval()

    def forward(self, batch: torch.Tensor) -> torch.Tensor:
        out = self.pool(self.features(batch))
        return torch.flatten(out, 1)


def _try_pretrained(model_id: str, width: int) -> nn.Module | None:
    """Load a locally-installed pretrained backbone, or return None.

    Never downloads: any attempt that would need the network fails fast inside
    the library and we fall through to the stand-in.
    """
    timm_name = _TIMM_NAMES.get(model_id)
    if timm_name is None or importlib.util.find_spec("timm") is None:
        return None
    import timm  # noqa: PLC0415 -- optional, only present on model-zoo machines

    try:
        model = timm.create_model(timm_name, pretrained=True, num_classes=0)
    except Exception as exc:  # no local weights, offline hub, etc.
        log.info("pretrained %s unavailable locally (%s)", model_id, exc)
        return None
    feat_width = getattr(model, "num_features", None)
    if feat_width != width:
        log.warning(
            "pretrained %s pools to %s features, not %s; ignoring it",
            model_id,
            feat_width,
            width,
        )
        return None
    model.eval()
    model.width = width
    return model


def load_backbone(model_id: str) -> tuple[nn.Module, str]:
    """Return ``(model, source)`` where source is 'pretrained' or 'stand-in'."""
    width = MODEL_WIDTHS[model_id]
    model = _try_pretrained(model_id, width)
    if model is not None:
        return model, "pretrained"
    return StandInBackbone(width), "stand-in"
