"""Torchvision trunks and the two feature heads.

``pooled`` returns the penultimate global-average-pooled activation as a 1x1
grid (2048 channels for the registered trunks).  ``multiscale`` concatenates
the three earliest residual-stage maps, bilinearly aligned to the finest grid
(56x56 at a 224 input), giving 256 + 512 + 1024 = 1792 channels.
"""

import torch
from torch.nn import functional as F
from torchvision import models

from .errors import ExportConfigError

_REGISTRY = {
    "resnet152": (models.resnet152, models.ResNet152_Weights.IMAGENET1K_V1),
    "wide_resnet50_2": (models.wide_resnet50_2,
                        models.Wide_ResNet50_2_Weights.IMAGENET1K_V1),
}

DEFAULT_BACKBONE = {"occ": "resnet152", "ads": "wide_resnet50_2"}


def backbone_ids():
    return sorted(_REGISTRY)


def load_backbone(backbone_id: str, device: str = "cpu", pretrained: bool = True):
    """Build the trunk in eval mode on the requested device."""
    if backbone_id not in _REGISTRY:
        raise ExportConfigError(
            f"unknown backbone {backbone_id!r}; known: {', '.join(backbone_ids())}")
    try:
        dev = torch.device(device)
    except (RuntimeError, ValueError) as e:
        raise ExportConfigError(f"bad device {device!r}: {e}") from e
    ctor, weights = _REGISTRY[backbone_id]
    if pretrained:
        net = ctor(weights=weights)
    else:
        # random fallback weights are seeded so repeat exports stay identical
        torch.manual_seed(0)
        net = ctor(weights=None)
    return net.to(dev).eval()


def _stem(net, x):
    x = net.relu(net.bn1(net.conv1(x)))
    return net.maxpool(x)


def pooled(net, x):
    """Penultimate embedding as a 1x1 grid: (b, C, 1, 1)."""
    x = _stem(net, x)
    x = net.layer4(net.layer3(net.layer2(net.layer1(x))))
    return net.avgpool(x)


def multiscale(net, x):
    """Three-stage map stack on the finest grid: (b, C1+C2+C3, 56, 56)."""
    x = _stem(net, x)
    f1 = net.layer1(x)
    f2 = net.layer2(f1)
    f3 = net.layer3(f2)
    size = f1.shape[-2:]
    up = [f1] + [F.interpolate(f, size=size, mode="bilinear", align_corners=False)
                 for f in (f2, f3)]
    return torch.cat(up, dim=1)
