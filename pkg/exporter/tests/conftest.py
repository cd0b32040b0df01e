"""Shared fixture: a tiny MVTec-style image tree."""

import numpy as np
import pytest
from PIL import Image

from _images import write_png


@pytest.fixture(scope="session")
def image_root(tmp_path_factory):
    """Two good images, one scratch anomaly, and its ground-truth mask."""
    root = tmp_path_factory.mktemp("imgs")
    write_png(root / "good" / "000.png", seed=0)
    write_png(root / "good" / "001.png", seed=1, size=(64, 64))
    write_png(root / "scratch" / "000.png", seed=2, size=(56, 72))
    mask = np.zeros((72, 56), dtype=np.uint8)
    mask[20:50, 10:40] = 255
    p = root / "ground_truth" / "scratch" / "000_mask.png"
    p.parent.mkdir(parents=True)
    Image.fromarray(mask).save(p)
    return root
