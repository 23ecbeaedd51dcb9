from __future__ import annotations

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def wound_photo(tmp_path):
    """Synthetic photograph with a distinct dark irregular blob on skin tones."""
    rng = np.random.default_rng(1234)
    img = np.zeros((300, 400, 3), dtype=np.uint8)
    img[..., 0] = 205
    img[..., 1] = 170
    img[..., 2] = 150
    img = (img.astype(np.int16) + rng.integers(-12, 12, img.shape)).clip(0, 255).astype(np.uint8)
    yy, xx = np.mgrid[0:300, 0:400]
    blob = ((yy - 150) / 70.0) ** 2 + ((xx - 180) / 95.0) ** 2 < 1.0
    img[blob] = (120, 30, 35)
    path = tmp_path / "photo.png"
    Image.fromarray(img).save(path)
    return path
