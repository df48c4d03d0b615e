import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def frame_dir(tmp_path_factory):
    """Seven distinct small frames as numbered PNGs."""
    root = tmp_path_factory.mktemp("frames")
    rng = np.random.default_rng(0)
    for i in range(7):
        pixels = rng.integers(0, 256, size=(48, 64, 3), dtype=np.uint8)
        Image.fromarray(pixels, "RGB").save(root / f"frame_{i:03d}.png")
    return root


@pytest.fixture(scope="session")
def second_frame_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("frames2")
    rng = np.random.default_rng(1)
    for i in range(3):
        pixels = rng.integers(0, 256, size=(40, 40, 3), dtype=np.uint8)
        Image.fromarray(pixels, "RGB").save(root / f"frame_{i:03d}.png")
    return root
