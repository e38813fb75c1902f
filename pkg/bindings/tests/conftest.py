import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("bind_dataset")
    gen = np.random.Generator(np.random.Philox(4321))
    for i in range(6):
        arr = gen.integers(0, 256, size=(96, 96, 3), dtype=np.uint8)
        Image.fromarray(arr, mode="RGB").save(root / f"img_{i:02d}.png", format="PNG")
    return root
