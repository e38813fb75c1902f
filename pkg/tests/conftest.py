import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from spgym import GridDims, bfs_distances


@pytest.fixture(scope="session")
def dims33():
    return GridDims(3, 3)


@pytest.fixture(scope="session")
def dims22():
    return GridDims(2, 2)


@pytest.fixture(scope="session")
def table33(dims33):
    """Full optimal-depth table for the 3x3 puzzle, packed keys."""
    return bfs_distances(dims33)


def _write_images(root: Path, names, seed, size=120):
    root.mkdir(parents=True, exist_ok=True)
    gen = np.random.Generator(np.random.Philox(seed))
    for name in names:
        arr = gen.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
        img = Image.fromarray(arr, mode="RGB")
        img.save(root / name, format="PNG" if name.endswith(".png") else "JPEG")
    return root


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """12 deterministic random images, PNG and JPEG mixed."""
    names = [f"train_{i:03d}.png" for i in range(10)] + ["train_j0.jpg", "train_j1.jpg"]
    return _write_images(tmp_path_factory.mktemp("dataset"), names, seed=1234)


@pytest.fixture(scope="session")
def heldout_dir(tmp_path_factory):
    names = [f"held_{i:03d}.png" for i in range(8)]
    return _write_images(tmp_path_factory.mktemp("heldout"), names, seed=9876)


@pytest.fixture()
def corrupt_dataset_dir(tmp_path):
    root = _write_images(tmp_path / "corrupt", [f"ok_{i}.png" for i in range(4)], seed=55)
    (root / "broken_a.png").write_bytes(b"this is not a png")
    (root / "broken_b.jpg").write_bytes(b"\x00" * 32)
    return root
