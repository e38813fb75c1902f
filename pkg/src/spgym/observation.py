"""Image pools and the observation function.

Images live in the engine as channel-last float32 tensors in [0, 1]; 8-bit
conversion happens only at file boundaries.  A pool is loaded once per run from
a directory listing, and each episode textures the board with one pool image:
the image is split into H x W patches and the patch whose home is tile t's goal
cell is drawn wherever t currently sits.  The blank cell renders black by
default.

File formats
------------
* Pool manifest: ``# pool_seed=<seed> render_size=<S>`` header line, then one
  source id per line.
* Raw tensor: 16-byte header (magic ``SPGT``, then H, W, C as uint32 LE)
  followed by float32 LE payload.  Records can be concatenated in one file.
* PNG export quantizes with round-to-nearest.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import GridDims, PuzzleState, goal_position
from .errors import ConfigurationError, DomainError
from .rng import RandomSource

TENSOR_MAGIC = b"SPGT"
IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}

DEFAULT_RENDER_SIZE = 84
CROP_RENDER_SIZE = 100  # render large, crop back down to DEFAULT_RENDER_SIZE


class Modality(str, enum.Enum):
    IMAGE = "image"
    ONEHOT = "onehot"
    STATE = "state"


@dataclass(frozen=True)
class ObsSpec:
    modality: Modality = Modality.IMAGE
    render_size: int = DEFAULT_RENDER_SIZE

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        if self.render_size < 2:
            raise DomainError("render_size must be >= 2")


@dataclass(frozen=True)
class ImagePool:
    images: np.ndarray  # (p, S, S, 3) float32 in [0, 1]
    source_ids: tuple[str, ...]
    pool_seed: int
    render_size: int
    skipped: tuple[str, ...] = field(default=())

    @property
    def size(self) -> int:
        return len(self.source_ids)

    def save_manifest(self, path) -> None:
        lines = [f"# pool_seed={self.pool_seed} render_size={self.render_size}"]
        lines.extend(self.source_ids)
        Path(path).write_text("\n".join(lines) + "\n")


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resample with edge clamping.

    Interpolates in float64 with the a + (b - a) * t form, so equal-size calls
    and zero-weight neighbours reproduce input values bit-exactly.
    """
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    src = img.astype(np.float64)
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    ia = src[np.ix_(y0c, x0c)]
    ib = src[np.ix_(y0c, x1c)]
    ic = src[np.ix_(y1c, x0c)]
    id_ = src[np.ix_(y1c, x1c)]
    top = ia + (ib - ia) * fx
    bottom = ic + (id_ - ic) * fx
    out = top + (bottom - top) * fy
    return out.astype(img.dtype)


def decode_image(path, render_size: int | None = None) -> np.ndarray:
    """Decode PNG/JPEG to float32 RGB in [0, 1], optionally resized square."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / np.float32(255.0)
    if render_size is not None:
        arr = resize_bilinear(arr, render_size, render_size)
    return arr


def list_dataset(dataset_dir) -> list[str]:
    root = Path(dataset_dir)
    if not root.is_dir():
        raise ConfigurationError(f"dataset_dir {root} is not a directory")
    return sorted(
        p.name for p in root.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    )


def load_pool(dataset_dir, p: int, render_size: int = DEFAULT_RENDER_SIZE,
              pool_seed: int = 0) -> ImagePool:
    """Deterministic pool of p distinct images from a directory.

    The sorted listing is shuffled by pool_seed and the first p decodable files
    are taken; undecodable files are skipped (recorded) and replaced from the
    remainder of the shuffled order.
    """
    if p < 1:
        raise ConfigurationError(f"pool size must be >= 1, got {p}")
    names = list_dataset(dataset_dir)
    if len(names) < p:
        raise ConfigurationError(
            f"{dataset_dir} holds {len(names)} images, pool needs {p}"
        )
    order = RandomSource(pool_seed).permutation(len(names))
    root = Path(dataset_dir)
    images, chosen, skipped = [], [], []
    for i in order:
        name = names[int(i)]
        try:
            images.append(decode_image(root / name, render_size))
        except (UnidentifiedImageError, OSError):
            skipped.append(name)
            continue
        chosen.append(name)
        if len(chosen) == p:
            break
    if len(chosen) < p:
        raise ConfigurationError(
            f"only {len(chosen)} of {p} requested images were decodable"
        )
    return ImagePool(
        images=np.stack(images),
        source_ids=tuple(chosen),
        pool_seed=int(pool_seed),
        render_size=render_size,
        skipped=tuple(skipped),
    )


def select_episode_image(pool: ImagePool, rng: RandomSource) -> int:
    if pool.size < 1:
        raise DomainError("empty image pool")
    return rng.integers(pool.size)


def _bounds(side: int, parts: int) -> list[int]:
    return [(k * side) // parts for k in range(parts + 1)]


def partition_patches(image: np.ndarray, dims: GridDims) -> list[np.ndarray]:
    """Row-major H*W patches with floor-rule boundaries; they tile the image exactly."""
    if image.ndim != 3 or image.shape[0] != image.shape[1]:
        raise DomainError(f"expected a square HxWx3 image, got shape {image.shape}")
    side = image.shape[0]
    if side < max(dims.height, dims.width):
        raise DomainError(f"{side}px image is smaller than the {dims} grid")
    rb = _bounds(side, dims.height)
    cb = _bounds(side, dims.width)
    return [
        image[rb[r]:rb[r + 1], cb[c]:cb[c + 1]].copy()
        for r in range(dims.height)
        for c in range(dims.width)
    ]


def render_image_obs(state: PuzzleState, image: np.ndarray, blank_fill: str = "black",
                     rng: RandomSource | None = None) -> np.ndarray:
    """Compose the board: cell (r, c) shows the patch from tiles[r*W+c]'s goal cell.

    With grids that don't divide the image side, patches can be a pixel larger
    or smaller than their destination block and are bilinearly fitted; divisible
    grids (and any solved state) compose bit-exactly.
    """
    dims = state.dims
    if image.ndim != 3 or image.shape[0] != image.shape[1]:
        raise DomainError(f"expected a square HxWx3 image, got shape {image.shape}")
    side = image.shape[0]
    if side < max(dims.height, dims.width):
        raise DomainError(f"{side}px image is smaller than the {dims} grid")
    rb = _bounds(side, dims.height)
    cb = _bounds(side, dims.width)
    out = np.empty_like(image)
    for idx, t in enumerate(state.tiles):
        r, c = dims.cell(idx)
        dst = out[rb[r]:rb[r + 1], cb[c]:cb[c + 1]]
        if t == 0 and blank_fill == "black":
            dst[...] = 0.0
            continue
        if t == 0 and blank_fill == "noise":
            if rng is None:
                raise DomainError("blank_fill='noise' needs a RandomSource")
            dst[...] = rng.random(dst.shape, dtype=np.float32)
            continue
        # blank_fill == "source" shows the blank's own goal patch
        gr, gc = goal_position(t, dims)
        src = image[rb[gr]:rb[gr + 1], cb[gc]:cb[gc + 1]]
        if src.shape != dst.shape:
            src = resize_bilinear(src, dst.shape[0], dst.shape[1])
        dst[...] = src
    return out


def render_onehot_obs(state: PuzzleState) -> np.ndarray:
    """Permutation matrix: row = cell, column = goal slot of the occupying tile.

    The solved state maps to the identity matrix.
    """
    n = state.dims.n
    m = np.zeros((n, n), dtype=np.float32)
    for cell, t in enumerate(state.tiles):
        m[cell, (t - 1) % n] = 1.0
    return m


def decode_onehot(matrix: np.ndarray, dims: GridDims) -> PuzzleState:
    n = dims.n
    if matrix.shape != (n, n):
        raise DomainError(f"one-hot matrix must be {n}x{n}, got {matrix.shape}")
    cols = matrix.argmax(axis=1)
    tiles = tuple((int(col) + 1) % n for col in cols)
    return PuzzleState(dims, tiles)


def render_state_obs(state: PuzzleState) -> np.ndarray:
    """Tile ids scaled to [0, 1] by the largest id."""
    return np.asarray(state.tiles, dtype=np.float32) / np.float32(state.dims.n - 1)


def make_observation(state: PuzzleState, spec: ObsSpec, image: np.ndarray | None = None,
                     blank_fill: str = "black") -> np.ndarray:
    if spec.modality == Modality.IMAGE:
        if image is None:
            raise DomainError("image modality needs an episode image")
        return render_image_obs(state, image, blank_fill)
    if spec.modality == Modality.ONEHOT:
        return render_onehot_obs(state)
    return render_state_obs(state)


def save_png(img: np.ndarray, path) -> None:
    arr = np.clip(np.round(img.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(Path(path), format="PNG")


def write_tensor(fh, array: np.ndarray) -> None:
    """Append one raw tensor record (16-byte header + float32 LE payload)."""
    arr = np.asarray(array)
    if arr.ndim == 1:
        shape = (arr.shape[0], 1, 1)
    elif arr.ndim == 2:
        shape = (arr.shape[0], arr.shape[1], 1)
    elif arr.ndim == 3:
        shape = arr.shape
    else:
        raise DomainError(f"tensor rank {arr.ndim} unsupported")
    fh.write(TENSOR_MAGIC + struct.pack("<III", *shape))
    fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_tensor(fh) -> np.ndarray | None:
    """Read the next record, or None at end of file."""
    header = fh.read(16)
    if not header:
        return None
    if len(header) != 16 or header[:4] != TENSOR_MAGIC:
        raise DomainError("bad tensor header")
    h, w, c = struct.unpack("<III", header[4:])
    payload = fh.read(4 * h * w * c)
    if len(payload) != 4 * h * w * c:
        raise DomainError("truncated tensor payload")
    return np.frombuffer(payload, dtype="<f4").reshape(h, w, c)


def read_tensor_file(path) -> list[np.ndarray]:
    records = []
    with open(path, "rb") as fh:
        while (arr := read_tensor(fh)) is not None:
            records.append(arr)
    return records
