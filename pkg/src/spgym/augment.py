"""Observation augmentations: crop, grayscale, channel_shuffle, shift, inversion,
color_jitter, and the standard grayscale(20%) -> channel_shuffle pipeline.

Every augmentation maps an SxSx3 float tensor in [0, 1] to the same shape and
range and is deterministic under a fixed RandomSource.  Grayscale averages in
float64 before casting back so repeated application is exactly idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .observation import resize_bilinear
from .rng import RandomSource

AUGMENT_NAMES = ("crop", "grayscale", "channel_shuffle", "shift", "inversion", "color_jitter")

STANDARD_GRAYSCALE_PROB = 0.2


def grayscale(img: np.ndarray, probability: float = 1.0,
              rng: RandomSource | None = None) -> np.ndarray:
    """With the given probability, replace all channels by their per-pixel mean."""
    if not 0.0 <= probability <= 1.0:
        raise DomainError("grayscale probability must be in [0, 1]")
    if probability < 1.0:
        if rng is None:
            raise DomainError("probabilistic grayscale needs a RandomSource")
        if rng.random() >= probability:
            return img.copy()
    mean = img.mean(axis=2, dtype=np.float64).astype(img.dtype)
    return np.repeat(mean[:, :, None], 3, axis=2)


def channel_shuffle(img: np.ndarray, rng: RandomSource) -> np.ndarray:
    perm = rng.permutation(3)
    return np.ascontiguousarray(img[:, :, perm])


def crop(img: np.ndarray, out_side: int, rng: RandomSource) -> np.ndarray:
    """Random out_side^2 window, resized back to the input side."""
    side = img.shape[0]
    if not 1 <= out_side <= side:
        raise DomainError(f"crop side {out_side} outside [1, {side}]")
    dy = rng.integers(side - out_side + 1)
    dx = rng.integers(side - out_side + 1)
    window = img[dy:dy + out_side, dx:dx + out_side]
    return resize_bilinear(window, side, side)


def shift(img: np.ndarray, max_offset: int, rng: RandomSource) -> np.ndarray:
    """Translate by uniform (dy, dx) in [-max_offset, max_offset], edge-replicated."""
    side = img.shape[0]
    if not 0 <= max_offset < side:
        raise DomainError(f"shift offset {max_offset} outside [0, {side})")
    if max_offset == 0:
        return img.copy()
    dy = rng.integer_range(-max_offset, max_offset)
    dx = rng.integer_range(-max_offset, max_offset)
    m = max_offset
    padded = np.pad(img, ((m, m), (m, m), (0, 0)), mode="edge")
    return padded[m - dy:m - dy + side, m - dx:m - dx + side].copy()


def invert(img: np.ndarray) -> np.ndarray:
    """Per-channel 1 - x (computed in float64, cast back)."""
    return (1.0 - img.astype(np.float64)).astype(img.dtype)


def _rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    v = maxc
    delta = maxc - minc
    safe = np.where(delta == 0, 1.0, delta)
    s = np.where(maxc == 0, 0.0, delta / np.where(maxc == 0, 1.0, maxc))
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.select([maxc == r, maxc == g], [bc - gc, 2.0 + rc - bc], default=4.0 + gc - rc)
    h = np.where(delta == 0, 0.0, (h / 6.0) % 1.0)
    return np.stack([h, s, v], axis=-1)


def _hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(np.int64) % 6
    choices = [
        np.stack([v, t, p], axis=-1),
        np.stack([q, v, p], axis=-1),
        np.stack([p, v, t], axis=-1),
        np.stack([p, q, v], axis=-1),
        np.stack([t, p, v], axis=-1),
        np.stack([v, p, q], axis=-1),
    ]
    out = np.empty_like(hsv)
    for k, ch in enumerate(choices):
        out[i == k] = ch[i == k]
    return out


def adjust_brightness(img: np.ndarray, factor: float) -> np.ndarray:
    """Multiplicative brightness; factor 0 blacks the image out."""
    return np.clip(img.astype(np.float64) * factor, 0.0, 1.0).astype(img.dtype)


def adjust_contrast(img: np.ndarray, factor: float) -> np.ndarray:
    """Blend toward the per-image mean intensity (factor 1 is identity)."""
    out = img.astype(np.float64)
    anchor = out.mean(dtype=np.float64)
    return np.clip(anchor + (out - anchor) * factor, 0.0, 1.0).astype(img.dtype)


def adjust_saturation(img: np.ndarray, factor: float) -> np.ndarray:
    """Blend toward per-pixel gray (factor 0 desaturates fully)."""
    out = img.astype(np.float64)
    gray = out.mean(axis=2)[:, :, None]
    return np.clip(gray + (out - gray) * factor, 0.0, 1.0).astype(img.dtype)


def adjust_hue(img: np.ndarray, delta: float) -> np.ndarray:
    """Rotate hue by delta (fraction of a full turn) in HSV space."""
    hsv = _rgb_to_hsv(img.astype(np.float64))
    hsv[..., 0] = (hsv[..., 0] + delta) % 1.0
    return np.clip(_hsv_to_rgb(hsv), 0.0, 1.0).astype(img.dtype)


def color_jitter(img: np.ndarray, rng: RandomSource, brightness: float = 0.2,
                 contrast: float = 0.2, saturation: float = 0.2,
                 hue: float = 0.05) -> np.ndarray:
    """Random brightness/contrast/saturation/hue, factors drawn independently.

    Ranges are half-widths around the identity setting (factor 1, hue shift 0);
    all-zero ranges return the input unchanged.  Output is clamped to [0, 1].
    """
    for name, r in (("brightness", brightness), ("contrast", contrast),
                    ("saturation", saturation)):
        if not 0.0 <= r <= 1.0:
            raise DomainError(f"{name} range must be in [0, 1]")
    if not 0 <= hue <= 0.5:
        raise DomainError("hue range must be in [0, 0.5]")
    bf = rng.uniform(1.0 - brightness, 1.0 + brightness)
    cf = rng.uniform(1.0 - contrast, 1.0 + contrast)
    sf = rng.uniform(1.0 - saturation, 1.0 + saturation)
    hd = rng.uniform(-hue, hue)
    out = img
    if bf != 1.0:
        out = adjust_brightness(out, bf)
    if cf != 1.0:
        out = adjust_contrast(out, cf)
    if sf != 1.0:
        out = adjust_saturation(out, sf)
    if hd != 0.0:
        out = adjust_hue(out, hd)
    return out.copy() if out is img else out


def standard_pipeline(img: np.ndarray, rng: RandomSource) -> np.ndarray:
    """Grayscale with 20% probability, then a random channel shuffle."""
    return channel_shuffle(grayscale(img, STANDARD_GRAYSCALE_PROB, rng), rng)


def _default_crop_side(side: int) -> int:
    # Mirrors the 84-in-100 crop ratio at any render size.
    return max(1, round(side * 0.84))


@dataclass(frozen=True)
class AugmentSpec:
    """Named augmentation with parameters, serializable in run configs."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in AUGMENT_NAMES + ("pipeline", "none"):
            raise DomainError(f"unknown augmentation {self.kind!r}")

    def apply(self, img: np.ndarray, rng: RandomSource) -> np.ndarray:
        side = img.shape[0]
        p = self.params
        if self.kind == "none":
            return img
        if self.kind == "crop":
            return crop(img, p.get("out_side") or _default_crop_side(side), rng)
        if self.kind == "grayscale":
            return grayscale(img, p.get("probability", 1.0), rng)
        if self.kind == "channel_shuffle":
            return channel_shuffle(img, rng)
        if self.kind == "shift":
            max_offset = p.get("max_offset")
            if max_offset is None:
                max_offset = max(1, side // 10)
            return shift(img, max_offset, rng)
        if self.kind == "inversion":
            return invert(img)
        if self.kind == "color_jitter":
            return color_jitter(
                img, rng,
                brightness=p.get("brightness", 0.2),
                contrast=p.get("contrast", 0.2),
                saturation=p.get("saturation", 0.2),
                hue=p.get("hue", 0.05),
            )
        return standard_pipeline(img, rng)

    def label(self) -> str:
        return self.kind


def parse_augments(text: str) -> tuple[AugmentSpec, ...]:
    """Parse a comma-separated augmentation list, e.g. ``grayscale,channel_shuffle``."""
    names = [t.strip() for t in text.split(",") if t.strip()]
    return tuple(AugmentSpec(name) for name in names)


def apply_augments(img: np.ndarray, specs, rng: RandomSource) -> np.ndarray:
    for spec in specs:
        img = spec.apply(img, rng)
    return img
