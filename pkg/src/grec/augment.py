"""Background-compositing augmentation for neutral-background product shots.

Shop photos sit on a flat, one-color backdrop, so the garment can be
isolated with a border-color threshold plus light morphology, then pasted
onto arbitrarily complex scenes. The regular flip/rotate/shift/shear set
and a per-(item, epoch) deterministic background scheduler round out the
pipeline, so parallel augmentation jobs cannot change any output.

Images are (H, W, 3) uint8 arrays, masks (H, W) bool arrays.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DataError

DEFAULT_TOLERANCE = 30

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)  # 4-connectivity
_SQUARE = np.ones((3, 3), dtype=bool)

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class Placement:
    """Relative paste position (0 = top/left edge, 1 = bottom/right) and scale."""

    x_frac: float
    y_frac: float
    scale: float


@dataclass(frozen=True)
class AugmentPlan:
    """Seed, geometric ranges, paste-scale range, and the background pool."""

    seed: int = 0
    flip: bool = True
    rotation_range: float = 0.0  # degrees, symmetric around 0
    shift_range: float = 0.0  # pixels, symmetric around 0
    shear_range: float = 0.0  # degrees, symmetric around 0
    scale_range: tuple[float, float] = (1.0, 1.0)
    backgrounds: tuple[str, ...] = ()
    tolerance: int = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        if min(self.rotation_range, self.shift_range, self.shear_range) < 0:
            raise ValueError("augmentation ranges must be nonnegative")
        lo, hi = self.scale_range
        if not (0.0 < lo <= hi):
            raise ValueError("scale_range must satisfy 0 < lo <= hi")
        if not (0 <= self.tolerance <= 255):
            raise ValueError("tolerance must be in [0, 255]")


def _check_image(image) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError("image must be an (H, W, 3) uint8 array")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image dimensions must be at least 1x1")
    return arr


def load_image(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc


def save_image(image: np.ndarray, path: str | Path) -> None:
    arr = _check_image(image)
    Image.fromarray(arr, mode="RGB").save(path)


def list_backgrounds(directory: str | Path) -> tuple[str, ...]:
    """Image paths in a directory, lexicographic by filename.

    The order is part of the scheduler's determinism contract.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"background directory {directory} does not exist")
    names = sorted(
        p.name for p in directory.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    if not names:
        raise DataError(f"no background images in {directory}")
    return tuple(str(directory / name) for name in names)


def extract_foreground(image, tolerance: int = DEFAULT_TOLERANCE) -> np.ndarray:
    """Isolate the garment/model from a neutral one-color background.

    Estimates the background color as the per-channel median of the
    one-pixel border, thresholds on max-channel distance, removes speckle
    with one 3x3 erosion + dilation, and keeps the largest 4-connected
    component.
    """
    arr = _check_image(image)
    if not (0 <= tolerance <= 255):
        raise ValueError("tolerance must be in [0, 255]")
    border = np.concatenate(
        [arr[0, :], arr[-1, :], arr[:, 0], arr[:, -1]], axis=0
    ).astype(np.float64)
    background_color = np.median(border, axis=0)
    distance = np.abs(arr.astype(np.float64) - background_color).max(axis=2)
    raw = distance > tolerance
    if not raw.any():
        raise DataError("empty foreground: image is uniform within tolerance")
    opened = ndimage.binary_dilation(
        ndimage.binary_erosion(raw, structure=_SQUARE), structure=_SQUARE
    )
    if not opened.any():
        raise DataError("empty foreground: nothing left after speckle removal")
    labels, count = ndimage.label(opened, structure=_CROSS)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0  # background label
    return labels == int(np.argmax(sizes))


def _resize_nearest_mask(mask: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = mask.shape
    rows = np.minimum(((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.int64), h - 1)
    cols = np.minimum(((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.int64), w - 1)
    return mask[rows[:, None], cols[None, :]]


def _resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = image.shape[:2]
    r = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    c = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    r0 = np.floor(r).astype(np.int64)
    c0 = np.floor(c).astype(np.int64)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (r - r0)[:, None, None]
    fc = (c - c0)[None, :, None]
    img = image.astype(np.float64)
    top = img[r0[:, None], c0[None, :]] * (1 - fc) + img[r0[:, None], c1[None, :]] * fc
    bot = img[r1[:, None], c0[None, :]] * (1 - fc) + img[r1[:, None], c1[None, :]] * fc
    out = top * (1 - fr) + bot * fr
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def composite(
    foreground,
    mask,
    background,
    offset: tuple[int, int],
    scale: float = 1.0,
) -> np.ndarray:
    """Paste masked foreground pixels onto a background.

    ``offset`` is the (x, y) of the scaled foreground's top-left corner in
    background coordinates; parts falling outside are clipped. Color is
    scaled bilinearly, the mask nearest-neighbor so it stays binary. The
    output canvas is the background.
    """
    fg = _check_image(foreground)
    bg = _check_image(background)
    m = np.asarray(mask)
    if m.dtype != bool or m.shape != fg.shape[:2]:
        raise ValueError("mask must be a bool array matching the foreground shape")
    if scale <= 0.0:
        raise ValueError("scale must be positive")

    out_h = max(1, int(round(fg.shape[0] * scale)))
    out_w = max(1, int(round(fg.shape[1] * scale)))
    if (out_h, out_w) == fg.shape[:2]:
        scaled_fg, scaled_mask = fg, m
    else:
        scaled_fg = _resize_bilinear(fg, out_h, out_w)
        scaled_mask = _resize_nearest_mask(m, out_h, out_w)

    x, y = int(offset[0]), int(offset[1])
    bh, bw = bg.shape[:2]
    src_y0, src_x0 = max(0, -y), max(0, -x)
    dst_y0, dst_x0 = max(0, y), max(0, x)
    copy_h = min(out_h - src_y0, bh - dst_y0)
    copy_w = min(out_w - src_x0, bw - dst_x0)
    out = bg.copy()
    if copy_h > 0 and copy_w > 0:
        sub_mask = scaled_mask[src_y0 : src_y0 + copy_h, src_x0 : src_x0 + copy_w]
        sub_fg = scaled_fg[src_y0 : src_y0 + copy_h, src_x0 : src_x0 + copy_w]
        region = out[dst_y0 : dst_y0 + copy_h, dst_x0 : dst_x0 + copy_w]
        region[sub_mask] = sub_fg[sub_mask]
    return out


def _sample_bilinear_replicate(image: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Bilinear sample at float coordinates, replicating edge pixels outside."""
    h, w = image.shape[:2]
    r = np.clip(rows, 0.0, h - 1.0)
    c = np.clip(cols, 0.0, w - 1.0)
    r0 = np.floor(r).astype(np.int64)
    c0 = np.floor(c).astype(np.int64)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (r - r0)[..., None]
    fc = (c - c0)[..., None]
    img = image.astype(np.float64)
    top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
    bot = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
    out = top * (1 - fr) + bot * fr
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _warp_inverse_affine(image: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Apply an output->source affine map with bilinear, edge-replicate sampling."""
    h, w = image.shape[:2]
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    src_x = matrix[0, 0] * xs + matrix[0, 1] * ys + matrix[0, 2]
    src_y = matrix[1, 0] * xs + matrix[1, 1] * ys + matrix[1, 2]
    return _sample_bilinear_replicate(image, src_y, src_x)


def _rotate(image: np.ndarray, degrees: float) -> np.ndarray:
    if degrees == 0.0:
        return image
    theta = np.deg2rad(degrees)
    cy = (image.shape[0] - 1) / 2.0
    cx = (image.shape[1] - 1) / 2.0
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    # Inverse map: rotate output coordinates by -theta around the center.
    matrix = np.array(
        [
            [cos_t, sin_t, cx - cos_t * cx - sin_t * cy],
            [-sin_t, cos_t, cy + sin_t * cx - cos_t * cy],
        ]
    )
    return _warp_inverse_affine(image, matrix)


def _shift(image: np.ndarray, dx: float, dy: float) -> np.ndarray:
    if dx == 0.0 and dy == 0.0:
        return image
    matrix = np.array([[1.0, 0.0, -dx], [0.0, 1.0, -dy]])
    return _warp_inverse_affine(image, matrix)


def _shear(image: np.ndarray, degrees: float) -> np.ndarray:
    if degrees == 0.0:
        return image
    t = np.tan(np.deg2rad(degrees))
    cy = (image.shape[0] - 1) / 2.0
    matrix = np.array([[1.0, -t, t * cy], [0.0, 1.0, 0.0]])
    return _warp_inverse_affine(image, matrix)


def standard_augment(image, plan: AugmentPlan, rng: np.random.Generator) -> np.ndarray:
    """Horizontal flip, rotation, shift, shear, in that fixed order.

    All four parameters are always drawn from ``rng`` (in that order), so
    toggling one transform never changes the draws of the others.
    """
    arr = _check_image(image)
    flip_draw = rng.random()
    angle = rng.uniform(-plan.rotation_range, plan.rotation_range)
    dx = rng.uniform(-plan.shift_range, plan.shift_range)
    dy = rng.uniform(-plan.shift_range, plan.shift_range)
    shear = rng.uniform(-plan.shear_range, plan.shear_range)

    out = arr
    if plan.flip and flip_draw < 0.5:
        out = out[:, ::-1, :]
    out = _rotate(out, angle)
    out = _shift(out, dx, dy)
    out = _shear(out, shear)
    return np.ascontiguousarray(out)


def _item_epoch_rng(seed: int, item_id: str, epoch: int, salt: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}|{item_id}|{epoch}|{salt}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def epoch_background(item_id: str, epoch: int, plan: AugmentPlan) -> tuple[str, Placement]:
    """Deterministic background choice and placement for (seed, item, epoch).

    Different epochs generally land on different backgrounds for the same
    item; the same triple always returns the same choice.
    """
    if not plan.backgrounds:
        raise DataError("background pool is empty")
    rng = _item_epoch_rng(plan.seed, item_id, epoch, "placement")
    idx = int(rng.integers(len(plan.backgrounds)))
    placement = Placement(
        x_frac=float(rng.random()),
        y_frac=float(rng.random()),
        scale=float(rng.uniform(plan.scale_range[0], plan.scale_range[1])),
    )
    return plan.backgrounds[idx], placement


def resolve_offset(
    placement: Placement, fg_shape: tuple[int, int], bg_shape: tuple[int, int]
) -> tuple[int, int]:
    """Pixel offset of the scaled foreground inside the background."""
    scaled_h = max(1, int(round(fg_shape[0] * placement.scale)))
    scaled_w = max(1, int(round(fg_shape[1] * placement.scale)))
    x = int(round(placement.x_frac * (bg_shape[1] - scaled_w)))
    y = int(round(placement.y_frac * (bg_shape[0] - scaled_h)))
    return x, y


def augment_item(image, item_id: str, epoch: int, plan: AugmentPlan) -> np.ndarray:
    """Full per-item pipeline: extract, paste on the epoch background, augment.

    A pure function of (plan, item_id, epoch, source bytes).
    """
    arr = _check_image(image)
    mask = extract_foreground(arr, plan.tolerance)
    bg_path, placement = epoch_background(item_id, epoch, plan)
    background = load_image(bg_path)
    offset = resolve_offset(placement, arr.shape[:2], background.shape[:2])
    composed = composite(arr, mask, background, offset, placement.scale)
    rng = _item_epoch_rng(plan.seed, item_id, epoch, "standard")
    return standard_augment(composed, plan, rng)
