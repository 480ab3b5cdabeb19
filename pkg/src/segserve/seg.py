"""Sliding-window segmentation engine.

Large rasters are covered by fixed windows advanced by half the window size
per step; the final window per axis is clamped to end exactly at the image
boundary. Overlapping per-tile predictions are averaged per pixel in a fixed
row-major anchor order, so stitching is bit-reproducible. Volumes are sliced
into 2D planes, segmented slice by slice, and restacked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidInput,
    SegmenterContractViolation,
)
from .raster import ImageGrid, Mask, ProbabilityMap, Volume

Segmenter = Callable[[ImageGrid], ProbabilityMap]

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class TilePlan:
    """Window anchors (row-major) plus the per-pixel coverage counts."""

    window: tuple[int, int]
    stride: tuple[int, int]
    origins: tuple[tuple[int, int], ...]
    coverage: np.ndarray = field(repr=False)


def _axis_anchors(extent: int, window: int, stride: int) -> list[int]:
    anchors = list(range(0, extent - window + 1, stride))
    # Clamp a final window so coverage reaches the boundary exactly.
    if anchors[-1] + window < extent:
        anchors.append(extent - window)
    return anchors


def plan_tiles(
    image_w: int, image_h: int, window_w: int, window_h: int
) -> TilePlan:
    """Half-stride anchor grid covering the whole image."""
    if min(image_w, image_h, window_w, window_h) < 1:
        raise InvalidInput("image and window dimensions must be positive")
    if window_w > image_w or window_h > image_h:
        raise InvalidInput(
            f"window {window_w}x{window_h} exceeds image {image_w}x{image_h}"
        )
    # Half stride, rounded up so odd windows still overlap at most twice
    # per axis on the regular grid.
    stride_w = (window_w + 1) // 2
    stride_h = (window_h + 1) // 2
    xs = _axis_anchors(image_w, window_w, stride_w)
    ys = _axis_anchors(image_h, window_h, stride_h)

    coverage = np.zeros((image_h, image_w), dtype=np.int64)
    origins = []
    for y in ys:
        for x in xs:
            origins.append((x, y))
            coverage[y:y + window_h, x:x + window_w] += 1
    return TilePlan(
        window=(window_w, window_h),
        stride=(stride_w, stride_h),
        origins=tuple(origins),
        coverage=coverage,
    )


def segment_tiled(
    image: ImageGrid, segmenter: Segmenter, window: tuple[int, int]
) -> ProbabilityMap:
    """Run the segmenter per tile and average overlaps.

    Accumulation follows the plan's row-major anchor order, so the result is
    exactly the brute-force per-pixel accumulate-and-divide value.
    """
    plan = plan_tiles(image.width, image.height, window[0], window[1])
    ww, wh = plan.window
    acc = np.zeros((image.height, image.width), dtype=np.float64)
    for x, y in plan.origins:
        tile = ImageGrid(
            width=ww, height=wh, channels=image.channels,
            data=image.data[y:y + wh, x:x + ww, :],
        )
        pred = segmenter(tile)
        if not isinstance(pred, ProbabilityMap):
            raise SegmenterContractViolation(
                f"segmenter returned {type(pred).__name__}, not a ProbabilityMap"
            )
        if (pred.width, pred.height) != (ww, wh):
            raise SegmenterContractViolation(
                f"segmenter returned {pred.width}x{pred.height} for a "
                f"{ww}x{wh} tile"
            )
        acc[y:y + wh, x:x + ww] += pred.values
    return ProbabilityMap(
        width=image.width, height=image.height, values=acc / plan.coverage
    )


def threshold_mask(p: ProbabilityMap, theta: float = DEFAULT_THRESHOLD) -> Mask:
    """Label 1 where the probability reaches theta."""
    theta = float(theta)
    if not np.isfinite(theta) or theta < 0.0 or theta > 1.0:
        raise InvalidInput(f"threshold must lie in [0, 1], got {theta}")
    return Mask(
        width=p.width, height=p.height,
        labels=(p.values >= theta).astype(np.uint8),
    )


def slice_volume(v: Volume) -> list[ImageGrid]:
    """Depth-ordered single-channel planes of the volume."""
    return [
        ImageGrid(
            width=v.width, height=v.height, channels=1,
            data=v.data[z][:, :, np.newaxis],
        )
        for z in range(v.depth)
    ]


def restack(slices: Sequence[ImageGrid | Mask]) -> Volume | Mask:
    """Stack equally-sized 2D slices back into a volume (or a 3D mask)."""
    if not slices:
        raise InvalidInput("cannot restack an empty slice sequence")
    first = slices[0]
    if isinstance(first, Mask):
        if any(not isinstance(s, Mask) or s.depth is not None for s in slices):
            raise InvalidInput("expected a sequence of 2D masks")
        if any((s.width, s.height) != (first.width, first.height) for s in slices):
            raise DimensionMismatch("mask slices differ in size")
        labels = np.stack([s.labels for s in slices], axis=0)
        return Mask(width=first.width, height=first.height,
                    labels=labels, depth=len(slices))

    if any(not isinstance(s, ImageGrid) for s in slices):
        raise InvalidInput("expected a sequence of ImageGrid slices")
    if any(
        (s.width, s.height, s.channels) != (first.width, first.height, first.channels)
        for s in slices
    ):
        raise DimensionMismatch("image slices differ in size")
    if first.channels != 1:
        raise InvalidInput("only single-channel slices restack into a volume")
    data = np.stack([s.data[:, :, 0] for s in slices], axis=0)
    return Volume(width=first.width, height=first.height,
                  depth=len(slices), data=data)


def multilevel_aggregate(stage_maps: Sequence[ProbabilityMap]) -> ProbabilityMap:
    """Average a coarse-to-fine prediction pyramid at full resolution.

    Stage k+1 must have exactly floor-halved dimensions of stage k. Each
    stage is nearest-neighbor upsampled to stage 0's size, then the stages
    are averaged elementwise.
    """
    if not stage_maps:
        raise InvalidInput("need at least one stage map")
    full_w, full_h = stage_maps[0].width, stage_maps[0].height
    prev_w, prev_h = full_w, full_h
    for k, stage in enumerate(stage_maps[1:], start=1):
        want = (prev_w // 2, prev_h // 2)
        if (stage.width, stage.height) != want:
            raise InvalidInput(
                f"stage {k} is {stage.width}x{stage.height}, expected "
                f"{want[0]}x{want[1]}"
            )
        if stage.width < 1 or stage.height < 1:
            raise InvalidInput(f"stage {k} has collapsed to zero size")
        prev_w, prev_h = stage.width, stage.height

    acc = np.zeros((full_h, full_w), dtype=np.float64)
    ys = np.arange(full_h)
    xs = np.arange(full_w)
    for stage in stage_maps:
        src_y = (ys * stage.height) // full_h
        src_x = (xs * stage.width) // full_w
        acc += stage.values[np.ix_(src_y, src_x)]
    return ProbabilityMap(width=full_w, height=full_h,
                          values=acc / len(stage_maps))


def reference_segmenter(image: ImageGrid) -> ProbabilityMap:
    """Deterministic stand-in for a trained per-tile model.

    Channel-mean luminance, 3x3 box smoothing with clamped (replicated)
    edges, then division by the global maximum; an all-zero input maps to an
    all-zero output. Samples must be non-negative so the quotient stays in
    [0, 1].
    """
    lum = image.data.mean(axis=2)
    if lum.min() < 0:
        raise InvalidInput("reference segmenter expects non-negative samples")
    padded = np.pad(lum, 1, mode="edge")
    smooth = np.zeros_like(lum)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            smooth += padded[dy:dy + lum.shape[0], dx:dx + lum.shape[1]]
    smooth /= 9.0
    peak = smooth.max()
    values = smooth / peak if peak > 0 else np.zeros_like(smooth)
    return ProbabilityMap(width=image.width, height=image.height, values=values)
