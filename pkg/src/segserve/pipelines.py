"""Category handlers binding the segmentation and diagnosis kernels to the
task queue, plus the offline equivalents used by the CLI."""

from __future__ import annotations

import json
from pathlib import Path

from .config import ServiceConfig
from .errors import InvalidInput, UnsupportedFormat
from .fusion import (
    DEFAULT_CLASS_NAMES,
    FusionStrategy,
    FusionWeights,
    ModalPair,
    default_weights,
    diagnose,
    validate_lambda,
)
from .orchestrator import Artifact, PipelineFn
from .raster import (
    decode_image,
    decode_volume,
    encode_mask_miv1,
    encode_mask_pgm,
    sniff_format,
)
from .records import DIAGNOSIS_CATEGORY, SEGMENTATION_CATEGORIES, TaskRecord
from .seg import reference_segmenter, restack, segment_tiled, slice_volume, threshold_mask
from .weights_io import load_weights

PAIR_IMAGE_F = "image_f"
PAIR_IMAGE_O = "image_o"
PAIR_PARAMS = "params.json"


def clamp_window(window: tuple[int, int], width: int, height: int) -> tuple[int, int]:
    """Shrink the configured window to fit small inputs."""
    return (min(window[0], width), min(window[1], height))


def segment_payload(
    payload: bytes, window: tuple[int, int], theta: float
) -> Artifact:
    """Segment a 2D image payload or an MIV1 volume into a mask artifact."""
    kind = sniff_format(payload)
    if kind == "miv1":
        volume = decode_volume(payload)
        masks = []
        for plane in slice_volume(volume):
            w = clamp_window(window, plane.width, plane.height)
            prob = segment_tiled(plane, reference_segmenter, w)
            masks.append(threshold_mask(prob, theta))
        stacked = restack(masks)
        return Artifact(filename="mask.miv1", payload=encode_mask_miv1(stacked))
    image = decode_image(payload)
    w = clamp_window(window, image.width, image.height)
    prob = segment_tiled(image, reference_segmenter, w)
    mask = threshold_mask(prob, theta)
    return Artifact(filename="mask.pgm", payload=encode_mask_pgm(mask))


class WeightProvider:
    """Serves fusion weights per strategy.

    Without a weights file every strategy is generated from the seeded
    stream; a configured file pins its own strategy and rejects others.
    """

    def __init__(self, config: ServiceConfig) -> None:
        self._config = config
        self._pinned: tuple[FusionWeights, float] | None = None
        if config.weights_path is not None:
            self._pinned = load_weights(config.weights_path)

    def get(self, strategy: FusionStrategy, lam: float | None) -> tuple[FusionWeights, float]:
        if self._pinned is not None:
            weights, file_lam = self._pinned
            if weights.strategy is not strategy:
                raise InvalidInput(
                    f"configured weights are for {weights.strategy.value}, "
                    f"not {strategy.value}"
                )
            return weights, validate_lambda(lam if lam is not None else file_lam)
        weights = default_weights(
            strategy,
            class_count=len(self._config.class_names),
            feature_dim=self._config.feature_dim,
        )
        chosen = lam if lam is not None else self._config.default_lambda
        return weights, validate_lambda(chosen)


def run_diagnosis(
    image_f_payload: bytes,
    image_o_payload: bytes,
    strategy: FusionStrategy,
    lam: float | None,
    provider: WeightProvider,
    class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES,
) -> dict:
    pair = ModalPair(
        image_f=decode_image(image_f_payload),
        image_o=decode_image(image_o_payload),
    )
    weights, lam = provider.get(strategy, lam)
    label, scores = diagnose(pair, weights, lam, class_names)
    return {
        "label": {"index": label.index, "name": label.name},
        "scores": [float(s) for s in scores.scores],
    }


def build_pipeline(config: ServiceConfig, provider: WeightProvider) -> PipelineFn:
    """The worker-side executor mapping a task's category to its kernel."""

    def execute(record: TaskRecord, input_path: Path) -> list[Artifact]:
        if record.category in SEGMENTATION_CATEGORIES:
            payload = input_path.read_bytes()
            return [segment_payload(payload, config.window, config.theta)]
        if record.category == DIAGNOSIS_CATEGORY:
            params = json.loads((input_path / PAIR_PARAMS).read_text())
            result = run_diagnosis(
                (input_path / PAIR_IMAGE_F).read_bytes(),
                (input_path / PAIR_IMAGE_O).read_bytes(),
                FusionStrategy.parse(params["strategy"]),
                params.get("lambda"),
                provider,
                config.class_names,
            )
            return [Artifact(
                filename="diagnosis.json",
                payload=json.dumps(result).encode("utf-8"),
            )]
        raise UnsupportedFormat(f"no pipeline for category {record.category!r}")

    return execute
