"""Service configuration shared by the HTTP server and the offline CLI.

The segmentation defaults (window, threshold) are module constants so an
offline ``segserve segment`` run and a server-side task produce identical
bytes for the same input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .fusion import DEFAULT_CLASS_NAMES, DEFAULT_FEATURE_DIM

DEFAULT_WINDOW = (64, 64)
DEFAULT_THETA = 0.5
DEFAULT_QUEUE_CAPACITY = 4
DEFAULT_WORKERS = 1
DEFAULT_UPLOAD_LIMIT = 64 * 1024 * 1024
DEFAULT_LAMBDA = 0.5
DB_FILENAME = "segserve.db"


@dataclass
class ServiceConfig:
    data_root: Path
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    workers: int = DEFAULT_WORKERS
    window: tuple[int, int] = DEFAULT_WINDOW
    theta: float = DEFAULT_THETA
    feature_dim: int = DEFAULT_FEATURE_DIM
    class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES
    upload_limit: int = DEFAULT_UPLOAD_LIMIT
    default_lambda: float = DEFAULT_LAMBDA
    weights_path: Path | None = None

    def __post_init__(self) -> None:
        self.data_root = Path(self.data_root)
        if self.weights_path is not None:
            self.weights_path = Path(self.weights_path)

    @property
    def db_path(self) -> Path:
        return self.data_root / DB_FILENAME
