"""segserve: medical image segmentation and dual-modal diagnosis service.

Core kernels (fusion, metrics, tiling) are pure functions; the orchestrator
and storage layers add the task-queue protocol with safety-tag gating, and
``segserve.api`` exposes everything over HTTP.
"""

__version__ = "0.1.0"
