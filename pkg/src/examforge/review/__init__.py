"""Human review queue: journal-backed store plus HTTP service."""

from .store import (
    ConflictError,
    CriteriaError,
    FlagCriterion,
    ReviewItem,
    ReviewQueueStats,
    ReviewStore,
    ValidationFailed,
    export_reviewed,
    flag_samples,
)

__all__ = [
    "ConflictError",
    "CriteriaError",
    "FlagCriterion",
    "ReviewItem",
    "ReviewQueueStats",
    "ReviewStore",
    "ValidationFailed",
    "export_reviewed",
    "flag_samples",
]
