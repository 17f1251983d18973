"""Progress updates for long-running solvers and suites."""

from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional


@dataclass
class SolverProgress:
    """Progress update during a solve or a seed sweep."""

    status: str
    progress: float
    message: str
    payload: Optional[Dict[str, Any]] = None


ProgressCallback = Callable[[SolverProgress], None]


def notify(
    on_progress: Optional[ProgressCallback],
    status: str,
    progress: float,
    message: str,
    **payload: Any,
) -> None:
    """Send an update if a callback is registered."""
    if on_progress is not None:
        on_progress(SolverProgress(status, progress, message, payload or None))
