"""
Execution utilities for parameter scans.

Runs one callable over an ordered list of payloads, optionally on a process
pool, and never lets a single failing point abort the rest of the grid.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

logger = logging.getLogger(__name__)


@dataclass
class PointResult:
    """Outcome of one grid point: either a result or the error that stopped it."""

    index: int
    payload: Any
    result: Any = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ExecutionTracker:
    """
    Keeps success and failure counts for one grid execution.
    """

    succeeded: List[int] = field(default_factory=list)
    failed: Dict[int, str] = field(default_factory=dict)

    def record_success(self, index: int):
        self.succeeded.append(index)

    def record_failure(self, index: int, message: str):
        self.failed[index] = message
        logger.error(f"Grid point {index} failed: {message}")

    def summary(self) -> Dict[str, Any]:
        total = len(self.succeeded) + len(self.failed)
        return {
            "total": total,
            "succeeded": len(self.succeeded),
            "failed": len(self.failed),
            "success_rate": (len(self.succeeded) / total) if total else 0.0,
        }


def _guarded_call(execution_func: Callable, index: int, payload: Any) -> PointResult:
    try:
        return PointResult(index=index, payload=payload, result=execution_func(payload))
    except Exception as e:
        # Reported in the point's error column, the grid keeps going
        return PointResult(
            index=index, payload=payload, error=f"{type(e).__name__}: {e}"
        )


def execute_grid(
    execution_func: Callable,
    payloads: Sequence[Any],
    jobs: int = 1,
    tracker: ExecutionTracker = None,
) -> List[PointResult]:
    """
    Execute a function for every payload and return results in payload order.

    Args:
        execution_func: Picklable top-level callable taking one payload
        payloads: Grid points, in the order results must be written
        jobs: Upper bound on worker processes; 1 runs in-process
        tracker: Optional ExecutionTracker collecting success/failure counts

    Returns:
        One PointResult per payload, ordered by index
    """
    if tracker is None:
        tracker = ExecutionTracker()

    results: List[Optional[PointResult]] = [None] * len(payloads)

    if jobs <= 1 or len(payloads) <= 1:
        for index, payload in enumerate(payloads):
            logger.info(f"Running grid point {index + 1}/{len(payloads)}")
            results[index] = _guarded_call(execution_func, index, payload)
    else:
        workers = min(jobs, len(payloads))
        logger.info(f"Running {len(payloads)} grid points on {workers} workers")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_guarded_call, execution_func, index, payload)
                for index, payload in enumerate(payloads)
            ]
            for index, future in enumerate(futures):
                try:
                    results[index] = future.result()
                except Exception as e:
                    # Worker died before it could report
                    results[index] = PointResult(
                        index=index, payload=payloads[index], error=f"{e}"
                    )

    ordered: List[PointResult] = []
    for point in results:
        assert point is not None
        if point.ok:
            tracker.record_success(point.index)
        else:
            tracker.record_failure(point.index, point.error or "")
        ordered.append(point)

    summary = tracker.summary()
    logger.info(
        f"Grid finished: {summary['succeeded']}/{summary['total']} points succeeded"
    )
    return ordered
