"""cmclab.utils: threaded sweeps and deterministic CSV output."""

import csv
import os
import sys
from concurrent import futures
from contextlib import ExitStack
from typing import Any, Callable, Dict, List, Sequence, TypeVar

import click

from cmclab.logger import logger
from cmclab.models import format_value

T = TypeVar("T")
R = TypeVar("R")


def _gather_futures(tasks: Sequence[futures.Future]) -> List:
    """Results in submission order; the first failure is re-raised."""
    return [future.result() for future in tasks]


def parallel_map(
    func: Callable[[T], R],
    items: Sequence[T],
    max_threads: int = 4,
    quiet: bool = True,
    label: str = "Sweep",
) -> List[R]:
    """Apply `func` to every item in a thread pool, keeping the item order."""
    with ExitStack() as ctx:
        fout = ctx.enter_context(open(os.devnull, "w")) if quiet else sys.stderr
        with futures.ThreadPoolExecutor(max_workers=max(int(max_threads), 1)) as executor:
            future_work = [executor.submit(func, item) for item in items]
            with click.progressbar(  # type: ignore
                futures.as_completed(future_work),
                file=fout,
                length=len(future_work),
                label=label,
                show_percent=True,
            ) as future:
                for _ in future:
                    pass

    logger.debug(f"{label}: {len(future_work)} point(s) done")
    return _gather_futures(future_work)


def write_csv(path: str, rows: Sequence[Dict[str, Any]], fieldnames: Sequence[str]) -> str:
    """RFC-4180 CSV with LF line endings and 12-significant-digit numbers."""
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: format_value(row.get(key)) for key in fieldnames})

    return path
