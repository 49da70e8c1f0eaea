from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

from app.shared.config import get_settings

T = TypeVar("T")


def split_chunks(items: np.ndarray, chunk_size: int) -> list[np.ndarray]:
    """Consecutive slices of at most chunk_size elements, in input order."""
    if len(items) == 0:
        return []
    return [items[start : start + chunk_size] for start in range(0, len(items), chunk_size)]


def map_chunks(
    func: Callable[[np.ndarray], T],
    items: np.ndarray,
    *,
    threads: int | None = None,
    chunk_size: int | None = None,
) -> list[T]:
    """
    Apply `func` to each chunk of `items` and return the results in chunk order.

    With one thread the chunks run inline. Otherwise they run on a ThreadPoolExecutor; numpy
    releases the GIL inside its kernels, so chunked Newton sweeps overlap. The result order never
    depends on the thread count.
    """
    settings = get_settings()
    threads = threads or settings.threads
    chunk_size = chunk_size or settings.newton_chunk_size
    chunks = split_chunks(items, chunk_size)
    if threads <= 1 or len(chunks) <= 1:
        return [func(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="newton") as executor:
        return list(executor.map(func, chunks))


def concatenate(parts: Sequence[np.ndarray], dtype: type = np.complex128) -> np.ndarray:
    if not parts:
        return np.empty(0, dtype=dtype)
    return np.concatenate(parts)
