"""Work pool and a work-efficient inclusive associative scan.

The scan uses a fixed up-sweep / down-sweep tree (Blelloch / Brent-Kung)
that depends only on the number of elements. Within one tree level all
combinations are independent and are dispatched to a thread pool; since the
tree never changes, the result is bitwise identical for every pool width.

For ``N`` elements the scan performs at most ``2N - 2`` operator
invocations in at most ``2 ceil(log2 N)`` levels.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ScanError


class WorkPool:
    """Fixed-width thread pool; ``workers=1`` runs everything inline."""

    def __init__(self, workers=None):
        self.workers = int(workers or os.cpu_count() or 1)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self._executor = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def map(self, fn, items):
        items = list(items)
        if self._executor is None or len(items) < 2:
            return [fn(x) for x in items]
        return list(self._executor.map(fn, items))

    def map_batched(self, fn, *stacked):
        """Apply a batched ``fn`` to array-tuples split along their leading axis.

        ``stacked`` are NamedTuples of arrays with a common leading length.
        The result is the concatenation of ``fn`` over contiguous chunks.
        """
        n = _leading_length(stacked[0])
        nchunks = min(self.workers, n)
        if nchunks <= 1:
            return fn(*stacked)
        bounds = np.linspace(0, n, nchunks + 1).astype(int)
        chunks = [
            tuple(_take(s, slice(lo, hi)) for s in stacked) for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        parts = self.map(lambda args: fn(*args), chunks)
        return _concat(parts)

    def close(self):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


_default_pool = None


def default_pool():
    """Process-wide pool, created on first use with hardware parallelism."""
    global _default_pool
    if _default_pool is None:
        _default_pool = WorkPool()
    return _default_pool


def set_workers(workers):
    """Replace the process-wide pool with one of the given width."""
    global _default_pool
    if _default_pool is not None:
        _default_pool.close()
    _default_pool = WorkPool(workers)
    return _default_pool


@dataclass
class ScanStats:
    combine_invocations: int = 0
    sequential_depth: int = 0


def scan_schedule(n):
    """Combination levels of the inclusive scan over ``n`` elements.

    Returns a list of ``(left, right)`` index arrays; at each level
    ``x[right] = op(x[left], x[right])`` for all pairs simultaneously.
    """
    levels = []
    d = 1
    while d < n:
        right = np.arange(2 * d - 1, n, 2 * d)
        if right.size:
            levels.append((right - d, right))
        d *= 2
    d //= 2
    while d >= 1:
        right = np.arange(3 * d - 1, n, 2 * d)
        if right.size:
            levels.append((right - d, right))
        d //= 2
    return levels


def _leading_length(x):
    return len(x) if isinstance(x, list) else np.shape(x[0])[0]


def _take(x, idx):
    return type(x)(*(a[idx] for a in x))


def _concat(parts):
    return type(parts[0])(*(np.concatenate(arrs) for arrs in zip(*parts)))


def _put(x, idx, vals):
    for a, v in zip(x, vals):
        a[idx] = v


def associative_scan(op, elems, reverse=False, pool=None, stats=None):
    """Inclusive scan of ``elems`` under the associative ``op``.

    Args:
        op: binary associative operator. For list input it combines two
            elements; for array-tuple input it must be batched, combining two
            stacks of elements pairwise.
        elems: either a list of arbitrary elements or a NamedTuple of arrays
            stacked along the leading axis.
        reverse: if true, compute the suffix combinations
            ``op(x_n, op(x_{n+1}, ... x_N))`` instead of the prefixes.
        pool: optional :class:`WorkPool`; pairs within a level run on it.
        stats: optional :class:`ScanStats` that is incremented in place.

    Returns:
        Prefix (or suffix) combinations, in the same container type.

    Raises:
        ScanError: wraps any exception raised by ``op``, carrying the inclusive
            range of original element indices of the failed combination.
    """
    is_list = isinstance(elems, list)
    n = _leading_length(elems)
    if is_list:
        x = list(elems)
    else:
        x = type(elems)(*(np.array(a, dtype=float, copy=True) for a in elems))
    if n <= 1:
        return x

    # position p covers original indices [lo[p], p] (mirrored when reversed)
    lo = np.arange(n)
    pos = (lambda p: n - 1 - p) if reverse else (lambda p: p)

    def index_range(left, right):
        a, b = pos(lo[left]), pos(right)
        return (min(a, b), max(a, b))

    def combine(a, b):
        # in reverse mode the earlier position holds the later time index
        return op(b, a) if reverse else op(a, b)

    if reverse:
        x = x[::-1] if is_list else type(x)(*(a[::-1].copy() for a in x))

    for left, right in scan_schedule(n):
        if is_list:
            def one(pair):
                l, r = pair
                try:
                    return combine(x[l], x[r])
                except Exception as err:
                    rng = index_range(l, r)
                    raise ScanError(f"combination over elements {rng} failed: {err}", rng) from err

            pairs = list(zip(left.tolist(), right.tolist()))
            results = pool.map(one, pairs) if pool is not None else [one(p) for p in pairs]
            for r, val in zip(right.tolist(), results):
                x[r] = val
        else:
            a, b = _take(x, left), _take(x, right)
            try:
                vals = pool.map_batched(combine, a, b) if pool is not None else combine(a, b)
            except Exception as err:
                _raise_first_failure(combine, a, b, left, right, index_range, err)
            _put(x, right, vals)
        lo[right] = lo[left]
        if stats is not None:
            stats.combine_invocations += int(right.size)
            stats.sequential_depth += 1

    if reverse:
        x = x[::-1] if is_list else type(x)(*(a[::-1].copy() for a in x))
    return x


def _raise_first_failure(combine, a, b, left, right, index_range, err):
    for k in range(right.size):
        try:
            combine(_take(a, slice(k, k + 1)), _take(b, slice(k, k + 1)))
        except Exception as inner:
            rng = index_range(left[k], right[k])
            raise ScanError(f"combination over elements {rng} failed: {inner}", rng) from inner
    rng = index_range(left[0], right[-1])
    raise ScanError(f"combination over elements {rng} failed: {err}", rng) from err


def depth_bound(n):
    """``2 ceil(log2 n)``, the level bound of the scan."""
    return 0 if n <= 1 else 2 * math.ceil(math.log2(n))
