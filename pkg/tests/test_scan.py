import math
from typing import NamedTuple

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paraode.errors import ScanError
from paraode.scan import ScanStats, WorkPool, associative_scan, depth_bound, scan_schedule

SIZES = [1, 2, 3, 5, 8, 16, 64, 257]


class Mats(NamedTuple):
    M: np.ndarray


def matmul(a, b):
    return Mats(a.M @ b.M)


def test_single_element():
    stats = ScanStats()
    assert associative_scan(lambda a, b: a + b, [7], stats=stats) == [7]
    assert stats == ScanStats(0, 0)


def test_integer_prefix_sums():
    stats = ScanStats()
    out = associative_scan(lambda a, b: a + b, list(range(1, 9)), stats=stats)
    assert out == [1, 3, 6, 10, 15, 21, 28, 36]
    assert stats.combine_invocations <= 14
    assert stats.sequential_depth <= 6


@pytest.mark.parametrize("n", SIZES)
@pytest.mark.parametrize("reverse", [False, True])
def test_string_scan_equals_fold(n, reverse):
    # concatenation is associative but not commutative, so order errors show
    elems = [chr(ord("a") + i % 26) + str(i) for i in range(n)]
    out = associative_scan(lambda a, b: a + b, elems, reverse=reverse)
    if reverse:
        assert out == ["".join(elems[i:]) for i in range(n)]
    else:
        assert out == ["".join(elems[: i + 1]) for i in range(n)]


@pytest.mark.parametrize("n", SIZES)
def test_batched_matrix_scan(n, rng):
    mats = Mats(np.eye(2) + 0.3 * rng.normal(size=(n, 2, 2)))
    out = associative_scan(matmul, mats)
    acc = mats.M[0]
    for i in range(n):
        if i:
            acc = acc @ mats.M[i]
        np.testing.assert_allclose(out.M[i], acc, rtol=1e-12, atol=1e-12)
    rev = associative_scan(matmul, mats, reverse=True)
    acc = mats.M[-1]
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            acc = mats.M[i] @ acc
        np.testing.assert_allclose(rev.M[i], acc, rtol=1e-12, atol=1e-12)


def test_input_not_modified(rng):
    mats = Mats(rng.normal(size=(5, 2, 2)))
    before = mats.M.copy()
    associative_scan(matmul, mats)
    np.testing.assert_array_equal(mats.M, before)


@pytest.mark.parametrize("n", list(range(1, 300)) + [1024, 1025, 4097])
def test_operation_bounds(n):
    levels = scan_schedule(n)
    assert sum(len(r) for _, r in levels) <= max(2 * n - 2, 0)
    assert len(levels) <= depth_bound(n)


def test_depth_bound_values():
    assert depth_bound(1) == 0
    assert depth_bound(8) == 6
    assert depth_bound(257) == 2 * math.ceil(math.log2(257))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=80), st.booleans())
def test_scan_equals_fold_property(xs, reverse):
    # affine maps x -> a x + b under composition: associative, non-commutative
    elems = [(1 + (x % 3), x) for x in xs]

    def compose(f, g):  # apply f then g
        return (f[0] * g[0], g[0] * f[1] + g[1])

    out = associative_scan(compose, elems, reverse=reverse)
    for i in range(len(elems)):
        part = elems[i:] if reverse else elems[: i + 1]
        acc = part[0]
        for e in part[1:]:
            acc = compose(acc, e)
        assert out[i] == acc


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_pool_width_bitwise(workers, rng):
    mats = Mats(np.eye(3) + 0.3 * rng.normal(size=(100, 3, 3)))
    ref = associative_scan(matmul, mats)
    with WorkPool(workers) as pool:
        out = associative_scan(matmul, mats, pool=pool)
        listed = associative_scan(lambda a, b: a @ b, list(mats.M), pool=pool)
    np.testing.assert_array_equal(out.M, ref.M)
    np.testing.assert_array_equal(np.stack(listed), ref.M)


@pytest.mark.parametrize("batched", [False, True])
def test_error_carries_index_range(batched):
    def op(a, b):
        if np.any(np.isnan(a.M if batched else a)) or np.any(np.isnan(b.M if batched else b)):
            raise FloatingPointError("nan")
        return matmul(a, b) if batched else a @ b

    M = np.stack([np.eye(2)] * 8)
    M[5, 0, 0] = np.nan
    elems = Mats(M) if batched else list(M)
    with pytest.raises(ScanError) as info:
        associative_scan(op, elems)
    lo, hi = info.value.index_range
    assert lo <= 5 <= hi


def test_pool_map_order():
    with WorkPool(4) as pool:
        assert pool.map(lambda x: x * x, range(20)) == [x * x for x in range(20)]


def test_pool_rejects_zero_width():
    with pytest.raises(ValueError):
        WorkPool(-1)
