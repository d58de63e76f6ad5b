"""Longest increasing subsequences of planar point sets.

A chain is a subset of points strictly increasing in both coordinates;
the original sample order is irrelevant.  The solver is patience sorting
with predecessor links: sort by x ascending with ties broken by descending
y (so equal-x points can never co-occur in a chain), then find the longest
strictly increasing subsequence of the y values.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .model import PointSample


@dataclass(frozen=True)
class LisResult:
    """Chain length and one witness (indices into the input point list)."""

    length: int
    witness: tuple[int, ...]


def _as_points(sample) -> np.ndarray:
    if isinstance(sample, PointSample):
        return sample.points
    return np.asarray(sample, dtype=float).reshape(-1, 2)


def _chain(xs: np.ndarray, ys: np.ndarray) -> tuple[int, list[int]]:
    """Patience sorting core; returns (length, witness index list)."""
    n = len(xs)
    if n == 0:
        return 0, []
    order = np.lexsort((-ys, xs))
    yo = ys[order]
    tails: list[float] = []
    tail_pos: list[int] = []
    prev = np.full(n, -1, dtype=np.int64)
    for pos in range(n):
        y = yo[pos]
        k = bisect_left(tails, y)
        if k > 0:
            prev[pos] = tail_pos[k - 1]
        if k == len(tails):
            tails.append(y)
            tail_pos.append(pos)
        else:
            tails[k] = y
            tail_pos[k] = pos
    chain = []
    pos = tail_pos[-1]
    while pos >= 0:
        chain.append(int(order[pos]))
        pos = prev[pos]
    chain.reverse()
    return len(tails), chain


def lis_length(sample) -> LisResult:
    """Longest chain of a sample (PointSample or (n, 2) array), with witness.

    Points that coincide exactly in both coordinates are rejected; samples
    from an atomless law never produce them, so they signal malformed input.
    Runs in O(n log n).
    """
    pts = _as_points(sample)
    n = len(pts)
    if n == 0:
        return LisResult(0, ())
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    both_equal = np.all(np.diff(pts[order], axis=0) == 0, axis=1)
    if np.any(both_equal):
        i = int(np.argmax(both_equal))
        raise ValueError(
            f"duplicate point {tuple(pts[order[i]])} at indices "
            f"{int(order[i])} and {int(order[i + 1])}"
        )
    length, chain = _chain(pts[:, 0], pts[:, 1])
    return LisResult(length, tuple(chain))


def chain_length(points: np.ndarray) -> int:
    """Length-only fast path for Monte Carlo loops (no duplicate check)."""
    pts = _as_points(points)
    length, _ = _chain(pts[:, 0], pts[:, 1])
    return length


def lmax_permutation(perm) -> LisResult:
    """Longest increasing subsequence of a permutation of 1..n.

    Identical to :func:`lis_length` on the point set {(i, perm[i])}.
    """
    p = np.asarray(perm, dtype=np.int64)
    n = len(p)
    if n == 0:
        return LisResult(0, ())
    if not np.array_equal(np.sort(p), np.arange(1, n + 1)):
        raise ValueError("input is not a permutation of 1..n")
    xs = np.arange(1, n + 1, dtype=float)
    length, chain = _chain(xs, p.astype(float))
    return LisResult(length, tuple(chain))


def brute_force_lis(points) -> int:
    """Exhaustive chain search over all subsets; oracle for n <= ~15."""
    pts = _as_points(points)
    n = len(pts)
    if n > 20:
        raise ValueError("brute force oracle is exponential; use n <= 20")
    best = 0
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        if len(idx) <= best:
            continue
        sub = pts[idx]
        sub = sub[np.argsort(sub[:, 0], kind="stable")]
        d = np.diff(sub, axis=0)
        if np.all(d > 0):
            best = len(idx)
    return best
