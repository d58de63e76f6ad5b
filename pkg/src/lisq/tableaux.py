"""Young shapes, hook lengths, and exact longest-increasing-subsequence laws.

Shapes are stored in the column convention: ``columns`` is the nonincreasing
list of column lengths left to right, so ``columns[0]`` is both the first
column length and the longest-increasing-subsequence value the shape
contributes to.  ``conjugate`` converts to the usual row convention.

The exact law of L_max(n) is the hook-product sum over all partitions of n
grouped by first-column length, evaluated in exact rational arithmetic for
small n and in log-domain floating point (with compensated per-length
summation) above that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np

DEFAULT_CAP = 70
EXACT_N_MAX = 20
_CHUNK = 8192


@lru_cache(maxsize=None)
def _partition_counts(n: int) -> tuple[int, ...]:
    """Partition numbers p(0..n) by the pentagonal-number recurrence."""
    p = [1] + [0] * n
    for i in range(1, n + 1):
        total = 0
        k = 1
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > i:
                break
            sign = -1 if k % 2 == 0 else 1
            total += sign * p[i - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= i:
                total += sign * p[i - g2]
            k += 1
        p[i] = total
    return tuple(p)


def partition_count(n: int) -> int:
    if n < 0:
        return 0
    return _partition_counts(n)[n]


@dataclass(frozen=True)
class YoungShape:
    """Integer partition as nonincreasing column lengths."""

    columns: tuple[int, ...]

    def __post_init__(self) -> None:
        cols = tuple(int(c) for c in self.columns)
        if not cols:
            raise ValueError("a shape needs at least one column")
        if any(c <= 0 for c in cols):
            raise ValueError("column lengths must be positive")
        if any(cols[i] < cols[i + 1] for i in range(len(cols) - 1)):
            raise ValueError("column lengths must be nonincreasing")
        object.__setattr__(self, "columns", cols)

    @property
    def size(self) -> int:
        return sum(self.columns)

    @property
    def first_column(self) -> int:
        return self.columns[0]

    def profile(self, j: int) -> int:
        """Number of columns of length >= j (j >= 1)."""
        return sum(1 for c in self.columns if c >= j)

    def conjugate(self) -> "YoungShape":
        cols = self.columns
        return YoungShape(tuple(sum(1 for c in cols if c >= j) for j in range(1, cols[0] + 1)))


def _ascending_partitions(n: int) -> Iterator[list[int]]:
    """Kelleher's accelerated ascending composition generator."""
    if n == 0:
        return
    a = [0] * (n + 1)
    k = 1
    y = n - 1
    while k != 0:
        x = a[k - 1] + 1
        k -= 1
        while 2 * x <= y:
            a[k] = x
            y -= x
            k += 1
        length = k + 1
        while x <= y:
            a[k] = x
            a[length] = y
            yield a[: k + 2]
            x += 1
            y -= 1
        a[k] = x + y
        y = x + y - 1
        yield a[: k + 1]


def enumerate_shapes(n: int, cap: int = DEFAULT_CAP) -> Iterator[YoungShape]:
    """All partitions of n, each exactly once.

    Order is the ascending-composition order of the generator, reversed into
    nonincreasing tuples; it is deterministic and documented by the
    implementation.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > cap:
        raise ValueError(
            f"n={n} exceeds the enumeration cap {cap} "
            f"({partition_count(n)} partitions); raise cap explicitly to proceed"
        )
    for asc in _ascending_partitions(n):
        yield YoungShape(tuple(reversed(asc)))


@dataclass(frozen=True)
class HookData:
    """Hook multiset, log hook product, and exact dimension n!/pi."""

    hooks: tuple[int, ...]
    log_hook_product: float
    dimension: int


def hook_data(shape: YoungShape) -> HookData:
    """Hook lengths of every cell (hook = cells above + cells right + 1)."""
    cols = shape.columns
    conj = [0] * (cols[0] + 1)
    for c in cols:
        conj[c] += 1
    for j in range(cols[0] - 1, 0, -1):
        conj[j] += conj[j + 1]
    hooks = []
    for i, c in enumerate(cols):
        for j in range(1, c + 1):
            hooks.append((c - j) + (conj[j] - 1 - i) + 1)
    product = math.prod(hooks)
    n = shape.size
    fact = math.factorial(n)
    if fact % product:
        raise AssertionError(f"hook product {product} does not divide {n}!")
    return HookData(
        hooks=tuple(sorted(hooks, reverse=True)),
        log_hook_product=float(math.fsum(math.log(h) for h in hooks)),
        dimension=fact // product,
    )


def hook_product(shape: YoungShape) -> int:
    """Exact integer product of all hook lengths."""
    cols = shape.columns
    conj = [0] * (cols[0] + 1)
    for c in cols:
        conj[c] += 1
    for j in range(cols[0] - 1, 0, -1):
        conj[j] += conj[j + 1]
    product = 1
    for i, c in enumerate(cols):
        for j in range(1, c + 1):
            product *= c - j + conj[j] - i
    return product


@dataclass(frozen=True)
class Pmf:
    """Distribution of a chain-length statistic over k = 0..n.

    ``probs[k]`` is P(value = k); entries are ``Fraction`` in exact mode and
    floats otherwise.  ``truncation_residual`` is the probability mass
    deliberately dropped by a truncated mixture (0 for exact laws).
    """

    probs: tuple
    exact: bool
    truncation_residual: float = 0.0

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probs):
            raise ValueError("pmf entries must be nonnegative")
        total = self.total()
        if self.exact:
            if total != 1:
                raise ValueError(f"exact pmf sums to {total}, not 1")
        elif abs(total + self.truncation_residual - 1.0) > 1e-9:
            raise ValueError(
                f"pmf sums to {total!r} with residual {self.truncation_residual!r}"
            )

    @property
    def n(self) -> int:
        return len(self.probs) - 1

    def __getitem__(self, k: int):
        if 0 <= k < len(self.probs):
            return self.probs[k]
        return Fraction(0) if self.exact else 0.0

    def total(self):
        if self.exact:
            return sum(self.probs, Fraction(0))
        return math.fsum(self.probs)

    def as_floats(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def mean(self) -> float:
        if self.exact:
            return float(sum(Fraction(k) * p for k, p in enumerate(self.probs)))
        return float(math.fsum(k * p for k, p in enumerate(self.probs)))

    def prob_below(self, x: float) -> float:
        """P(value < x), exact-to-float when possible."""
        if self.exact:
            return float(sum((p for k, p in enumerate(self.probs) if k < x), Fraction(0)))
        return math.fsum(p for k, p in enumerate(self.probs) if k < x)

    def prob_at_least(self, x: float) -> float:
        """P(value >= x)."""
        if self.exact:
            return float(sum((p for k, p in enumerate(self.probs) if k >= x), Fraction(0)))
        return math.fsum(p for k, p in enumerate(self.probs) if k >= x)


def _chunk_stats(chunk: list[tuple[int, ...]], n: int) -> tuple[np.ndarray, np.ndarray]:
    """First-column values and log hook products for a batch of partitions."""
    B = len(chunk)
    R = max(len(c) for c in chunk)
    C = np.zeros((B, R), dtype=np.int64)
    for b, cols in enumerate(chunk):
        C[b, : len(cols)] = cols
    first = C[:, 0].copy()
    maxpart = int(first.max())
    conj = (C[:, :, None] > np.arange(maxpart)[None, None, :]).sum(axis=1)
    lens = C.ravel()
    total = int(lens.sum())
    cell_shape = np.repeat(np.arange(B), n)
    part_idx = np.repeat(np.tile(np.arange(R), B), lens)
    starts = np.concatenate(([0], np.cumsum(lens)[:-1]))
    within = np.arange(total) - np.repeat(starts, lens)
    part_len = np.repeat(lens, lens)
    conj_val = conj[cell_shape, within]
    hooks = part_len - within + conj_val - part_idx - 1
    logsum = np.bincount(cell_shape, weights=np.log(hooks.astype(float)), minlength=B)
    return first, logsum


@lru_cache(maxsize=None)
def exact_lmax_distribution(n: int, cap: int = DEFAULT_CAP) -> Pmf:
    """Exact law of the longest increasing subsequence of a random permutation.

    P(L=k) sums n!/(hook product)^2 over partitions of n with first column k.
    Rational arithmetic for n <= 20, log-domain floats with compensated
    per-k summation above.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > cap:
        raise ValueError(
            f"n={n} exceeds the cap {cap} ({partition_count(n)} partitions)"
        )
    if n <= EXACT_N_MAX:
        fact = math.factorial(n)
        probs = [Fraction(0)] * (n + 1)
        for shape in enumerate_shapes(n, cap):
            pi = hook_product(shape)
            probs[shape.first_column] += Fraction(fact, pi * pi)
        return Pmf(tuple(probs), exact=True)

    logfact = math.lgamma(n + 1)
    firsts: list[np.ndarray] = []
    terms: list[np.ndarray] = []
    chunk: list[tuple[int, ...]] = []
    for asc in _ascending_partitions(n):
        chunk.append(tuple(reversed(asc)))
        if len(chunk) == _CHUNK:
            f, ls = _chunk_stats(chunk, n)
            firsts.append(f)
            terms.append(np.exp(logfact - 2.0 * ls))
            chunk = []
    if chunk:
        f, ls = _chunk_stats(chunk, n)
        firsts.append(f)
        terms.append(np.exp(logfact - 2.0 * ls))
    first = np.concatenate(firsts)
    term = np.concatenate(terms)
    order = np.argsort(first, kind="stable")
    first = first[order]
    term = term[order]
    probs = [0.0] * (n + 1)
    bounds = np.searchsorted(first, np.arange(n + 2))
    for k in range(1, n + 1):
        lo, hi = bounds[k], bounds[k + 1]
        if hi > lo:
            probs[k] = math.fsum(term[lo:hi].tolist())
    return Pmf(tuple(probs), exact=False)


def brute_force_lmax_distribution(n: int) -> Pmf:
    """Oracle law by running the subsequence solver over all n! permutations."""
    from itertools import permutations

    from .lis import lmax_permutation

    if n < 1:
        raise ValueError("n must be at least 1")
    if n > 8:
        raise ValueError("brute force enumerates n! permutations; use n <= 8")
    counts = [0] * (n + 1)
    for perm in permutations(range(1, n + 1)):
        counts[lmax_permutation(perm).length] += 1
    fact = math.factorial(n)
    return Pmf(tuple(Fraction(c, fact) for c in counts), exact=True)


def poissonized_lmax_distribution(
    intensity: float, truncation_mass: float = 1e-6, cap: int = DEFAULT_CAP
) -> Pmf:
    """Law of the longest chain of a Poisson(intensity) sized uniform sample.

    Mixes the fixed-n laws with Poisson weights, truncating the count sum as
    soon as the remaining Poisson tail drops below ``truncation_mass``; the
    dropped mass is reported as the pmf's ``truncation_residual``.
    """
    if not 0.0 < truncation_mass <= 1e-6:
        raise ValueError("truncation_mass must lie in (0, 1e-6]")
    if not 0.0 < intensity <= cap / 2:
        raise ValueError(f"intensity must lie in (0, {cap / 2}]")
    log_lam = math.log(intensity)
    out = np.zeros(cap + 1)
    cum = 0.0
    m = 0
    while True:
        weight = math.exp(-intensity + m * log_lam - math.lgamma(m + 1))
        if m == 0:
            out[0] += weight
        else:
            out[: m + 1] += weight * exact_lmax_distribution(m, cap).as_floats()
        cum += weight
        residual = max(1.0 - cum, 0.0)
        if residual < truncation_mass:
            break
        m += 1
        if m > cap:
            raise ValueError(
                "Poisson tail still above truncation_mass at the partition cap; "
                "reduce intensity or loosen truncation_mass"
            )
    top = int(np.max(np.nonzero(out)[0])) if np.any(out) else 0
    return Pmf(tuple(out[: top + 1].tolist()), exact=False, truncation_residual=residual)


@dataclass(frozen=True)
class ShapeCurve:
    """Piecewise-linear, nonincreasing, nonnegative profile of unit integral.

    The knots ``xs`` run from 0 to the support endpoint; beyond the support
    the profile is zero.  ``f0`` and ``integral`` are recorded at
    construction.
    """

    xs: np.ndarray
    ys: np.ndarray
    f0: float = 0.0
    integral: float = 0.0

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ValueError("curve needs matching 1-D knot arrays of length >= 2")
        if xs[0] != 0.0 or np.any(np.diff(xs) <= 0):
            raise ValueError("knots must strictly increase from 0")
        if np.any(ys < 0):
            raise ValueError("curve values must be nonnegative")
        if np.any(np.diff(ys) > 1e-12):
            raise ValueError("curve must be nonincreasing")
        integral = float(np.trapezoid(ys, xs))
        if abs(integral - 1.0) > 1e-9:
            raise ValueError(f"curve integral is {integral:.12g}, not 1")
        xs = xs.copy()
        ys = ys.copy()
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "f0", float(ys[0]))
        object.__setattr__(self, "integral", integral)

    @classmethod
    def from_function(cls, fn, support: float, knots: int = 513, normalize: bool = False):
        xs = np.linspace(0.0, support, knots)
        ys = np.clip(np.asarray([fn(x) for x in xs], dtype=float), 0.0, None)
        ys = np.minimum.accumulate(ys)
        if normalize:
            ys = ys / np.trapezoid(ys, xs)
        return cls(xs, ys)

    @property
    def support(self) -> float:
        return float(self.xs[-1])

    def __call__(self, x: float) -> float:
        if x < 0 or x > self.support:
            return 0.0
        return float(np.interp(x, self.xs, self.ys))

    def inverse(self, y: float) -> float:
        """Pseudo-inverse sup{x : f(x) > y} (0 on an empty set)."""
        ys = self.ys
        if y >= ys[0]:
            return 0.0
        if y < ys[-1]:
            return self.support
        idx = int(np.searchsorted(-ys, -y, side="left"))
        j = idx - 1
        x0, x1 = self.xs[j], self.xs[j + 1]
        y0, y1 = ys[j], ys[j + 1]
        return float(x0 + (y0 - y) * (x1 - x0) / (y0 - y1))


def shape_from_curve(curve: ShapeCurve, n: int) -> YoungShape:
    """Discretize a profile into a shape: column i gets floor(f(i/sqrt n) sqrt n)."""
    if curve.f0 <= 0:
        raise ValueError("curve must have f(0) > 0")
    if n < 1:
        raise ValueError("n must be at least 1")
    rn = math.sqrt(n)
    imax = int(math.floor(curve.support * rn))
    cols = []
    for i in range(1, imax + 1):
        v = int(math.floor(curve(i / rn) * rn))
        if v > 0:
            cols.append(v)
    if not cols:
        raise ValueError("curve support is degenerate at this n")
    return YoungShape(tuple(cols))


def hook_integral(curve: ShapeCurve, tol: float = 1e-6, scheme: str = "substitution") -> float:
    """Double integral of log(f(x) - y + finv(y) - x) over the subgraph of f.

    The integrand has an integrable log singularity along y = f(x); the
    default scheme removes it with the substitution f(x) - y = s^2, the
    alternative integrates in y directly and leans on adaptive endpoint
    handling.  Raises if the combined quadrature error exceeds ``tol``.
    """
    from scipy.integrate import quad

    if scheme not in ("substitution", "tensor"):
        raise ValueError(f"unknown scheme {scheme!r}")
    b = curve.support
    inner_tol = tol / (8.0 * max(b, 1.0))
    inner_err = 0.0

    def inner(x: float) -> float:
        nonlocal inner_err
        fx = curve(x)
        if fx <= 0.0:
            return 0.0
        if scheme == "substitution":
            def g(s: float) -> float:
                u = s * s
                return 2.0 * s * math.log(u + curve.inverse(fx - u) - x)

            val, err = quad(g, 0.0, math.sqrt(fx), limit=200, epsabs=inner_tol)
        else:
            def g(y: float) -> float:
                return math.log(fx - y + curve.inverse(y) - x)

            val, err = quad(g, 0.0, fx, limit=200, epsabs=inner_tol)
        inner_err = max(inner_err, err)
        return val

    value, outer_err = quad(inner, 0.0, b, limit=200, epsabs=tol / 4.0)
    achieved = outer_err + b * inner_err
    if achieved > tol:
        raise RuntimeError(
            f"hook integral quadrature achieved {achieved:.3e}, above tol {tol:.3e}"
        )
    return float(value)


def append_first_column(shape: YoungShape, r: int) -> YoungShape:
    """Lengthen the first column by r; always yields a valid shape."""
    if r < 1:
        raise ValueError("r must be at least 1")
    cols = shape.columns
    return YoungShape((cols[0] + r,) + cols[1:])


def hook_ratio_formula(shape: YoungShape, r: int, exact: bool = False):
    """Hook-product ratio pi(extended)/pi(shape) after growing the first column.

    The closed form is r! times the product over rows j = 1..k of
    (k + r - j + t(j)) / (k - j + t(j)) where k is the first column length
    and t(j) counts the columns of length >= j.  Returns the log ratio as a
    float, or the exact ratio as a Fraction when ``exact`` is set (sensible
    for sizes where exact integers stay cheap, |shape| + r <= 60 or so).
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    cols = shape.columns
    k = cols[0]
    conj = [0] * (k + 2)
    for c in cols:
        conj[c] += 1
    for j in range(k - 1, 0, -1):
        conj[j] += conj[j + 1]
    if exact:
        num = math.factorial(r)
        den = 1
        for j in range(1, k + 1):
            num *= k + r - j + conj[j]
            den *= k - j + conj[j]
        return Fraction(num, den)
    total = math.lgamma(r + 1)
    total += math.fsum(
        math.log(k + r - j + conj[j]) - math.log(k - j + conj[j]) for j in range(1, k + 1)
    )
    return float(total)
