"""Probability models on the unit square.

Densities are piecewise constant on an m-by-m grid of cells; ``grid[i, j]``
is the density (per unit area) on the cell ``[i/m, (i+1)/m) x [j/m, (j+1)/m)``,
so the first index runs along x and the second along y.  All integrals used
elsewhere in the package reduce to exact sums over cells.

Random sampling uses the Philox counter-based generator keyed by a 64-bit
seed, so samples are reproducible bit-for-bit across platforms and do not
depend on generation order: point ``i`` always consumes row ``i`` of a single
``(n, 3)`` block of uniform variates.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GRID_TOL = 1e-9

_MASK64 = (1 << 64) - 1


def _philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for the given (seed, stream) pair.

    The Philox key is the 128-bit word ``seed | stream << 64``; distinct
    streams of one seed are independent.
    """
    key = (int(seed) & _MASK64) | ((int(stream) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Density:
    """Strictly positive piecewise-constant probability density on [0,1]^2.

    ``normalization_residual`` records the rescale factor minus one applied
    when the density was built from raw cell values (0.0 when the input was
    already normalized).  Densities produced by smoothing a point sample may
    contain exact zero cells; those carry ``allows_zero=True`` and consumers
    that need strict positivity report an infinity flag instead.
    """

    grid: np.ndarray
    normalization_residual: float = 0.0
    allows_zero: bool = False

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
            raise ValueError(f"density grid must be square, got shape {grid.shape}")
        if grid.shape[0] < 2:
            raise ValueError("density grid needs m >= 2")
        if not np.all(np.isfinite(grid)):
            raise ValueError("density grid contains non-finite values")
        if self.allows_zero:
            if np.any(grid < 0):
                raise ValueError("density cells must be nonnegative")
        elif np.any(grid <= 0):
            i, j = map(int, np.argwhere(grid <= 0)[0])
            raise ValueError(f"non-positive cell ({i},{j})")
        if abs(float(grid.mean()) - 1.0) > GRID_TOL:
            raise ValueError(
                f"density does not integrate to 1 (integral {grid.mean():.12g})"
            )
        grid = grid.copy()
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    @property
    def m(self) -> int:
        return self.grid.shape[0]

    def cell_masses(self) -> np.ndarray:
        """Probability mass of each cell, shape (m, m)."""
        return self.grid / (self.m * self.m)

    def value_at(self, x: float, y: float) -> float:
        """Density value at a point (right/top boundary maps to the last cell)."""
        m = self.m
        i = min(int(x * m), m - 1)
        j = min(int(y * m), m - 1)
        return float(self.grid[i, j])

    def values_at(self, points: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`value_at` for an (n, 2) array."""
        m = self.m
        idx = np.minimum((points * m).astype(int), m - 1)
        return self.grid[idx[:, 0], idx[:, 1]]


@dataclass(frozen=True)
class PointSample:
    """Ordered list of points in the unit square with sampling provenance."""

    points: np.ndarray
    seed: int | None = None
    source: str = "iid"

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ValueError("sample coordinates must lie in [0, 1]")
        if self.source not in ("iid", "poisson"):
            raise ValueError(f"unknown sample source {self.source!r}")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class EntropyValue:
    """Relative entropy value; ``infinite`` flags lack of absolute continuity."""

    value: float
    infinite: bool = False

    def __post_init__(self) -> None:
        if self.infinite:
            object.__setattr__(self, "value", math.inf)
        elif self.value < 0:
            raise ValueError("relative entropy cannot be negative")

    def __float__(self) -> float:
        return self.value


def make_grid_density(values) -> Density:
    """Rescale a positive square array of cell values to a unit-mass density."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square m x m array, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError("density grid needs m >= 2")
    bad = np.argwhere(~(arr > 0))
    if bad.size:
        i, j = map(int, bad[0])
        raise ValueError(f"non-positive cell ({i},{j})")
    integral = float(arr.mean())
    return Density(arr / integral, normalization_residual=1.0 / integral - 1.0)


def builtin_density(name: str, m: int = 64, **params) -> Density:
    """Named density families used throughout the package.

    uniform
        All cells equal to 1.
    product
        ``p(x, y) = g(x) h(y)`` from positive 1-D marginals ``g``, ``h`` of
        length ``m`` (normalized).
    strip_depleted
        Value ``1 - depletion`` on the diagonal band ``|x - y| < delta/3``
        (cell centers decide membership) and a constant elevated value off
        the band restoring unit mass.
    """
    if name == "uniform":
        return make_grid_density(np.ones((m, m)))
    if name == "product":
        g = np.asarray(params["g"], dtype=float)
        h = np.asarray(params["h"], dtype=float)
        if g.ndim != 1 or h.ndim != 1 or len(g) != len(h):
            raise ValueError("product marginals must be 1-D arrays of equal length")
        if np.any(g <= 0) or np.any(h <= 0):
            raise ValueError("product marginals must be strictly positive")
        return make_grid_density(np.outer(g, h))
    if name == "strip_depleted":
        delta = float(params["delta"])
        depletion = float(params["depletion"])
        if not 0.0 < delta < 1.0:
            raise ValueError("strip_depleted needs 0 < delta < 1")
        if not 0.0 <= depletion < 1.0:
            raise ValueError("strip_depleted needs 0 <= depletion < 1")
        centers = (np.arange(m) + 0.5) / m
        band = np.abs(centers[:, None] - centers[None, :]) < delta / 3.0
        n_band = int(band.sum())
        n_off = m * m - n_band
        if n_band == 0 or n_off == 0:
            raise ValueError("strip band is degenerate at this resolution")
        off_value = (m * m - (1.0 - depletion) * n_band) / n_off
        grid = np.where(band, 1.0 - depletion, off_value)
        return Density(grid)
    raise ValueError(f"unknown builtin density {name!r}")


def _draw_points(density: Density, n: int, gen: np.random.Generator) -> np.ndarray:
    """Draw n points: cell by its mass, position uniform within the cell."""
    if n == 0:
        return np.empty((0, 2))
    m = density.m
    cdf = np.cumsum(density.cell_masses().ravel())
    cdf[-1] = 1.0
    u = gen.random((n, 3))
    flat = np.searchsorted(cdf, u[:, 0], side="right")
    flat = np.minimum(flat, m * m - 1)
    ci, cj = flat // m, flat % m
    x = (ci + u[:, 1]) / m
    y = (cj + u[:, 2]) / m
    return np.column_stack((x, y))


def sample_iid(density: Density, n: int, seed: int) -> PointSample:
    """n i.i.d. points from the density; deterministic in (density, n, seed)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    pts = _draw_points(density, n, _philox(seed, 0))
    return PointSample(pts, seed=int(seed), source="iid")


def sample_poisson(density: Density, intensity: float, seed: int) -> PointSample:
    """Poisson(intensity) many points; positions share the iid stream.

    Conditioned on the drawn count ``m`` the points coincide bitwise with
    ``sample_iid(density, m, seed)``.
    """
    if not intensity > 0:
        raise ValueError("intensity must be positive")
    count = int(_philox(seed, 1).poisson(intensity))
    pts = _draw_points(density, count, _philox(seed, 0))
    return PointSample(pts, seed=int(seed), source="poisson")


def relative_entropy(nu: Density, mu: Density) -> EntropyValue:
    """Relative entropy of nu with respect to mu on a shared grid.

    Returns the infinity flag when nu puts mass where mu vanishes; small
    negative rounding (within 1e-12) is clamped to zero.
    """
    if nu.m != mu.m:
        raise ValueError(f"grid mismatch: {nu.m} vs {mu.m}")
    q = nu.grid
    p = mu.grid
    if np.any((q > 0) & (p == 0)):
        return EntropyValue(math.inf, infinite=True)
    pos = q > 0
    terms = np.zeros_like(q)
    terms[pos] = q[pos] * np.log(q[pos] / p[pos])
    value = float(terms.mean())
    if value < 0:
        if value < -1e-9:
            raise AssertionError(f"relative entropy came out negative: {value}")
        value = 0.0
    return EntropyValue(value)


def bernoulli_kl(a: float, b: float) -> float:
    """KL divergence between Bernoulli(a) and Bernoulli(b), natural log."""
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
        raise ValueError("bernoulli_kl needs both arguments strictly inside (0, 1)")
    return (1.0 - a) * math.log((1.0 - a) / (1.0 - b)) + a * math.log(a / b)


def min_gap(sample: PointSample) -> float:
    """Half the minimum over point pairs of min(|dx|, |dy|).

    The minimum over pairs of the smaller coordinate gap equals the smaller
    of the two per-axis nearest-neighbor gaps, so this is O(n log n).
    """
    pts = sample.points
    if len(pts) < 2:
        raise ValueError("min_gap needs at least two points")
    gaps = []
    for axis, label in ((0, "x"), (1, "y")):
        s = np.sort(pts[:, axis])
        d = np.diff(s)
        if np.any(d == 0):
            raise ValueError(f"duplicate {label} coordinate in sample")
        gaps.append(float(d.min()))
    return 0.5 * min(gaps)


def smoothed_empirical_density(sample: PointSample, eps: float | None = None) -> Density:
    """Empirical measure smoothed over disjoint eps-squares around the points.

    Each point carries mass 1/n spread uniformly over the square of side
    ``eps`` centered at it, clipped to the unit square with proportional
    reweighting so every point keeps exactly mass 1/n.  Requires
    ``eps <= min_gap(sample)`` so the squares are pairwise disjoint.  The
    grid resolution is the smallest m with ``1/m <= eps/4`` and squares are
    rasterized with area-exact cell overlap weights.  Cells not covered by
    any square are exact zeros (``allows_zero``).
    """
    n = sample.n
    if n == 0:
        raise ValueError("cannot smooth an empty sample")
    if eps is None:
        if n == 1:
            raise ValueError("eps must be given explicitly for a single point")
        eps = min_gap(sample)
    eps = float(eps)
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    if n >= 2 and eps > min_gap(sample) * (1 + 1e-12):
        raise ValueError(
            f"eps {eps:.6g} exceeds min_gap {min_gap(sample):.6g}: squares would overlap"
        )
    m = max(2, math.ceil(4.0 / eps - 1e-12))
    grid = np.zeros((m, m))
    half = eps / 2.0
    edges = np.arange(m + 1) / m
    for x, y in sample.points:
        x0, x1 = max(x - half, 0.0), min(x + half, 1.0)
        y0, y1 = max(y - half, 0.0), min(y + half, 1.0)
        area = (x1 - x0) * (y1 - y0)
        height = 1.0 / (n * area)
        a0, a1 = int(x0 * m), min(int(math.ceil(x1 * m - 1e-12)), m)
        b0, b1 = int(y0 * m), min(int(math.ceil(y1 * m - 1e-12)), m)
        wx = np.clip(np.minimum(edges[a0 + 1 : a1 + 1], x1) - np.maximum(edges[a0:a1], x0), 0.0, None)
        wy = np.clip(np.minimum(edges[b0 + 1 : b1 + 1], y1) - np.maximum(edges[b0:b1], y0), 0.0, None)
        grid[a0:a1, b0:b1] += (m * m * height) * np.outer(wx, wy)
    return Density(grid, allows_zero=True)


def save_density(density: Density, path: str | Path) -> None:
    """Write the JSON density format {"m": m, "cells": row-major m^2 floats}."""
    payload = {"m": density.m, "cells": [float(v) for v in density.grid.ravel()]}
    Path(path).write_text(json.dumps(payload))


def load_density(path: str | Path) -> Density:
    payload = json.loads(Path(path).read_text())
    m = int(payload["m"])
    cells = np.asarray(payload["cells"], dtype=float)
    if cells.size != m * m:
        raise ValueError(f"density file claims m={m} but has {cells.size} cells")
    grid = cells.reshape(m, m)
    return Density(grid, allows_zero=bool(np.any(grid == 0)))


def save_sample(sample: PointSample, path: str | Path) -> None:
    """Write the CSV sample format: header x,y and 17-significant-digit floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in sample.points:
            writer.writerow([f"{x:.17g}", f"{y:.17g}"])


def load_sample(path: str | Path) -> PointSample:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["x", "y"]:
            raise ValueError("sample CSV must start with an 'x,y' header")
        pts = [(float(row[0]), float(row[1])) for row in reader if row]
    return PointSample(np.asarray(pts, dtype=float).reshape(-1, 2))
