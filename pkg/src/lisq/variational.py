"""Dynamic-programming solver for the monotone-curve functional.

The target functional is sup over nondecreasing phi of
``integral sqrt(p(x, phi(x)) dphi)``.  The solver brackets it between two
staircase dynamic programs over column width ``delta`` and row height
``delta_y``:

* ``j_low`` maximizes the sum of sqrt(block mass) over chains of disjoint
  blocks, one block per column between consecutive breakpoints (zero-height
  blocks skip a column).  Block masses are exact integrals of the grid
  density.
* ``j_high`` maximizes the same staircase sum with each block's mass
  replaced by ``delta`` times the integral over the block's y-interval of
  the column-wise maximum of the density, which dominates the mass and, for
  columns no wider than a grid cell, dominates any curve segment through
  the column by Cauchy-Schwarz.

Both converge to the functional as the resolution refines; the enclosure at
finite resolution is validated by refinement sweeps rather than certified
(see the bracket tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Density
from .rates import u0, u_mu


@dataclass(frozen=True)
class MonotoneCurve:
    """Piecewise-linear nondecreasing map [0,1] -> [0,1] on uniform knots."""

    ys: np.ndarray

    def __post_init__(self) -> None:
        ys = np.asarray(self.ys, dtype=float)
        if ys.ndim != 1 or len(ys) < 2:
            raise ValueError("curve needs at least two knot values")
        if ys.min() < -1e-12 or ys.max() > 1.0 + 1e-12:
            raise ValueError("curve values must lie in [0, 1]")
        if np.any(np.diff(ys) < -1e-12):
            raise ValueError("curve must be nondecreasing")
        ys = np.clip(ys, 0.0, 1.0)
        ys.setflags(write=False)
        object.__setattr__(self, "ys", ys)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.ys))

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.xs, self.ys)


@dataclass(frozen=True)
class BlockCurve:
    """Breakpoint staircase on the (delta, delta_y) lattice.

    ``j`` holds the row indices of the breakpoints at column boundaries
    (length 1/delta + 1, nondecreasing); a flat step means the column
    carries no block.  Strictly increasing sequences correspond to full
    cover curves.
    """

    j: tuple[int, ...]
    delta: float
    delta_y: float

    def __post_init__(self) -> None:
        j = tuple(int(v) for v in self.j)
        if any(b < a for a, b in zip(j, j[1:])):
            raise ValueError("breakpoints must be nondecreasing")
        if j and j[-1] * self.delta_y > 1.0 + 1e-12:
            raise ValueError("breakpoints exceed the unit square")
        object.__setattr__(self, "j", j)

    def to_curve(self) -> MonotoneCurve:
        return MonotoneCurve(np.asarray(self.j, dtype=float) * self.delta_y)


@dataclass(frozen=True)
class FluctuationProfile:
    """Per-block excess speeds with the achieved objective.

    ``weights`` are the sqrt-masses of the blocks (or the length of the
    constant stretch in the continuum form); the constraint
    ``sum (2 + t_i) w_i >= target`` holds at the solution.
    """

    values: tuple[float, ...]
    weights: tuple[float, ...]
    objective: float
    target: float

    def __post_init__(self) -> None:
        if any(t < 0 for t in self.values):
            raise ValueError("profile values must be nonnegative")
        if self.constraint_value() < self.target - 1e-9:
            raise ValueError("profile violates its constraint")

    def constraint_value(self) -> float:
        return math.fsum((2.0 + t) * w for t, w in zip(self.values, self.weights))


@dataclass(frozen=True)
class VariationalResult:
    j_low: float
    j_high: float
    best_curve: BlockCurve
    delta: float
    delta_y: float
    near_optimal: tuple[BlockCurve, ...] = ()

    def __post_init__(self) -> None:
        if self.j_low > self.j_high + 1e-12:
            raise ValueError("bracket inverted")


def _resolution(delta: float, delta_y: float) -> tuple[int, int]:
    D = round(1.0 / delta)
    Q = round(1.0 / delta_y)
    if abs(D * delta - 1.0) > 1e-9 or abs(Q * delta_y - 1.0) > 1e-9:
        raise ValueError("delta and delta_y must be reciprocals of integers")
    if delta_y > delta + 1e-15:
        raise ValueError("delta_y must not exceed delta")
    return D, Q


def _column_prefixes(density: Density, D: int, Q: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-column prefix integrals on the DP lattice.

    Returns ``mass_pref[i, q]`` = mass of ``[i delta, (i+1) delta] x [0, q delta_y]``
    and ``max_pref[i, q]`` = integral over the same y-range of the column-wise
    maximum of the density.
    """
    grid = density.grid
    m = density.m
    cumx = np.vstack([np.zeros((1, m)), np.cumsum(grid, axis=0) / m])

    def x_prefix(i: int) -> np.ndarray:
        c, rem = divmod(i * m, D)
        if c >= m:
            return cumx[m]
        return cumx[c] + (rem / D / m) * grid[c]

    edges = [x_prefix(i) for i in range(D + 1)]
    colmass = np.empty((D, m))
    for i in range(D):
        colmass[i] = edges[i + 1] - edges[i]

    starts = (np.arange(D) * m) // D
    ends_num = np.arange(1, D + 1) * m
    ends = np.where(ends_num % D == 0, ends_num // D - 1, ends_num // D)
    colmax = np.maximum(grid[starts, :], grid[np.minimum(ends, m - 1), :])

    def y_prefix(mat: np.ndarray) -> np.ndarray:
        cumy = np.concatenate([np.zeros((D, 1)), np.cumsum(mat, axis=1) / m], axis=1)
        out = np.empty((D, Q + 1))
        for q in range(Q + 1):
            r, rem = divmod(q * m, Q)
            if r >= m:
                out[:, q] = cumy[:, m]
            else:
                out[:, q] = cumy[:, r] + (rem / Q / m) * mat[:, r]
        return out

    return y_prefix(colmass), y_prefix(colmax)


def _run_dp(value_matrix, D: int, Q: int) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Staircase DP; value_matrix(i)[q2, q1] scores block (q1, q2] in column i.

    Returns (optimum, forward value table, back pointers, final values).
    Ties resolve to the smallest breakpoint index.
    """
    qs = np.arange(Q + 1)
    invalid = qs[:, None] < qs[None, :]  # need q1 <= q2
    F = np.empty((D + 1, Q + 1))
    F[0] = 0.0
    back = np.zeros((D, Q + 1), dtype=np.int32)
    V = F[0].copy()
    for i in range(D):
        cand = value_matrix(i) + V[None, :]
        cand[invalid] = -np.inf
        back[i] = np.argmax(cand, axis=1)
        V = cand[qs, back[i]]
        F[i + 1] = V
    return float(V.max()), F, back, V


def _mass_values(pref_row: np.ndarray) -> np.ndarray:
    diff = pref_row[:, None] - pref_row[None, :]
    np.maximum(diff, 0.0, out=diff)
    return np.sqrt(diff)


def solve_jbar(
    density: Density,
    delta: float = 1.0 / 64,
    delta_y: float = 1.0 / 128,
    block_mass: str = "exact",
) -> VariationalResult:
    """Bracket the monotone-curve functional by staircase dynamic programs.

    ``block_mass='corner'`` replaces the exact block masses of the lower DP
    with the first-order corner form
    ``delta * (rise) * p(column right edge, block top)`` for fidelity
    comparisons; the upper DP always uses exact integrals.
    """
    if block_mass not in ("exact", "corner"):
        raise ValueError(f"unknown block_mass mode {block_mass!r}")
    D, Q = _resolution(delta, delta_y)
    if density.m > D:
        raise ValueError(
            f"solver resolution delta=1/{D} is coarser than the density grid "
            f"(m={density.m}); refine delta"
        )
    mass_pref, max_pref = _column_prefixes(density, D, Q)

    if block_mass == "corner":
        qs = np.arange(Q + 1)

        def low_values(i: int) -> np.ndarray:
            x = min((i + 1) * delta, 1.0)
            pvals = np.array([density.value_at(x, min(q * delta_y, 1.0)) for q in qs])
            rise = np.maximum(qs[:, None] - qs[None, :], 0) * delta_y
            return np.sqrt(delta * rise * pvals[:, None])

    else:

        def low_values(i: int) -> np.ndarray:
            return _mass_values(mass_pref[i])

    def high_values(i: int) -> np.ndarray:
        return np.sqrt(delta) * _mass_values(max_pref[i])

    j_low, _, back_low, V_low = _run_dp(low_values, D, Q)
    j_high, _, _, _ = _run_dp(high_values, D, Q)
    j_high = max(j_high, j_low)

    breakpoints = np.empty(D + 1, dtype=np.int64)
    breakpoints[D] = int(np.argmax(V_low))
    for i in range(D - 1, -1, -1):
        breakpoints[i] = back_low[i, breakpoints[i + 1]]
    best = BlockCurve(tuple(breakpoints.tolist()), delta, delta_y)
    return VariationalResult(j_low, j_high, best, delta, delta_y)


def near_optimal_curves(
    density: Density,
    delta: float = 1.0 / 64,
    delta_y: float = 1.0 / 128,
    tol: float = 0.0,
    max_curves: int = 32,
) -> list[BlockCurve]:
    """DP-optimal staircases plus those within ``tol`` of the optimum.

    Candidates are enumerated through the middle column interface and
    deduplicated at sup-distance 2*delta_y; at most ``max_curves`` are
    returned, best first.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    D, Q = _resolution(delta, delta_y)
    if density.m > D:
        raise ValueError("solver resolution is coarser than the density grid")
    mass_pref, _ = _column_prefixes(density, D, Q)

    def low_values(i: int) -> np.ndarray:
        return _mass_values(mass_pref[i])

    opt, F, back, _ = _run_dp(low_values, D, Q)

    # reverse DP with fore pointers for reconstruction upward
    qs = np.arange(Q + 1)
    invalid = qs[:, None] > qs[None, :]  # [q1, q2] needs q2 >= q1
    B = np.empty((D + 1, Q + 1))
    B[D] = 0.0
    fore = np.zeros((D, Q + 1), dtype=np.int32)
    W = B[D].copy()
    for i in range(D - 1, -1, -1):
        cand = low_values(i).T + W[None, :]
        cand[invalid] = -np.inf
        fore[i] = np.argmax(cand, axis=1)
        W = cand[qs, fore[i]]
        B[i] = W

    mid = D // 2
    through = F[mid] + B[mid]
    order = np.argsort(-through, kind="stable")

    def reconstruct(qmid: int) -> BlockCurve:
        bp = np.empty(D + 1, dtype=np.int64)
        bp[mid] = qmid
        for i in range(mid - 1, -1, -1):
            bp[i] = back[i, bp[i + 1]]
        for i in range(mid, D):
            bp[i + 1] = fore[i, bp[i]]
        return BlockCurve(tuple(bp.tolist()), delta, delta_y)

    kept: list[BlockCurve] = []
    kept_j: list[np.ndarray] = []
    for q in order:
        if through[q] < opt - tol - 1e-12:
            break
        curve = reconstruct(int(q))
        arr = np.asarray(curve.j)
        if any(np.max(np.abs(arr - prev)) < 2 for prev in kept_j):
            continue
        kept.append(curve)
        kept_j.append(arr)
        if len(kept) >= max_curves:
            break
    return kept


def jbar_functional(density: Density, curve: MonotoneCurve) -> float:
    """Exact value of the functional for a piecewise-linear curve.

    Each knot interval is subdivided at density cell boundaries (in x, and
    in y where the segment crosses a horizontal cell line) so the midpoint
    rule is exact for the piecewise-constant density.
    """
    m = density.m
    xs = curve.xs
    ys = curve.ys
    total = 0.0
    for x0, x1, y0, y1 in zip(xs[:-1], xs[1:], ys[:-1], ys[1:]):
        width = x1 - x0
        if width <= 0:
            continue
        slope = (y1 - y0) / width
        if slope <= 0:
            continue
        cuts = {x0, x1}
        for k in range(int(math.floor(x0 * m)) + 1, int(math.ceil(x1 * m))):
            cuts.add(k / m)
        r0, r1 = sorted((y0, y1))
        for r in range(int(math.floor(r0 * m)) + 1, int(math.ceil(r1 * m))):
            xc = x0 + (r / m - y0) / slope
            if x0 < xc < x1:
                cuts.add(xc)
        pieces = sorted(cuts)
        for a, b in zip(pieces[:-1], pieces[1:]):
            xm = 0.5 * (a + b)
            ym = y0 + slope * (xm - x0)
            total += math.sqrt(density.value_at(xm, min(ym, 1.0)) * slope) * (b - a)
    return total


def _coordinate_descent(w: np.ndarray, c: float, t0: np.ndarray, sweeps: int = 300) -> np.ndarray:
    """Minimize sum w_i u0(t_i) on {t >= 0, sum w_i t_i = c} by pair exchanges."""
    t = np.maximum(t0, 0.0)
    s = float(np.dot(w, t))
    t = t * (c / s) if s > 0 else np.full_like(t, c / w.sum())

    k = len(t)
    if k == 1:
        return t
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(sweeps):
        improved = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                lo, hi = -t[j] * w[j], t[i] * w[i]
                if hi - lo <= 1e-15:
                    continue

                def g(u: float) -> float:
                    ti = max(t[i] - u / w[i], 0.0)
                    tj = max(t[j] + u / w[j], 0.0)
                    return w[i] * u0(ti).value + w[j] * u0(tj).value

                a, b = lo, hi
                x1 = b - golden * (b - a)
                x2 = a + golden * (b - a)
                g1, g2 = g(x1), g(x2)
                for _ in range(80):
                    if g1 <= g2:
                        b, x2, g2 = x2, x1, g1
                        x1 = b - golden * (b - a)
                        g1 = g(x1)
                    else:
                        a, x1, g1 = x1, x2, g2
                        x2 = a + golden * (b - a)
                        g2 = g(x2)
                u = 0.5 * (a + b)
                new_ti = max(t[i] - u / w[i], 0.0)
                new_tj = max(t[j] + u / w[j], 0.0)
                before = w[i] * u0(t[i]).value + w[j] * u0(t[j]).value
                after = w[i] * u0(new_ti).value + w[j] * u0(new_tj).value
                if after < before - 1e-15:
                    improved += before - after
                    t[i], t[j] = new_ti, new_tj
        if improved < 1e-13:
            break
    return t


def discrete_upper_rate(rho, c: float, starts: int = 10, seed: int = 0, return_numeric: bool = False):
    """Minimal staircase upper-tail rate for block sqrt-masses ``sqrt(rho)``.

    The convexity (Jensen) closed form is ``(sum sqrt(rho)) * u0(c / sum sqrt(rho))``
    with the constant profile; a projected coordinate descent from ``starts``
    random starts cross-checks it and a disagreement beyond 1e-6 raises.
    Returns (value, profile), or (value, profile, numeric_value,
    numeric_profile) when ``return_numeric`` is set.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 1 or len(rho) == 0 or np.any(rho <= 0):
        raise ValueError("rho must be a nonempty list of positive masses")
    c = float(c)
    if c < 0:
        raise ValueError("c must be nonnegative")
    w = np.sqrt(rho)
    s = float(w.sum())
    closed = s * u0(c / s).value
    t_star = c / s
    numeric_value = closed
    numeric_t = tuple(t_star for _ in w)
    if c > 0:
        gen = np.random.Generator(np.random.Philox(key=seed))
        best = math.inf
        best_t = None
        for _ in range(starts):
            t0 = gen.random(len(rho))
            t = _coordinate_descent(w, c, t0)
            val = math.fsum(wi * u0(ti).value for wi, ti in zip(w, t))
            if val < best:
                best, best_t = val, t
        if abs(best - closed) > 1e-6:
            raise RuntimeError(
                f"numeric minimizer {best!r} disagrees with closed form {closed!r}"
            )
        numeric_value = best
        numeric_t = tuple(float(v) for v in best_t)
    profile = FluctuationProfile(
        values=tuple(t_star for _ in w),
        weights=tuple(float(v) for v in w),
        objective=closed,
        target=2.0 * s + c,
    )
    if return_numeric:
        numeric_profile = FluctuationProfile(
            values=numeric_t,
            weights=tuple(float(v) for v in w),
            objective=numeric_value,
            target=2.0 * s + c,
        )
        return closed, profile, numeric_value, numeric_profile
    return closed, profile


def optimal_fluctuation_profile(jbar: float, c: float) -> FluctuationProfile:
    """Continuum optimum: the constant excess c/jbar on a stretch of length jbar."""
    if not jbar > 0:
        raise ValueError("jbar must be positive")
    c = float(c)
    if c < 0:
        raise ValueError("c must be nonnegative")
    return FluctuationProfile(
        values=(c / jbar,),
        weights=(jbar,),
        objective=u_mu(c, jbar).value,
        target=2.0 * jbar + c,
    )


def smoothed_identity_slack(
    result: VariationalResult, eps: float, m: int, kappa: float = 4.0
) -> float:
    """Bracket expansion for checking the chain-length identity on smoothed samples.

    The staircase lattice misplaces each smoothing square's contribution by
    at most a few lattice steps relative to the square side ``eps``; the
    coefficient ``kappa`` is frozen from a grid refinement sweep (see the
    solver tests).
    """
    scale = max(result.j_high, result.j_low)
    return kappa * scale * (result.delta + result.delta_y + 2.0 / m) / eps
