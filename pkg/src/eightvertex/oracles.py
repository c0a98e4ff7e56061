"""Independent computations of the stationary edge correlation.

Three routes are provided: exact dynamic programming over the tagged-edge
walk, expansion of the rational generating fraction, and exhaustive
enumeration of coloured paths.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Tuple

from .params import KernelParams, ModelError, Scalar, check_backend, coerce

MAX_PATH_STEPS = 12


class RegimeError(ModelError):
    """Operation not available for these parameters."""


class SingularError(ArithmeticError):
    """Denominator vanishes at the evaluation point."""


@dataclass
class WalkDist:
    """Law of the walk ``X_t = (position, state)`` at time ``t``."""

    t: int
    probs: Dict[Tuple[int, int], Scalar] = field(default_factory=dict)

    def total(self) -> Scalar:
        return sum(self.probs.values())

    def signed(self, i: int) -> Scalar:
        """``P(X_t = (i, 1)) - P(X_t = (i, 0))``."""
        return self.probs.get((i, 1), 0) - self.probs.get((i, 0), 0)


def walk_start(backend: str = "float") -> WalkDist:
    return WalkDist(0, {(0, 1): coerce(1, backend)})


def walk_step(dist: WalkDist, params: KernelParams) -> WalkDist:
    """Advance the walk by one line.

    For ``p + r <= 1``: keep the state w.p. ``r``, flip it in place w.p. ``p``,
    and move to ``i + (-1)^(i+t)`` with a flipped state w.p. ``1-p-r``.
    For ``p + r > 1``: keep w.p. ``1-p``, flip in place w.p. ``1-r``, and move
    keeping the state w.p. ``p+r-1``.
    """
    p, r = params.p, params.r
    out: Dict[Tuple[int, int], Scalar] = defaultdict(lambda: 0 * p)
    low = params.low_regime
    for (i, k), mass in dist.probs.items():
        if not mass:
            continue
        j = i + (1 if (i + dist.t) % 2 == 0 else -1)
        if low:
            moves = (((i, k), r), ((i, 1 - k), p), ((j, 1 - k), 1 - p - r))
        else:
            moves = (((i, k), 1 - p), ((i, 1 - k), 1 - r), ((j, k), p + r - 1))
        for key, w in moves:
            if w:
                out[key] += mass * w
    return WalkDist(dist.t + 1, dict(out))


def walk_dist(t: int, params: KernelParams, backend: str = "float") -> WalkDist:
    """Law of ``X_t`` started from ``(0, 1)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    q = params.on(backend)
    dist = walk_start(backend)
    for _ in range(t):
        dist = walk_step(dist, q)
    return dist


def c8_via_walk(i: int, t: int, params: KernelParams, backend: str = "float") -> Scalar:
    return walk_dist(t, params, backend).signed(i)


def walk_table(t_max: int, params: KernelParams, backend: str = "float") -> List[WalkDist]:
    """Walk laws for every ``t`` in ``0..t_max``."""
    q = params.on(backend)
    dists = [walk_start(backend)]
    for _ in range(t_max):
        dists.append(walk_step(dists[-1], q))
    return dists


@dataclass
class CoeffTable:
    """``coeff[t][j]`` is the coefficient of ``l^t x^j``; equals ``c8(j-t, t)``."""

    t_max: int
    coeff: List[List[Scalar]]

    def at(self, i: int, t: int) -> Scalar:
        j = i + t
        if not 0 <= j <= 2 * t:
            return 0 * self.coeff[0][0]
        return self.coeff[t][j]


def series_coeffs(t_max: int, params: KernelParams, backend: str = "float") -> CoeffTable:
    """Expand ``(1 + l(delta + x dee)) / (1 + delta(1+x^2) l + pee x^2 l^2)``.

    Uses the row recurrence ``c_t = -delta (1+x^2) c_{t-1} - pee x^2 c_{t-2}``
    with rows 0 and 1 seeded by the numerator.
    """
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    check_backend(backend)
    q = params.on(backend)
    zero, one = coerce(0, backend), coerce(1, backend)
    delta, dee, pee = q.delta, q.dee, q.pee
    rows: List[List[Scalar]] = [[one]]
    if t_max >= 1:
        # numerator l(delta + x dee) minus delta(1+x^2) l from the denominator
        rows.append([zero, dee, -delta])
    for t in range(2, t_max + 1):
        row = [zero] * (2 * t + 1)
        prev, prev2 = rows[t - 1], rows[t - 2]
        for j, v in enumerate(prev):
            row[j] -= delta * v
            row[j + 2] -= delta * v
        for j, v in enumerate(prev2):
            row[j + 2] -= pee * v
        rows.append(row)
    return CoeffTable(t_max, rows)


def closed_form_F(k1: int, k2: int, C, K, R, L):
    """Generating function of coloured paths by start and end colour classes.

    ``F[k1][k2]`` for the four classes, with common denominator
    ``H = ((C+K)^2 - (1-R)(1-L)) ((C-K)^2 - (1+R)(1+L))``.
    """
    H = ((C + K) ** 2 - (1 - R) * (1 - L)) * ((C - K) ** 2 - (1 + R) * (1 + L))
    if abs(float(H)) < 1e-14:
        raise SingularError("denominator H vanishes")
    if (k1, k2) == (0, 1):
        top = 1 - 2 * C * R * K - C ** 2 - R ** 2 - K ** 2
    elif (k1, k2) == (0, 0):
        top = C ** 2 * R - L * R ** 2 + R * K ** 2 + 2 * C * K + L
    elif (k1, k2) == (1, 1):
        top = -K ** 3 + C * (R + L) + K * (C ** 2 + R * L + 1)
    elif (k1, k2) == (1, 0):
        top = -C ** 3 + K * (R + L) + C * (K ** 2 + R * L + 1)
    else:
        raise ValueError("k1 and k2 must be 0 or 1")
    return top / H


def f_combination(C, K, R, L):
    """``F01 - F00 + F11 - F10`` in reduced form."""
    den = (C - K) ** 2 - (1 + R) * (1 + L)
    if abs(float(den)) < 1e-14:
        raise SingularError("denominator vanishes")
    return (C - R - K - 1) / den


@lru_cache(maxsize=1)
def _path_classes(depth: int) -> Dict[Tuple[int, int], Dict[Tuple[int, int, int, int], int]]:
    """Count coloured paths from ``(0, 0)`` with colour 1.

    Keyed by endpoint ``(t, i)``, then by ``(colour, n_keep, n_change,
    n_diag)``. Each path is visited individually; the counts do not depend
    on ``(p, r)``.
    """
    counts: Dict[Tuple[int, int], Dict[Tuple[int, int, int, int], int]] = \
        defaultdict(lambda: defaultdict(int))

    def visit(t, i, colour, nk, nc, nd):
        counts[(t, i)][(colour, nk, nc, nd)] += 1
        if t == depth:
            return
        visit(t + 1, i, colour, nk + 1, nc, nd)
        visit(t + 1, i, 1 - colour, nk, nc + 1, nd)
        step = 1 if (i + t) % 2 == 0 else -1
        visit(t + 1, i + step, 1 - colour, nk, nc, nd + 1)

    visit(0, 0, 1, 0, 0, 0)
    return {key: dict(v) for key, v in counts.items()}


def brute_force_paths(i: int, t: int, params: KernelParams, backend: str = "float") -> Scalar:
    """Signed probability of coloured paths ending at ``(i, t)``.

    Vertical steps keeping the colour weigh ``r``, vertical steps changing it
    weigh ``p`` and diagonal steps (always changing colour) weigh ``1-p-r``.
    Only defined for ``p + r <= 1``.
    """
    if not 0 <= t <= MAX_PATH_STEPS:
        raise ValueError(f"t must lie in [0, {MAX_PATH_STEPS}]")
    q = params.on(backend)
    if not q.low_regime:
        raise RegimeError("path enumeration requires p + r <= 1")
    p, r, diag = q.p, q.r, 1 - q.p - q.r
    total = coerce(0, backend)
    classes = _path_classes(MAX_PATH_STEPS).get((t, i), {})
    for (colour, nk, nc, nd), n in classes.items():
        w = n * r ** nk * p ** nc * diag ** nd
        total += w if colour else -w
    return total
