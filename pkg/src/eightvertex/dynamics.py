"""Line-by-line Markov dynamics of edge orientations and its estimators.

Edges of line ``t`` sit on a cyclic window of even width; position ``x`` is
stored at index ``x mod width``. At even ``t`` the pairs are ``(2j, 2j+1)``,
at odd ``t`` they are ``(2j-1, 2j)``. Within a pair:

* equal states ``(k, k)`` stay w.p. ``r`` and both flip otherwise;
* unequal states ``(k, 1-k)`` swap w.p. ``p`` and stay otherwise.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .exact import boundary_bound, c8
from .params import DegenerateError, EdgeAddress, KernelParams, ModelError, to_rational

CHUNK = 4096
MAX_TRAJECTORIES = 1 << 20
MAX_EXACT_WIDTH = 8
MAX_EXACT_STEPS = 4


class SizeExceededError(ModelError):
    """Exhaustive computation would be too large."""


class InvalidProfileError(ModelError):
    """Time profile does not follow a zigzag."""


# ---------------------------------------------------------------- initial laws

@dataclass(frozen=True)
class ProductMeasure:
    """I.i.d. Bernoulli(``q``) states."""

    q: object = Fraction(1, 2)

    def __post_init__(self):
        if not 0 <= self.q <= 1:
            raise ValueError("q must lie in [0, 1]")

    def sample(self, rng: np.random.Generator, n: int, width: int) -> np.ndarray:
        return (rng.random((n, width)) < float(self.q)).astype(np.uint8)

    def law(self, width: int) -> Dict[Tuple[int, ...], Fraction]:
        q = to_rational(self.q)
        out = {}
        for row in itertools.product((0, 1), repeat=width):
            ones = sum(row)
            w = q ** ones * (1 - q) ** (width - ones)
            if w:
                out[row] = w
        return out


@dataclass(frozen=True)
class Deterministic:
    """A fixed line; the pattern is repeated to fill the window."""

    pattern: Tuple[int, ...] = (1,)

    def row(self, width: int) -> Tuple[int, ...]:
        pat = tuple(int(b) for b in self.pattern)
        if not pat or any(b not in (0, 1) for b in pat):
            raise ValueError("pattern must be a nonempty sequence of bits")
        return tuple(pat[j % len(pat)] for j in range(width))

    def sample(self, rng, n: int, width: int) -> np.ndarray:
        return np.tile(np.array(self.row(width), dtype=np.uint8), (n, 1))

    def law(self, width: int):
        return {self.row(width): Fraction(1)}


@dataclass(frozen=True)
class Custom:
    """User supplied law: a sampler ``f(rng, n, width)`` and/or a finite law
    mapping rows to probabilities."""

    sampler: Optional[Callable] = None
    table: Optional[Dict[Tuple[int, ...], object]] = None

    def sample(self, rng, n: int, width: int) -> np.ndarray:
        if self.sampler is not None:
            return np.asarray(self.sampler(rng, n, width), dtype=np.uint8)
        rows = list(self.table)
        probs = np.array([float(self.table[r]) for r in rows])
        idx = rng.choice(len(rows), size=n, p=probs / probs.sum())
        return np.array(rows, dtype=np.uint8)[idx]

    def law(self, width: int):
        if self.table is None:
            raise ValueError("custom law has no finite table")
        out = {}
        for row, w in self.table.items():
            if len(row) != width:
                raise ValueError("row length does not match width")
            if w:
                out[tuple(row)] = to_rational(w)
        return out


def _constant_site(init) -> bool:
    if isinstance(init, Deterministic):
        return True
    return isinstance(init, ProductMeasure) and init.q in (0, 1)


# ---------------------------------------------------------------- windows

@dataclass
class EdgeWindow:
    """Cyclic line of edge states at time ``t``."""

    states: np.ndarray
    t: int = 0

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.uint8)
        if self.states.ndim != 1 or self.states.size % 2 or self.states.size == 0:
            raise ValueError("width must be a positive even integer")

    @property
    def width(self) -> int:
        return self.states.size

    def state(self, i: int) -> int:
        return int(self.states[i % self.width])


@dataclass
class ParticleWindow:
    """Named particles, one per edge, each carrying a state."""

    names: np.ndarray
    states: np.ndarray
    t: int = 0

    def __post_init__(self):
        self.names = np.asarray(self.names)
        self.states = np.asarray(self.states, dtype=np.uint8)
        if self.names.shape != self.states.shape or self.states.size % 2:
            raise ValueError("names and states must share an even width")

    @classmethod
    def fresh(cls, states, t: int = 0) -> "ParticleWindow":
        states = np.asarray(states, dtype=np.uint8)
        return cls(np.arange(states.size), states.copy(), t)

    @property
    def width(self) -> int:
        return self.states.size


def _pair_view(a: np.ndarray, t: int) -> np.ndarray:
    """Rotate columns so that the pairs of line ``t`` are ``(2j, 2j+1)``."""
    return np.roll(a, -1, axis=-1) if t % 2 else a


def _unpair_view(a: np.ndarray, t: int) -> np.ndarray:
    return np.roll(a, 1, axis=-1) if t % 2 else a


def step_batch(states: np.ndarray, t: int, params: KernelParams,
               rng: np.random.Generator) -> np.ndarray:
    """One line step for an ``(n, width)`` array of independent windows."""
    u = rng.random(states.shape[:-1] + (states.shape[-1] // 2,))
    return apply_pair_kernel(states, t, params, u)


def apply_pair_kernel(states: np.ndarray, t: int, params: KernelParams,
                      u: np.ndarray) -> np.ndarray:
    """Line step driven by explicit uniforms ``u``, one per pair."""
    s = _pair_view(states, t)
    left, right = s[..., 0::2], s[..., 1::2]
    flip = np.where(left == right, u >= float(params.r), u < float(params.p))
    flip = flip.astype(np.uint8)
    out = np.empty_like(s)
    out[..., 0::2] = left ^ flip
    out[..., 1::2] = right ^ flip
    return _unpair_view(out, t)


def line_step(w: EdgeWindow, params: KernelParams,
              rng: np.random.Generator) -> EdgeWindow:
    """Apply the pair operator of line ``w.t`` and return line ``w.t + 1``."""
    new = step_batch(w.states[None, :], w.t, params, rng)[0]
    return EdgeWindow(new, w.t + 1)


def particle_step(w: ParticleWindow, params: KernelParams,
                  rng: np.random.Generator) -> ParticleWindow:
    """Particle version of one line step.

    For ``p + r <= 1`` each pair keeps everything w.p. ``r``, exchanges the
    two particles and flips both states w.p. ``1-p-r``, and flips both states
    in place w.p. ``p``. For ``p + r > 1`` it keeps w.p. ``1-p``, exchanges
    the particles keeping their states w.p. ``p+r-1`` and flips both in place
    w.p. ``1-r``.
    """
    p, r = float(params.p), float(params.r)
    names = _pair_view(w.names, w.t)
    states = _pair_view(w.states, w.t)
    half = w.width // 2
    u = rng.random(half)
    if params.low_regime:
        swap = (u >= r) & (u < 1 - p)
        flip = u >= r
    else:
        swap = (u >= 1 - p) & (u < r)
        flip = u >= r
    new_names = names.copy()
    new_states = states.copy()
    lo, hi = np.arange(0, w.width, 2), np.arange(1, w.width, 2)
    sw_lo, sw_hi = lo[swap], hi[swap]
    new_names[sw_lo], new_names[sw_hi] = names[sw_hi], names[sw_lo]
    new_states[sw_lo], new_states[sw_hi] = states[sw_hi], states[sw_lo]
    f = flip.astype(np.uint8)
    new_states[lo] ^= f
    new_states[hi] ^= f
    return ParticleWindow(_unpair_view(new_names, w.t),
                          _unpair_view(new_states, w.t), w.t + 1)


def edge_view(w: ParticleWindow) -> EdgeWindow:
    return EdgeWindow(w.states.copy(), w.t)


# ---------------------------------------------------------------- sampling

def _chunks(samples: int) -> List[int]:
    full, rest = divmod(samples, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _run_chunks(fn, samples: int, seed: int, threads: Optional[int]):
    """Run ``fn(rng, n)`` on fixed-size chunks with spawned seeds.

    Chunking depends only on ``samples`` so results do not depend on the
    thread count.
    """
    sizes = _chunks(samples)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(s), n) for s, n in zip(seqs, sizes)]
    workers = threads or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        return [fn(rng, n) for rng, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def min_width(edges: Iterable[EdgeAddress]) -> int:
    """Smallest even width that keeps the cyclic wrap out of the cones."""
    edges = list(edges)
    t = max(e.t for e in edges)
    i = max(abs(e.i) for e in edges)
    w = 2 * (t + i) + 4
    return w + (w % 2)


def sample_edges(edges: Sequence[EdgeAddress], init, params: KernelParams,
                 samples: int, width: Optional[int] = None, seed: int = 0,
                 threads: Optional[int] = None) -> np.ndarray:
    """Draw ``samples`` joint realisations of the given edges.

    Returns a ``(samples, len(edges))`` array of states.
    """
    edges = [e if isinstance(e, EdgeAddress) else EdgeAddress(*e) for e in edges]
    need = min_width(edges)
    width = need if width is None else width
    if width < need or width % 2:
        raise ValueError(f"width must be even and at least {need}")
    t_max = max(e.t for e in edges)

    def run(rng, n):
        out = np.empty((n, len(edges)), dtype=np.uint8)
        s = init.sample(rng, n, width)
        for t in range(t_max + 1):
            for col, e in enumerate(edges):
                if e.t == t:
                    out[:, col] = s[:, e.i % width]
            if t < t_max:
                s = step_batch(s, t, params, rng)
        return out

    return np.concatenate(_run_chunks(run, samples, seed, threads))


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    x = x.astype(float)
    y = y.astype(float)
    vx, vy = x.var(), y.var()
    if vx == 0 or vy == 0:
        raise DegenerateError("an edge is almost surely constant")
    return float(((x - x.mean()) * (y - y.mean())).mean() / np.sqrt(vx * vy))


def estimate_pair_correlation(e1: EdgeAddress, e2: EdgeAddress, init, params: KernelParams,
                              samples: int, width: Optional[int] = None, seed: int = 0,
                              threads: Optional[int] = None,
                              batches: int = 64) -> Tuple[float, float]:
    """Pearson correlation of two edges with a batch-means standard error."""
    return estimate_correlations(e1, [e2], init, params, samples, width, seed,
                                 threads, batches)[0]


def estimate_correlations(base: EdgeAddress, targets: Sequence[EdgeAddress], init,
                          params: KernelParams, samples: int, width: Optional[int] = None,
                          seed: int = 0, threads: Optional[int] = None,
                          batches: int = 64) -> List[Tuple[float, float]]:
    """Correlations of ``base`` with each target from one set of chains.

    Returns ``(estimate, std_error)`` per target; the error comes from the
    spread of the estimate over ``batches`` consecutive blocks of chains.
    """
    base = base if isinstance(base, EdgeAddress) else EdgeAddress(*base)
    targets = [e if isinstance(e, EdgeAddress) else EdgeAddress(*e) for e in targets]
    if _constant_site(init) and (base.t == 0 or any(e.t == 0 for e in targets)):
        raise DegenerateError("an edge of the initial line is constant")
    edges = [base] + targets
    data = sample_edges(edges, init, params, samples, width, seed, threads)
    nb = min(batches, samples // 2)
    blocks = np.array_split(data, nb) if nb >= 2 else []
    out = []
    for col, e in enumerate(targets, start=1):
        if e == base:
            out.append((1.0, 0.0))
            continue
        est = _pearson(data[:, 0], data[:, col])
        parts = []
        for block in blocks:
            try:
                parts.append(_pearson(block[:, 0], block[:, col]))
            except DegenerateError:
                continue
        se = (float(np.std(parts, ddof=1) / np.sqrt(len(parts)))
              if len(parts) > 1 else float("nan"))
        out.append((est, se))
    return out


def single_site_marginals(init, params: KernelParams, t_max: int, samples: int,
                          seed: int = 0, threads: Optional[int] = None,
                          width: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """Estimate ``P(e(0, t) = 1)`` for ``t = 0..t_max`` and its standard error.

    The law of a single site only depends on its backward cone, but the
    chains are cheap so a small window with wrap-around is used; the
    estimate is exact in law only when ``init`` is translation invariant.
    """

    def run(rng, n):
        s = init.sample(rng, n, width)
        acc = np.empty(t_max + 1)
        for t in range(t_max + 1):
            acc[t] = s[:, 0].sum()
            if t < t_max:
                s = step_batch(s, t, params, rng)
        return acc

    totals = np.sum(_run_chunks(run, samples, seed, threads), axis=0)
    mean = totals / samples
    se = np.sqrt(mean * (1 - mean) / samples)
    return mean, se


# ---------------------------------------------------------------- exact laws

def _pair_outcomes(a: int, b: int, p: Fraction, r: Fraction):
    if a == b:
        return (((a, b), r), ((1 - a, 1 - b), 1 - r))
    return (((b, a), p), ((a, b), 1 - p))


def exact_window_distribution(width: int, steps: int, init, params: KernelParams
                              ) -> Dict[Tuple[Tuple[int, ...], ...], Fraction]:
    """Exact law of the trajectory ``(line_0, ..., line_steps)``.

    Lines live on a cyclic window of ``width`` edges (positions
    ``0..width-1``); probabilities are exact rationals.
    """
    if width <= 0 or width % 2 or width > MAX_EXACT_WIDTH:
        raise SizeExceededError(f"width must be even and at most {MAX_EXACT_WIDTH}")
    if not 0 <= steps <= MAX_EXACT_STEPS:
        raise SizeExceededError(f"steps must lie in [0, {MAX_EXACT_STEPS}]")
    q = params.on("rational")
    p, r = q.p, q.r
    dist = {(row,): w for row, w in init.law(width).items()}
    for t in range(steps):
        new: Dict[Tuple[Tuple[int, ...], ...], Fraction] = {}
        for traj, w in dist.items():
            row = traj[-1]
            starts = range(t % 2, width + t % 2, 2)
            options = [_pair_outcomes(row[j % width], row[(j + 1) % width], p, r)
                       for j in starts]
            for combo in itertools.product(*options):
                prob = w
                nxt = [0] * width
                for j, (pair, pw) in zip(starts, combo):
                    prob *= pw
                    nxt[j % width], nxt[(j + 1) % width] = pair
                if prob:
                    key = traj + (tuple(nxt),)
                    new[key] = new.get(key, 0) + prob
                    if len(new) > MAX_TRAJECTORIES:
                        raise SizeExceededError("too many trajectories")
        dist = new
    return dist


def marginal(dist, t: int) -> Dict[Tuple[int, ...], Fraction]:
    """Law of line ``t`` of an exact trajectory distribution."""
    out: Dict[Tuple[int, ...], Fraction] = {}
    for traj, w in dist.items():
        out[traj[t]] = out.get(traj[t], 0) + w
    return out


def edge_law(dist, edges: Sequence[Tuple[int, int]], origin: int = 0
             ) -> Dict[Tuple[int, ...], Fraction]:
    """Joint law of edges ``(position, line)``; ``origin`` is the position
    stored at index 0 of the window."""
    out: Dict[Tuple[int, ...], Fraction] = {}
    for traj, w in dist.items():
        width = len(traj[0])
        key = tuple(traj[t][(i - origin) % width] for i, t in edges)
        out[key] = out.get(key, 0) + w
    return out


def product_law(width: int, q) -> Dict[Tuple[int, ...], Fraction]:
    return ProductMeasure(to_rational(q)).law(width)


# ---------------------------------------------------------------- checks

def validate_profile(profile: Sequence[int]) -> None:
    """Raise unless ``t[i+1] - t[i]`` is ``0`` or ``(-1)^(i+1+t[i])``."""
    if any(t < 0 for t in profile):
        raise InvalidProfileError("times must be nonnegative")
    for i in range(len(profile) - 1):
        step = profile[i + 1] - profile[i]
        allowed = 1 if (i + 1 + profile[i]) % 2 == 0 else -1
        if step not in (0, allowed):
            raise InvalidProfileError(
                f"step {step} at position {i} is not 0 or {allowed}")


def check_zigzag_independence(time_profile: Sequence[int], width: Optional[int],
                              samples: int, seed: int, params: KernelParams,
                              threads: Optional[int] = None) -> float:
    """Chi-square p-value of ``(e(i, t_i))_i`` against the uniform product law,
    starting from the uniform product law."""
    profile = list(time_profile)
    validate_profile(profile)
    edges = [EdgeAddress(i, t) for i, t in enumerate(profile)]
    data = sample_edges(edges, ProductMeasure(Fraction(1, 2)), params, samples,
                        width, seed, threads)
    codes = data.astype(np.int64) @ (1 << np.arange(len(edges)))
    counts = np.bincount(codes, minlength=1 << len(edges))
    return float(stats.chisquare(counts).pvalue)


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    se: float
    holds: bool


def check_boundary_bound(init, i: int, t: int, params: KernelParams, samples: int,
                         seed: int = 0, threads: Optional[int] = None) -> BoundCheck:
    """Compare the influence of edge ``(0, 0)`` under ``init`` with ``c8``.

    Two coupled chains share all randomness and the initial line except that
    ``e(0, 0)`` is forced to 1 in one and to 0 in the other. The difference
    of ``P(e(i, t) = 1)`` equals ``Cov(e00, e_it) / Var(e00)`` for laws
    whose site 0 is independent of the rest, and the left-hand side is that
    difference minus ``c8(i, t)``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    edge = EdgeAddress(i, t)
    width = min_width([edge])

    def run(rng, n):
        base = init.sample(rng, n, width)
        pair = np.concatenate([base, base])
        pair[:n, 0] = 1
        pair[n:, 0] = 0
        for s in range(t):
            u_rng = np.random.default_rng(rng.integers(1 << 63))
            shared = u_rng.random((n, width // 2))
            pair = apply_pair_kernel(pair, s, params, np.concatenate([shared, shared]))
        col = pair[:, i % width].astype(np.int64)
        return col[:n] - col[n:]

    diffs = np.concatenate(_run_chunks(run, samples, seed, threads)).astype(float)
    est = float(diffs.mean())
    se = float(diffs.std(ddof=1) / np.sqrt(samples)) if samples > 1 else float("nan")
    lhs = est - float(c8(i, t, params))
    rhs = float(boundary_bound(t, params))
    return BoundCheck(lhs, rhs, se, abs(lhs) <= rhs + 5 * se)



def _particle_outcomes(a: int, b: int, params: KernelParams):
    """``((new_left_state, new_right_state), swapped, prob)`` for one pair."""
    p, r = params.p, params.r
    if params.low_regime:
        options = (((a, b), False, r), ((1 - b, 1 - a), True, 1 - p - r),
                   ((1 - a, 1 - b), False, p))
    else:
        options = (((a, b), False, 1 - p), ((b, a), True, p + r - 1),
                   ((1 - a, 1 - b), False, 1 - r))
    return [o for o in options if o[2]]


def exact_particle_distribution(width: int, steps: int, init, params: KernelParams
                                ) -> Dict[Tuple[Tuple[int, ...], ...], Fraction]:
    """Exact law of the state trajectories seen through :func:`edge_view`
    when the window evolves by the particle kernel."""
    if width <= 0 or width % 2 or width > MAX_EXACT_WIDTH:
        raise SizeExceededError(f"width must be even and at most {MAX_EXACT_WIDTH}")
    if not 0 <= steps <= MAX_EXACT_STEPS:
        raise SizeExceededError(f"steps must lie in [0, {MAX_EXACT_STEPS}]")
    q = params.on("rational")
    names0 = tuple(range(width))
    dist = {((row,), names0): w for row, w in init.law(width).items()}
    for t in range(steps):
        new = {}
        starts = range(t % 2, width + t % 2, 2)
        for (traj, names), w in dist.items():
            row = traj[-1]
            options = [_particle_outcomes(row[j % width], row[(j + 1) % width], q)
                       for j in starts]
            for combo in itertools.product(*options):
                prob = w
                nxt = [0] * width
                nn = list(names)
                for j, (pair, swapped, pw) in zip(starts, combo):
                    lo, hi = j % width, (j + 1) % width
                    prob *= pw
                    nxt[lo], nxt[hi] = pair
                    if swapped:
                        nn[lo], nn[hi] = names[hi], names[lo]
                key = (traj + (tuple(nxt),), tuple(nn))
                new[key] = new.get(key, 0) + prob
                if len(new) > MAX_TRAJECTORIES:
                    raise SizeExceededError("too many trajectories")
        dist = new
    out: Dict[Tuple[Tuple[int, ...], ...], Fraction] = {}
    for (traj, _), w in dist.items():
        out[traj] = out.get(traj, 0) + w
    return out
