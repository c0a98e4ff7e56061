"""Exponential decay of the stationary correlation and the r = 0 walk."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional

import numpy as np

from .exact import c8
from .params import (DegenerateError, KernelParams, ModelError, Scalar, binomial,
                     check_backend, coerce, multinomial)


class SingularRegimeError(ModelError):
    """``p + r = 1``: the correlation is given by a simpler closed form."""


def h_of(params: KernelParams, backend: str = "float") -> Scalar:
    """``H = (1-2p)(1-2r) / (1-(p+r))^2``."""
    q = params.on(backend)
    if abs(float(q.delta)) < 1e-12:
        raise SingularRegimeError("H is undefined when p + r = 1")
    return (1 - 2 * q.p) * (1 - 2 * q.r) / q.delta ** 2


def m_of(K) -> float:
    """``1 / (1 + sqrt(1 - K))`` for ``K <= 1``."""
    if K > 1:
        raise DegenerateError("m(K) requires K <= 1")
    return 1.0 / (1.0 + math.sqrt(1.0 - float(K)))


def m_poly(kind: int, n: int, X, backend: str = "float") -> Scalar:
    """Alternating polynomials giving ``c8(0, t)`` in terms of ``H``.

    ``kind=0``: ``sum_k (-1)^k binom(2n-1-k, n-k) binom(n, k) X^k``.
    ``kind=1``: ``sum_k (-1)^k multinom(2n-k; k, n-k, n-k) X^k``.
    """
    check_backend(backend)
    if n < 0:
        raise ValueError("n must be nonnegative")
    X = coerce(X, backend)
    num = Fraction if backend == "rational" else float
    total = coerce(0, backend)
    for k in range(n + 1):
        if kind == 0:
            coef = binomial(2 * n - 1 - k, n - k) * binomial(n, k)
        elif kind == 1:
            coef = multinomial(2 * n - k, [k, n - k, n - k])
        else:
            raise ValueError("kind must be 0 or 1")
        total += (-1) ** k * num(coef) * X ** k
    return total


def c8_axis(t: int, params: KernelParams, backend: str = "float") -> Scalar:
    """``c8(0, t)`` through ``m_poly``: ``delta^t M0(H)`` or
    ``dee delta^(t-1) M1(H)``."""
    q = params.on(backend)
    H = h_of(q, backend)
    if t % 2 == 0:
        return q.delta ** t * m_poly(0, t // 2, H, backend)
    return q.dee * q.delta ** (t - 1) * m_poly(1, (t - 1) // 2, H, backend)


# ---------------------------------------------------------------- Y walk

def _check_y(params: KernelParams):
    if params.r != 0:
        raise ValueError("the Y walk needs r = 0")


def y_step_probs(p: float) -> Dict[str, float]:
    return {"-1": p * (1 - p), "+1": p * (1 - p), "0": p * p, "jump": (1 - p) ** 2}


def y_walk_sim(params: KernelParams, t: int, samples: int, seed: int = 0) -> np.ndarray:
    """Samples of ``Y_t``: steps -1 and +1 w.p. ``p(1-p)``, 0 w.p. ``p^2`` and
    ``2(-1)^Y`` w.p. ``(1-p)^2``."""
    _check_y(params)
    p = float(params.p)
    rng = np.random.default_rng(seed)
    y = np.zeros(samples, dtype=np.int64)
    cuts = np.cumsum([p * (1 - p), p * (1 - p), p * p])
    for _ in range(t):
        u = rng.random(samples)
        jump = np.where(y % 2 == 0, 2, -2)
        step = np.where(u < cuts[0], -1,
                        np.where(u < cuts[1], 1, np.where(u < cuts[2], 0, jump)))
        y += step
    return y


def y_decomposition_sim(params: KernelParams, t: int, samples: int, seed: int = 0) -> np.ndarray:
    """Samples of ``S_N + 2R`` where ``N ~ Bin(t, 2p(1-p))``, ``S`` is a simple
    walk of ``N`` steps and ``R`` alternately adds and subtracts binomial
    thinnings of a uniform weak composition of ``t - N`` into ``N + 1``
    parts."""
    _check_y(params)
    p = float(params.p)
    rng = np.random.default_rng(seed)
    n = rng.binomial(t, 2 * p * (1 - p), size=samples)
    s = 2 * rng.binomial(n, 0.5) - n
    keep = (1 - p) ** 2 / (p * p + (1 - p) ** 2) if p < 1 else 0.0
    if t == 0:
        return s
    # stars and bars: the N bars take a uniform random subset of the t slots
    ranks = np.argsort(rng.random((samples, t)), axis=1).argsort(axis=1)
    bars = ranks < n[:, None]
    sign = np.where(np.cumsum(bars, axis=1) % 2 == 0, 1, -1)
    hits = (rng.random((samples, t)) < keep) & ~bars
    return s + 2 * np.sum(sign * hits, axis=1)


def empirical_law(samples: np.ndarray) -> Dict[int, float]:
    values, counts = np.unique(samples, return_counts=True)
    return {int(v): c / samples.size for v, c in zip(values, counts)}


def total_variation(a: Dict[int, float], b: Dict[int, float]) -> float:
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------- rates

@dataclass
class RateReport:
    params: KernelParams
    t_max: int
    fitted_rate: float
    lam: float
    envelope_constant: float


def _log_abs(x: Fraction) -> float:
    return math.log(abs(x.numerator)) - math.log(x.denominator)


def fit_rate(params: KernelParams, t_max: int) -> RateReport:
    """Window-max decay rate of ``|c8(0, t)|`` and the ``sqrt(t)`` envelope.

    Values are computed exactly; float evaluation loses everything to
    cancellation long before ``t = 200``.
    """
    q = params.on("rational")
    if t_max < 2:
        raise ValueError("t_max must be at least 2")
    lam = q.lam
    if q.delta == 0:
        if lam == 0:
            # p = r = 1/2: every correlation off the origin vanishes
            return RateReport(params, t_max, 0.0, 0.0, 0.0)
        raise SingularRegimeError("p + r = 1 is covered by a direct closed form")
    logs: Dict[int, Optional[float]] = {}
    for t in range(1, t_max + 1):
        v = c8(0, t, q, "rational")
        logs[t] = _log_abs(v) if v else None
    window = [logs[t] / t for t in range(max(1, t_max // 2), t_max + 1) if logs[t] is not None]
    fitted = math.exp(max(window)) if window else 0.0
    if lam == 0:
        env = 0.0 if all(v is None for v in logs.values()) else math.inf
    else:
        log_lam = _log_abs(lam)
        env_logs = [logs[t] + 0.5 * math.log(t) - t * log_lam
                    for t in logs if logs[t] is not None]
        env = math.exp(max(env_logs)) if env_logs else 0.0
    return RateReport(params, t_max, fitted, float(lam), env)
