"""Closed-form stationary edge correlation and related closed forms."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .params import (KernelParams, Scalar, binomial, check_backend, coerce,
                     multinomial)

SPECIAL_TOL = 1e-12


def outside_cone(i: int, t: int) -> bool:
    """True when edge ``(i, t)`` cannot be influenced by edge ``(0, 0)``."""
    return (i >= 0 and t <= i - 1) or (i <= -1 and t <= -i)


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


def c8(i: int, t: int, params: KernelParams, backend: str = "float") -> Scalar:
    """Correlation between ``e(0, 0)`` and ``e(i, t)`` under the stationary law.

    Parameters
    ----------
    i, t : int
        Horizontal offset and line of the second edge, ``t >= 0``.
    params : KernelParams
    backend : {"float", "rational"}
        Integer coefficients are exact in both cases; in float mode they are
        converted only when multiplied by the parameter powers.
    """
    check_backend(backend)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if outside_cone(i, t):
        return coerce(0, backend)
    q = params.on(backend)
    delta, dee, pee = q.delta, q.dee, q.pee
    num = Fraction if backend == "rational" else float

    if (i + t) % 2:
        total = coerce(0, backend)
        for k in range((t - 1 - abs(i)) // 2 + 1):
            coef = multinomial(t - 1 - k, [k, (t - 1 + i) // 2 - k, (t - 1 - i) // 2 - k])
            total += _sign(k) * num(coef) * delta ** (t - 1 - 2 * k) * pee ** k
        return _sign(t + 1) * dee * total

    if i == 0:
        h = t // 2
        total = coerce(0, backend)
        for k in range(h + 1):
            coef = binomial(t - 1 - k, h - k) * binomial(h, k)
            total += _sign(k) * num(coef) * delta ** (t - 2 * k) * pee ** k
        return total

    u, v = (t - i) // 2, (t + i) // 2
    total = coerce(0, backend)
    if i < 0:
        for k in range(v):
            coef = binomial(t - 1 - k, u - k) * binomial(v, k)
            total += _sign(t + k) * num(coef) * delta ** (t - 2 * k) * pee ** k
        coef = binomial(u - 1, v - 1)
        return total + _sign(u) * num(coef) * delta ** (-i) * pee ** v
    for k in range(u):
        coef = binomial(t - 1 - k, u - k) * binomial(v, k)
        total += _sign(t + k) * num(coef) * delta ** (t - 2 * k) * pee ** k
    coef = binomial(v, u)
    return total + _sign(v) * num(coef) * delta ** i * pee ** u


def _close(x, y) -> bool:
    if isinstance(x, Fraction) and isinstance(y, (Fraction, int)):
        return x == y
    return abs(float(x) - float(y)) <= SPECIAL_TOL


def c8_special(i: int, t: int, params: KernelParams,
               backend: str = "float") -> Optional[Scalar]:
    """Simplified closed form on the special parameter lines, else ``None``.

    Handles the cone, ``p + r = 1``, ``p = r``, ``p = 1/2`` and ``r = 1/2``.
    """
    check_backend(backend)
    if t < 0:
        raise ValueError("t must be nonnegative")
    q = params.on(backend)
    p, r = q.p, q.r
    num = Fraction if backend == "rational" else float
    half = num(1) / 2
    if outside_cone(i, t):
        return coerce(0, backend)
    if _close(p + r, 1):
        return (1 - 2 * p) ** t if i == 0 else coerce(0, backend)
    if _close(p, r):
        return (2 * p - 1) ** t if i == t else coerce(0, backend)
    if _close(p, half) or _close(r, half):
        other = r if _close(p, half) else p
        if (i + t) % 2 == 0:
            coef = binomial(t - 1, (t - i) // 2)
            sign = 1
        else:
            coef = binomial(t - 1, (t - 1 - i) // 2)
            sign = 1 if _close(p, half) else -1
        return sign * (-half) ** t * num(coef) * (1 - 2 * other) ** t
    return None


def kdn_c(i: int, two_t: int, backend: str = "float") -> Scalar:
    """Six-vertex correlation formula at even time ``two_t``.

    ``2^{-2t} binom(2t-1, (2t - i - s(i))/2)`` with ``s(i) = 1`` for odd
    ``i`` and ``2`` for even ``i``; zero when ``2t < i + s(i)``.
    """
    check_backend(backend)
    if two_t < 0 or two_t % 2:
        raise ValueError("two_t must be a nonnegative even integer")
    s = 1 if i % 2 else 2
    if two_t < i + s:
        return coerce(0, backend)
    value = Fraction(binomial(two_t - 1, (two_t - i - s) // 2), 2 ** two_t)
    return coerce(value, backend)


def boundary_bound(t: int, params: KernelParams, backend: str = "float") -> Scalar:
    """Bound ``2(lam^(t-1-t//2) + lam^(t//2) - lam^(t-1))`` on the influence
    of a non-stationary initial line on the correlation at time ``t``."""
    check_backend(backend)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        # the two negative powers cancel
        return coerce(2, backend)
    lam = params.on(backend).lam
    return 2 * (lam ** (t - 1 - t // 2) + lam ** (t // 2) - lam ** (t - 1))
