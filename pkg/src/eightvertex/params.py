"""Boltzmann weights, derived kernel parameters and exact integer helpers.

Every formula in the package is written once and evaluated on one of two
backends: ``"float"`` (double precision) or ``"rational"`` (``Fraction``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

Scalar = Union[float, Fraction]

BACKENDS = ("float", "rational")
WEIGHT_RTOL = 1e-12


class ModelError(ValueError):
    """Base class for invalid model input."""


class ConstraintError(ModelError):
    """Weights or probabilities violate a model constraint."""


class DegenerateError(ModelError):
    """A quantity is undefined at the requested point."""


def check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}, expected one of {BACKENDS}")
    return backend


def to_rational(x) -> Fraction:
    """Exact rational value of ``x``.

    Floats go through their shortest decimal repr, so ``0.1`` becomes
    ``1/10`` rather than the nearest binary fraction.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    return Fraction(x)


def coerce(x, backend: str) -> Scalar:
    """Convert ``x`` to the scalar type of ``backend``."""
    if check_backend(backend) == "rational":
        return to_rational(x)
    return float(x)


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


@dataclass(frozen=True)
class Weights:
    """Zero-field Boltzmann weights satisfying ``a + c = b + d``."""

    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar

    def __post_init__(self):
        for name in "abcd":
            if getattr(self, name) < 0:
                raise ConstraintError(f"weight {name} must be nonnegative")
        left = self.a + self.c
        right = self.b + self.d
        if left <= 0:
            raise DegenerateError("a + c must be positive")
        if all(_is_exact(getattr(self, n)) for n in "abcd"):
            ok = left == right
        else:
            ok = abs(float(left) - float(right)) <= WEIGHT_RTOL * float(left)
        if not ok:
            raise ConstraintError(
                f"weights violate a+c=b+d: a+c={left}, b+d={right}")

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class KernelParams:
    """Transition probabilities ``p`` and ``r`` plus derived quantities.

    ``delta = 1-(p+r)``, ``dee = r-p``, ``pee = (2p-1)(2r-1)`` and
    ``lam = max(|1-2p|, |1-2r|)``.
    """

    p: Scalar
    r: Scalar

    def __post_init__(self):
        for name in ("p", "r"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConstraintError(f"{name}={v} must lie in [0, 1]")

    @property
    def delta(self) -> Scalar:
        return 1 - (self.p + self.r)

    @property
    def dee(self) -> Scalar:
        return self.r - self.p

    @property
    def pee(self) -> Scalar:
        return (2 * self.p - 1) * (2 * self.r - 1)

    @property
    def lam(self) -> Scalar:
        return max(abs(1 - 2 * self.p), abs(1 - 2 * self.r))

    @property
    def low_regime(self) -> bool:
        """True when ``p + r <= 1`` (ties use the low-regime kernels)."""
        return self.p + self.r <= 1

    def on(self, backend: str) -> "KernelParams":
        """Copy with ``p`` and ``r`` converted to ``backend`` scalars."""
        return KernelParams(coerce(self.p, backend), coerce(self.r, backend))

    def weights(self) -> Weights:
        """Normalised weights ``(p, r, 1-p, 1-r)``."""
        return Weights(self.p, self.r, 1 - self.p, 1 - self.r)


def derive_params(w: Weights) -> KernelParams:
    """Kernel parameters ``p = a/(a+c)``, ``r = b/(b+d)`` of valid weights."""
    if not isinstance(w, Weights):
        w = Weights(*w)
    return KernelParams(w.a / (w.a + w.c), w.b / (w.b + w.d))


@dataclass(frozen=True)
class EdgeAddress:
    """Edge ``(i, t)``: horizontal index and line. State 1 means up-oriented."""

    i: int
    t: int

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be nonnegative")


def binomial(n: int, k: int) -> int:
    """Binomial coefficient, total on the integers.

    Standard for ``n >= 0`` and zero when ``k`` is out of ``[0, n]``. For
    negative ``n`` only ``binomial(n, 0) = 1`` is nonzero, which keeps
    ``binomial(-1, 0) = 1`` and ``binomial(n, -1) = 0``.
    """
    if n < 0:
        return 1 if k == 0 else 0
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def multinomial(n: int, parts: Sequence[int]) -> int:
    """``n! / prod(part!)``; zero if any part is negative."""
    if any(k < 0 for k in parts):
        return 0
    if sum(parts) != n:
        raise ValueError(f"parts {list(parts)} do not sum to {n}")
    out = 1
    rest = n
    for k in parts:
        out *= math.comb(rest, k)
        rest -= k
    return out
