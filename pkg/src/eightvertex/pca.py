"""Triangular probabilistic cellular automata and zigzag Markov invariants.

Faces of the rotated lattice are arranged in rows. A TPCA produces row
``k+2`` from rows ``k`` and ``k+1``: cell ``c`` of the new row is drawn from
``T(y_c, x_{c+1}, y_{c+1}; .)`` where ``x`` is row ``k`` and ``y`` is row
``k+1``. Row ``k`` sits above line ``k`` of edges and row ``k+1`` below it;
edge ``2c+k`` separates ``x_c`` from ``y_{c-1}`` and edge ``2c+k+1``
separates ``x_c`` from ``y_c``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from .dynamics import Custom, exact_window_distribution, MAX_EXACT_STEPS, SizeExceededError
from .params import KernelParams, ModelError, to_rational

POWER_TOL = 1e-13
POWER_MAX_ITER = 10_000
SOLVE_TOL = 1e-10


class EigenFailure(ArithmeticError):
    """Power iteration did not converge."""


class UnsupportedStateError(ModelError):
    """The kernel gives no transition from this neighbourhood."""


class ImproperColoringError(ModelError):
    """Adjacent faces share a colour."""


@dataclass(frozen=True)
class TpcaKernel:
    """Tensor ``T[y, x, y', z]``; rows with zero sum mark unsupported
    neighbourhoods."""

    tensor: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=float)
        if t.ndim != 4 or len(set(t.shape)) != 1:
            raise ValueError("tensor must have shape (k, k, k, k)")
        if (t < 0).any():
            raise ValueError("entries must be nonnegative")
        sums = t.sum(axis=3)
        if not np.all(np.isclose(sums, 1) | np.isclose(sums, 0)):
            raise ValueError("each row must sum to 1 (or 0 when unsupported)")
        object.__setattr__(self, "tensor", t)

    @property
    def size(self) -> int:
        return self.tensor.shape[0]

    @property
    def positive_rate(self) -> bool:
        return bool((self.tensor > 0).all())

    @property
    def stochastic(self) -> bool:
        return bool(np.allclose(self.tensor.sum(axis=3), 1))


@dataclass(frozen=True)
class Hzmc:
    """Zigzag Markov chain on two rows: ``rho(x_0) D(x_0;y_0) U(y_0;x_1) ...``."""

    D: np.ndarray
    U: np.ndarray
    rho: np.ndarray

    @classmethod
    def from_matrices(cls, D, U) -> "Hzmc":
        D = np.asarray(D, dtype=float)
        U = np.asarray(U, dtype=float)
        return cls(D, U, stationary(D @ U))


@dataclass
class FaceRows:
    """Two consecutive cyclic rows of face colours."""

    x: np.ndarray
    y: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("rows must be 1-d arrays of equal length")


# ---------------------------------------------------------------- kernels

def a8_kernel(p, r) -> TpcaKernel:
    """Binary kernel whose space-time diagrams map to the line dynamics."""
    p, r = float(p), float(r)
    if not (0 <= p <= 1 and 0 <= r <= 1):
        raise ValueError("p and r must lie in [0, 1]")
    T = np.zeros((2, 2, 2, 2))
    for k in (0, 1):
        j = 1 - k
        T[k, k, k, k] = T[k, j, k, j] = r
        T[k, k, k, j] = T[k, j, k, k] = 1 - r
        T[k, j, j, k] = T[k, k, j, j] = p
        T[k, j, j, j] = T[k, k, j, k] = 1 - p
    return TpcaKernel(T, "a8")


def a6_kernel(p) -> TpcaKernel:
    """Ternary kernel on proper 3-colourings (colours mod 3)."""
    p = float(p)
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    T = np.zeros((3, 3, 3, 3))
    for i in range(3):
        up, dn = (i + 1) % 3, (i - 1) % 3
        T[i, up, (i + 2) % 3, up] = 1
        T[i, up, i, (i + 2) % 3] = p
        T[i, up, i, up] = 1 - p
        T[i, dn, (i - 2) % 3, dn] = 1
        T[i, dn, i, (i + 1) % 3] = p
        T[i, dn, i, dn] = 1 - p
    return TpcaKernel(T, "a6")


def smoothed(T: TpcaKernel, eps: float) -> TpcaKernel:
    """Mix with the uniform kernel to obtain positive rates."""
    k = T.size
    t = T.tensor.copy()
    # unsupported neighbourhoods become uniform
    t[t.sum(axis=3) == 0] = 1.0 / k
    return TpcaKernel((1 - eps) * t + eps / k, T.name)


# ---------------------------------------------------------------- simulation

def tpca_step(rows: FaceRows, T: TpcaKernel, rng: np.random.Generator) -> FaceRows:
    """Draw the next row; returns ``(old y, new row)``."""
    y, x = rows.y, rows.x
    probs = T.tensor[y, np.roll(x, -1), np.roll(y, -1)]
    if (probs.sum(axis=1) == 0).any():
        raise UnsupportedStateError("kernel has no transition for some neighbourhood")
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(y.size)[:, None]
    z = np.minimum((u >= cdf).sum(axis=1), T.size - 1)
    return FaceRows(y, z, rows.k + 1)


def tpca_step_batch(x: np.ndarray, y: np.ndarray, T: TpcaKernel,
                    rng: np.random.Generator) -> np.ndarray:
    """New rows for an ``(n, width)`` batch of row pairs."""
    k = T.size
    cdf = np.cumsum(T.tensor.reshape(k ** 3, k), axis=1)
    idx = (y * k + np.roll(x, -1, axis=1)) * k + np.roll(y, -1, axis=1)
    u = rng.random(y.shape)
    if k == 2:
        return (u >= cdf[idx, 0]).astype(np.int64)
    return np.minimum((u[..., None] >= cdf[idx]).sum(axis=-1), k - 1)


# ---------------------------------------------------------------- colourings

def theta8(rows: FaceRows) -> np.ndarray:
    """Edge line ``rows.k`` from a 2-colouring: 1 where the faces agree.

    The returned array is indexed by edge position modulo ``2 * width``.
    """
    x, y = rows.x, rows.y
    w = x.size
    line = np.empty(2 * w, dtype=np.uint8)
    left = (x == np.roll(y, 1)).astype(np.uint8)
    right = (x == y).astype(np.uint8)
    s = rows.k
    idx = 2 * np.arange(w) + s
    line[idx % (2 * w)] = left
    line[(idx + 1) % (2 * w)] = right
    return line


def theta6(rows: FaceRows) -> np.ndarray:
    """Edge line ``rows.k`` from a proper 3-colouring.

    An edge whose position has the parity of its line is up-oriented when the
    upper face is one more (mod 3) than the lower face; on the other parity
    when the lower face is one more than the upper face.
    """
    x, y = rows.x % 3, rows.y % 3
    y_prev = np.roll(y, 1)
    if (x == y).any() or (x == y_prev).any():
        raise ImproperColoringError("adjacent faces share a colour")
    w = x.size
    line = np.empty(2 * w, dtype=np.uint8)
    s = rows.k
    idx = 2 * np.arange(w) + s
    line[idx % (2 * w)] = (x == (y_prev + 1) % 3)
    line[(idx + 1) % (2 * w)] = (y == (x + 1) % 3)
    return line


def even_zero_lines(width: int):
    """Cyclic lines with an even number of zeros (the image of theta8)."""
    for row in itertools.product((0, 1), repeat=width):
        if (width - sum(row)) % 2 == 0:
            yield row


def theta8_consistency(width: int, steps: int, params: KernelParams,
                       mu: Optional[Dict[Tuple[int, ...], object]] = None) -> bool:
    """Exact check that theta8 turns the A8 automaton into the line dynamics.

    ``width`` counts edges per line. The initial rows are drawn from the
    colour-flip symmetric law ``nu0(C) = mu(theta8(C)) / 2``; ``mu`` must be
    supported on lines with an even number of zeros and defaults to the
    uniform law on them. Lines ``0..steps`` of both sides are compared.
    """
    if width % 2 or width <= 0 or width > 8:
        raise SizeExceededError("width must be even and at most 8")
    if not 0 <= steps <= min(3, MAX_EXACT_STEPS):
        raise SizeExceededError("steps must lie in [0, 3]")
    q = params.on("rational")
    p, r = q.p, q.r
    faces = width // 2
    if mu is None:
        lines = list(even_zero_lines(width))
        mu = {row: Fraction(1, len(lines)) for row in lines}
    mu = {tuple(k): to_rational(v) for k, v in mu.items() if v}
    for row in mu:
        if (width - sum(row)) % 2:
            raise ValueError("mu must be supported on lines with an even number of zeros")

    T = _a8_exact(p, r)
    dist: Dict[Tuple, Fraction] = {}
    for cells in itertools.product((0, 1), repeat=2 * faces):
        x, y = np.array(cells[:faces]), np.array(cells[faces:])
        line = tuple(int(b) for b in theta8(FaceRows(x, y, 0)))
        w = mu.get(line, 0) / 2
        if w:
            dist[(tuple(cells[:faces]), tuple(cells[faces:]))] = w
    for _ in range(steps):
        new: Dict[Tuple, Fraction] = {}
        for rows, w in dist.items():
            x, y = rows[-2], rows[-1]
            options = []
            for c in range(faces):
                key = (y[c], x[(c + 1) % faces], y[(c + 1) % faces])
                options.append([(z, pz) for z, pz in enumerate(T[key]) if pz])
            for combo in itertools.product(*options):
                prob = w
                for _, pz in combo:
                    prob *= pz
                nk = rows + (tuple(z for z, _ in combo),)
                new[nk] = new.get(nk, 0) + prob
        dist = new

    lhs: Dict[Tuple, Fraction] = {}
    for rows, w in dist.items():
        traj = tuple(tuple(int(b) for b in theta8(FaceRows(np.array(rows[k]), np.array(rows[k + 1]), k)))
                     for k in range(steps + 1))
        lhs[traj] = lhs.get(traj, 0) + w
    rhs = exact_window_distribution(width, steps, Custom(table=mu), q)
    return lhs == rhs


def _a8_exact(p: Fraction, r: Fraction):
    T = {}
    for k in (0, 1):
        j = 1 - k
        for key, val in (((k, k, k), (r, 1 - r)), ((k, j, k), (1 - r, r)),
                         ((k, j, j), (p, 1 - p)), ((k, k, j), (1 - p, p))):
            # val lists the probability of z = k then z = 1 - k
            probs = [Fraction(0), Fraction(0)]
            probs[k], probs[j] = val
            T[key] = probs
    return T


# ---------------------------------------------------------------- invariants

def stationary(M: np.ndarray) -> np.ndarray:
    """Left Perron vector of a nonnegative matrix, normalised to sum 1."""
    return perron_left(M)[1]


def perron_left(M: np.ndarray, tol: float = POWER_TOL,
                max_iter: int = POWER_MAX_ITER) -> Tuple[float, np.ndarray]:
    """Dominant eigenvalue and left eigenvector by power iteration."""
    M = np.asarray(M, dtype=float)
    v = np.full(M.shape[0], 1.0 / M.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        w = v @ M
        lam = w.sum()
        if lam <= 0:
            raise EigenFailure("matrix annihilates the iterate")
        w = w / lam
        if np.abs(w - v).max() < tol:
            return float(lam), w
        v = w
    raise EigenFailure(f"power iteration did not converge in {max_iter} steps")


def hzmc_invariance_residual(T: TpcaKernel, h: Hzmc) -> float:
    """``max |D(y;z)U(z;y') - sum_x U(y;x) D(x;y') T(y,x,y';z)|``."""
    D, U, t = h.D, h.U, T.tensor
    lhs = np.einsum("yz,zw->ywz", D, U)
    rhs = np.einsum("yx,xw,yxwz->ywz", U, D, t)
    return float(np.abs(lhs - rhs).max())


def product_condition_residual(Ts: np.ndarray) -> float:
    """Largest violation of the product condition on a two-cell kernel
    ``Ts[x, x', y]``, relative to the size of the terms."""
    worst = 0.0
    k = Ts.shape[0]
    for x, xp, y in itertools.product(range(k), repeat=3):
        a = Ts[x, xp, y] * Ts[x, 0, 0] * Ts[0, xp, 0] * Ts[0, 0, y]
        b = Ts[0, 0, 0] * Ts[x, xp, 0] * Ts[0, xp, y] * Ts[x, 0, y]
        worst = max(worst, abs(a - b) / max(a, b, 1e-300))
    return worst


def du_eta(Ts: np.ndarray, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Candidate ``(D, U)`` of a two-cell kernel for a weight vector ``eta``."""
    k = Ts.shape[0]
    ratio = Ts / Ts[:, :, :1]  # T(x,x';y) / T(x,x';0)
    D = np.einsum("b,aby->ay", eta, ratio)
    D /= (eta[None, :] / Ts[:, :, 0]).sum(axis=1)[:, None]
    U = np.empty((k, k))
    for y in range(k):
        col = eta * ratio[0, :, y]
        U[y] = col / col.sum()
    return D, U


def gamma_chain(Ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """``(D^gamma, U^gamma)`` of a positive two-cell kernel ``Ts[x, x', y]``."""
    k = Ts.shape[0]
    nu = stationary(np.array([[Ts[x, x, y] for y in range(k)] for x in range(k)]))
    M = np.array([[nu[y] * Ts[y, y, 0] / Ts[y, x, 0] for y in range(k)] for x in range(k)])
    _, gamma = perron_left(M)
    return du_eta(Ts, gamma)


def _require_positive(T: TpcaKernel):
    if not T.positive_rate:
        raise ValueError("kernel must have positive rates")


def tilde_binary(T: TpcaKernel) -> np.ndarray:
    """``Ts[y, y', x]``: left eigenvectors of ``sum_u T(y',x,y;u) T(y,u,y';z)``."""
    t = T.tensor
    k = T.size
    out = np.empty((k, k, k))
    for y, yp in itertools.product(range(k), repeat=2):
        M = np.einsum("xu,uz->xz", t[yp, :, y, :], t[y, :, yp, :])
        out[y, yp] = stationary(M)
    return out


def tilde_equal(T: TpcaKernel) -> np.ndarray:
    """``Ts[y, y', x]``: left eigenvectors of ``(T(y,x,y';z))_{x,z}``."""
    k = T.size
    out = np.empty((k, k, k))
    for y, yp in itertools.product(range(k), repeat=2):
        out[y, yp] = stationary(T.tensor[y, :, yp, :])
    return out


def solve_hzmc_binary(T: TpcaKernel) -> Optional[Hzmc]:
    """Invariant zigzag Markov chain of a positive binary kernel, if any."""
    _require_positive(T)
    if T.size != 2:
        raise ValueError("binary alphabet required")
    Ts = tilde_binary(T)
    if product_condition_residual(Ts) > SOLVE_TOL:
        return None
    D, U = gamma_chain(Ts)
    h = Hzmc.from_matrices(D, U)
    if hzmc_invariance_residual(T, h) > SOLVE_TOL:
        return None
    return h


def solve_hzmc_equal_du(T: TpcaKernel) -> Optional[Hzmc]:
    """Invariant zigzag chain with ``D = U`` of a positive kernel, if any."""
    _require_positive(T)
    Ts = tilde_equal(T)
    if product_condition_residual(Ts) > SOLVE_TOL:
        return None
    D, U = gamma_chain(Ts)
    if np.abs(D @ U - U @ D).max() > SOLVE_TOL or np.abs(D - U).max() > SOLVE_TOL:
        return None
    h = Hzmc.from_matrices(D, D)
    if hzmc_invariance_residual(T, h) > SOLVE_TOL:
        return None
    return h


def a6_hzmc(q) -> Hzmc:
    """``D = U`` with ``D(i; i+1) = q`` and ``D(i; i-1) = 1 - q`` (mod 3)."""
    q = float(q)
    D = np.zeros((3, 3))
    for i in range(3):
        D[i, (i + 1) % 3] = q
        D[i, (i - 1) % 3] = 1 - q
    return Hzmc.from_matrices(D, D)


def uniform_hzmc(k: int = 2) -> Hzmc:
    D = np.full((k, k), 1.0 / k)
    return Hzmc.from_matrices(D, D)


def marginal_trace(T: TpcaKernel, x0, y0, steps: int, runs: int,
                   seed: int = 0) -> np.ndarray:
    """Fraction of runs with colour 1 in cell 0 after each step."""
    rng = np.random.default_rng(seed)
    x = np.tile(np.asarray(x0, dtype=np.int64), (runs, 1))
    y = np.tile(np.asarray(y0, dtype=np.int64), (runs, 1))
    out = np.empty(steps + 1)
    out[0] = (y[:, 0] == 1).mean()
    for s in range(steps):
        x, y = y, tpca_step_batch(x, y, T, rng)
        out[s + 1] = (y[:, 0] == 1).mean()
    return out
