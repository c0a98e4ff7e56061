"""Exhaustive enumeration of eight-vertex configurations on small lattices.

Two finite graphs are supported.

``kbar`` (triangle of size N): line 0 holds positions ``0..2N-1``; layer
``i`` has vertices on line ``i`` with upper pair ``(i+2j, i+2j+1)`` and the
same pair on line ``i+1`` below, ``j = 0..N-1-i``.

``k`` (square of size N): an ``N x N`` grid of vertices ``(i, j)``, column
``i`` and row ``j`` counted from the bottom. Horizontal edge ``h(i, j)`` is
left of vertex ``(i, j)`` and carries bit 1 when pointing right; vertical
edge ``v(i, j)`` is below vertex ``(i, j)`` and carries bit 1 when pointing
up. Turning the square by -pi/4 sends vertex ``(i, j)`` to line
``N-1+i-j`` with pair start ``1-N+i+j``; horizontal bits are complemented
under this map so that orientations agree with the line encoding.

Each vertex is described by its upper-left, upper-right, lower-left and
lower-right edges in line coordinates. Upper edges point into the vertex
when their state is 0, lower edges when it is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .dynamics import ProductMeasure, edge_law, exact_window_distribution
from .params import KernelParams, ModelError, Weights, to_rational

MAX_EDGES = 24

# (upper-left, upper-right) -> (lower-left, lower-right) in line states
VERTEX_TYPES = {
    ((0, 1), (1, 0)): 1,
    ((1, 0), (0, 1)): 2,
    ((0, 0), (0, 0)): 3,
    ((1, 1), (1, 1)): 4,
    ((0, 1), (0, 1)): 5,
    ((1, 0), (1, 0)): 6,
    ((0, 0), (1, 1)): 7,
    ((1, 1), (0, 0)): 8,
}
TYPE_WEIGHT = {1: "a", 2: "a", 3: "b", 4: "b", 5: "c", 6: "c", 7: "d", 8: "d"}


class SizeExceededError(ModelError):
    """Lattice too large to enumerate."""


class ZeroPartitionError(ModelError):
    """All configurations have zero weight."""


@dataclass(frozen=True)
class Edge:
    label: Tuple
    pos: int          # position on its line after the rotation
    line: int
    complement: bool  # line state is 1 - stored bit
    external: bool


@dataclass(frozen=True)
class FiniteLattice:
    kind: str
    n: int
    edges: Tuple[Edge, ...]
    vertices: Tuple[Tuple[int, int, int, int], ...]
    top: Tuple[int, ...]  # edge indices carrying fixed / half-product boundary values

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def index(self, label) -> int:
        for k, e in enumerate(self.edges):
            if e.label == label:
                return k
        raise KeyError(label)


def _finish(kind, n, labels, vertex_labels, top_labels):
    index = {lab: k for k, (lab, _, _, _) in enumerate(labels)}
    vertices = tuple(tuple(index[l] for l in v) for v in vertex_labels)
    uses = [0] * len(labels)
    for v in vertices:
        for k in v:
            uses[k] += 1
    edges = tuple(Edge(lab, pos, line, comp, uses[k] == 1)
                  for k, (lab, pos, line, comp) in enumerate(labels))
    return FiniteLattice(kind, n, edges, vertices, tuple(index[l] for l in top_labels))


def kbar_lattice(n: int) -> FiniteLattice:
    """Triangle with ``2n`` edges on line 0 and ``n(n+1)/2`` vertices."""
    if n < 1:
        raise ValueError("n must be positive")
    labels = [((x, 0), x, 0, False) for x in range(2 * n)]
    vertex_labels = []
    for i in range(n):
        for j in range(n - i):
            a = i + 2 * j
            for x in (a, a + 1):
                labels.append(((x, i + 1), x, i + 1, False))
            vertex_labels.append(((a, i), (a + 1, i), (a, i + 1), (a + 1, i + 1)))
    return _finish("kbar", n, labels, vertex_labels, [(x, 0) for x in range(2 * n)])


def k_lattice(n: int) -> FiniteLattice:
    """``n x n`` square grid with ``2n^2 + 2n`` edges."""
    if n < 1:
        raise ValueError("n must be positive")
    labels = []
    for i in range(n + 1):
        for j in range(n):
            labels.append((("h", i, j), 1 - n + i + j, n - 1 + i - j, True))
    for i in range(n):
        for j in range(n + 1):
            labels.append((("v", i, j), 1 - n + i + j, n + i - j, False))
    vertex_labels = [(("h", i, j), ("v", i, j + 1), ("v", i, j), ("h", i + 1, j))
                     for i in range(n) for j in range(n)]
    # edges entering the rotated square from above form a zigzag
    top = [("h", 0, j) for j in reversed(range(n))] + [("v", i, n) for i in range(n)]
    top.sort(key=lambda lab: labels[[l[0] for l in labels].index(lab)][1])
    return _finish("k", n, labels, vertex_labels, top)


def lattice(kind: str, n: int) -> FiniteLattice:
    if kind == "kbar":
        return kbar_lattice(n)
    if kind == "k":
        return k_lattice(n)
    raise ValueError(f"unknown lattice kind {kind!r}")


# ---------------------------------------------------------------- boundary

@dataclass(frozen=True)
class Free:
    pass


@dataclass(frozen=True)
class Fixed:
    """Prescribed line states on the lattice's top edges."""

    pattern: Tuple[int, ...]


@dataclass(frozen=True)
class HalfProduct:
    """Top edges i.i.d. Bernoulli(``q``), the rest Gibbs given the top."""

    q: object


def _weights(w) -> Tuple[Fraction, ...]:
    if isinstance(w, Weights):
        w = w.as_tuple()
    if isinstance(w, KernelParams):
        w = w.weights().as_tuple()
    out = tuple(to_rational(x) for x in w)
    if len(out) != 4 or any(x < 0 for x in out):
        raise ValueError("weights must be four nonnegative numbers")
    return out


def line_states(lat: FiniteLattice, config: Sequence[int]) -> Tuple[int, ...]:
    """Configuration bits converted to line states."""
    return tuple(b ^ e.complement for b, e in zip(config, lat.edges))


def vertex_type(ul: int, ur: int, ll: int, lr: int) -> Optional[int]:
    """Type 1..8 of a vertex from its line states, or None if inadmissible."""
    return VERTEX_TYPES.get(((ul, ur), (ll, lr)))


def _raw_configs(lat: FiniteLattice, fixed: Optional[Dict[int, int]] = None
                 ) -> Iterator[Tuple[int, ...]]:
    """Admissible bit assignments, pruned vertex by vertex."""
    if lat.n_edges > MAX_EDGES:
        raise SizeExceededError(f"at most {MAX_EDGES} edges can be enumerated")
    order: List[int] = []
    for v in lat.vertices:
        for k in v:
            if k not in order:
                order.append(k)
    for k in range(lat.n_edges):
        if k not in order:
            order.append(k)
    position = {k: idx for idx, k in enumerate(order)}
    closing: List[List[Tuple[int, int, int, int]]] = [[] for _ in order]
    for v in lat.vertices:
        closing[max(position[k] for k in v)].append(v)
    comp = [e.complement for e in lat.edges]
    bits = [0] * lat.n_edges
    fixed = fixed or {}

    def rec(idx):
        if idx == len(order):
            yield tuple(bits)
            return
        k = order[idx]
        choices = (fixed[k],) if k in fixed else (0, 1)
        for b in choices:
            bits[k] = b
            ok = True
            for v in closing[idx]:
                s = [bits[m] ^ comp[m] for m in v]
                if (s[0] + s[1] + s[2] + s[3]) % 2:
                    ok = False
                    break
            if ok:
                yield from rec(idx + 1)

    yield from rec(0)


def config_weight(lat: FiniteLattice, config: Sequence[int], w) -> Fraction:
    a, b, c, d = _weights(w)
    table = {"a": a, "b": b, "c": c, "d": d}
    s = line_states(lat, config)
    out = Fraction(1)
    for v in lat.vertices:
        kind = vertex_type(*(s[k] for k in v))
        if kind is None:
            return Fraction(0)
        out *= table[TYPE_WEIGHT[kind]]
    return out


def _top_fixed(lat: FiniteLattice, pattern: Sequence[int]) -> Dict[int, int]:
    if len(pattern) != len(lat.top):
        raise ValueError(f"pattern needs {len(lat.top)} entries")
    # pattern is in line states; store raw bits
    return {k: int(s) ^ lat.edges[k].complement for k, s in zip(lat.top, pattern)}


def enumerate_configs(lat: FiniteLattice, bc, w) -> Iterator[Tuple[Tuple[int, ...], Fraction]]:
    """Yield ``(configuration, weight)`` for admissible configurations.

    Under :class:`HalfProduct` the weight is already normalised:
    ``q^#1 (1-q)^#0 W / Z(top)`` with ``Z(top)`` the partition function
    given the top edges.
    """
    if isinstance(bc, Free):
        for cfg in _raw_configs(lat):
            yield cfg, config_weight(lat, cfg, w)
    elif isinstance(bc, Fixed):
        for cfg in _raw_configs(lat, _top_fixed(lat, bc.pattern)):
            yield cfg, config_weight(lat, cfg, w)
    elif isinstance(bc, HalfProduct):
        q = to_rational(bc.q)
        by_top: Dict[Tuple[int, ...], List[Tuple[Tuple[int, ...], Fraction]]] = {}
        for cfg in _raw_configs(lat):
            s = line_states(lat, cfg)
            key = tuple(s[k] for k in lat.top)
            by_top.setdefault(key, []).append((cfg, config_weight(lat, cfg, w)))
        for key, items in by_top.items():
            z = sum(wt for _, wt in items)
            ones = sum(key)
            mass = q ** ones * (1 - q) ** (len(key) - ones)
            for cfg, wt in items:
                yield cfg, (mass * wt / z if z else Fraction(0))
    else:
        raise TypeError(f"unknown boundary condition {bc!r}")


def partition_function(lat: FiniteLattice, bc, w) -> Fraction:
    return sum((wt for _, wt in enumerate_configs(lat, bc, w)), Fraction(0))


def closed_form_z(lat: FiniteLattice, bc, w) -> Optional[Fraction]:
    """Known closed form of the partition function, when there is one."""
    a, b, c, d = _weights(w)
    if a + c != b + d:
        return None
    n = lat.n
    vertices = n * (n + 1) // 2 if lat.kind == "kbar" else n * n
    if isinstance(bc, Free):
        return 2 ** (2 * n) * (a + c) ** vertices
    if isinstance(bc, Fixed) and lat.kind == "kbar":
        return (a + c) ** vertices
    if isinstance(bc, HalfProduct):
        return Fraction(1)
    return None


def gibbs_distribution(lat: FiniteLattice, bc, w) -> Dict[Tuple[int, ...], Fraction]:
    items = [(cfg, wt) for cfg, wt in enumerate_configs(lat, bc, w) if wt]
    z = sum(wt for _, wt in items)
    if not z:
        raise ZeroPartitionError("partition function vanishes")
    return {cfg: wt / z for cfg, wt in items}


# ---------------------------------------------------------------- restriction

def dynamics_law(lat: FiniteLattice, params: KernelParams) -> Dict[Tuple[int, ...], Fraction]:
    """Law of the lattice's edges under the stationary line dynamics.

    The dynamics start from the uniform product law on a cyclic window that
    contains the lattice's backward cone; the triangle uses ``2n`` edges and
    ``n`` steps, the square a window starting at ``-n`` with ``2n - 1`` steps.
    """
    n = lat.n
    if lat.kind == "kbar":
        width, steps, origin = 2 * n, n, 0
    else:
        steps = 2 * n - 1
        origin = -n if n % 2 == 0 else -n - 1
        width = max(e.pos for e in lat.edges) - origin + 1
        width += width % 2
    dist = exact_window_distribution(width, steps, ProductMeasure(Fraction(1, 2)),
                                     params.on("rational"))
    edges = [(e.pos, e.line) for e in lat.edges]
    law = edge_law(dist, edges, origin)
    comp = [e.complement for e in lat.edges]
    return {tuple(s ^ c for s, c in zip(key, comp)): w for key, w in law.items()}


def check_restriction_law(n: int, params: KernelParams) -> bool:
    """Exact equality, for both lattice shapes of size ``n``, between the
    free-boundary Gibbs law with weights ``(p, r, 1-p, 1-r)`` and the law of
    the same edges under the stationary dynamics."""
    if n > 2:
        raise SizeExceededError("n must be at most 2")
    q = params.on("rational")
    for kind in ("kbar", "k"):
        lat = lattice(kind, n)
        if gibbs_distribution(lat, Free(), q) != dynamics_law(lat, q):
            return False
    return True
