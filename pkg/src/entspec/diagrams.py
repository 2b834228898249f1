"""Wick-pairing diagrammatics for trace moments of the reduced density matrix.

A pairing of order ``n`` contracts each of the ``n`` amplitude vertices
``psi_k`` in ``Tr (psi psi^dagger)^n`` with one conjugate vertex
``psi^dagger_m``. The contractions glue the index lines into closed loops:
left (solid) loops carry a left sector label, right (dashed) loops a right
sector label, and every contraction ties one left loop to one right loop
through the constraint matrix.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import SizeError, ValidationError
from .space import ConstraintSpec, scaling_constants

MAX_ORDER_ALL = 8
MAX_ORDER_PLANAR = 12
MAX_ORDER_EXACT = 5


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


@dataclass(frozen=True)
class WickPairing:
    """``match[k] = m`` pairs vertex ``psi_k`` with ``psi^dagger_m``."""

    n: int
    match: tuple

    def __post_init__(self):
        if sorted(self.match) != list(range(self.n)):
            raise ValidationError(f"match {self.match} is not a permutation of range({self.n})")


@dataclass(frozen=True)
class LoopGraph:
    """Loop incidence structure of a pairing.

    Endpoint labels are ``(kind, k)`` with kind one of ``'PL'``/``'PR'``
    (left/right index of ``psi_k``) or ``'DL'``/``'DR'`` (left/right index
    of ``psi^dagger_k``). ``chords[k]`` lists the (left loop, right loop)
    joined by the contraction of ``psi_k``.
    """

    n: int
    left_loops: tuple
    right_loops: tuple
    chords: tuple
    chi: int

    @property
    def n_left(self) -> int:
        return len(self.left_loops)

    @property
    def n_right(self) -> int:
        return len(self.right_loops)

    @property
    def is_planar(self) -> bool:
        return self.chi == 1


def _check_order(n, limit):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise SizeError(f"order must be an integer, got {n!r}")
    if not 1 <= n <= limit:
        raise SizeError(f"order n={n} outside supported range [1, {limit}]")
    return int(n)


def _noncrossing(points):
    """Non-crossing perfect matchings of an ordered run of circle points."""
    if not points:
        yield ()
        return
    first, rest = points[0], points[1:]
    for j in range(0, len(rest), 2):
        inner, outer = rest[:j], rest[j + 1:]
        for a in _noncrossing(inner):
            for b in _noncrossing(outer):
                yield ((first, rest[j]),) + a + b


@lru_cache(maxsize=None)
def _planar_matches(n):
    # circle positions: 2k is psi_k, 2m+1 is psi^dagger_m
    out = []
    for pairs in _noncrossing(tuple(range(2 * n))):
        match = [0] * n
        for a, b in pairs:
            even, odd = (a, b) if a % 2 == 0 else (b, a)
            match[even // 2] = (odd - 1) // 2
        out.append(tuple(match))
    return tuple(out)


def enumerate_pairings(n: int, planar_only: bool = False) -> list:
    """All Wick pairings of order ``n``, or only the non-crossing ones."""
    n = _check_order(n, MAX_ORDER_PLANAR if planar_only else MAX_ORDER_ALL)
    if planar_only:
        return [WickPairing(n, m) for m in _planar_matches(n)]
    return [WickPairing(n, m) for m in itertools.permutations(range(n))]


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _groups(uf, items):
    roots = {}
    for x in items:
        roots.setdefault(uf.find(x), []).append(x)
    loops = tuple(tuple(v) for v in roots.values())
    index = {x: i for i, loop in enumerate(loops) for x in loop}
    return loops, index


def loop_structure(p: WickPairing) -> LoopGraph:
    n = p.n
    left = [("PL", k) for k in range(n)] + [("DL", k) for k in range(n)]
    right = [("PR", k) for k in range(n)] + [("DR", k) for k in range(n)]
    uf = _UnionFind(left + right)
    for k in range(n):
        # boundary lines of the trace: psi^dagger_{k-1} -> psi_k carries i_k,
        # psi_k -> psi^dagger_k carries alpha_k
        uf.union(("DL", (k - 1) % n), ("PL", k))
        uf.union(("PR", k), ("DR", k))
        m = p.match[k]
        uf.union(("PL", k), ("DL", m))
        uf.union(("PR", k), ("DR", m))
    left_loops, li = _groups(uf, left)
    right_loops, ri = _groups(uf, right)
    chords = tuple((li[("PL", k)], ri[("PR", k)]) for k in range(n))
    chi = len(left_loops) + len(right_loops) - n
    return LoopGraph(n, left_loops, right_loops, chords, chi)


def _weights(spec_or_weights):
    if isinstance(spec_or_weights, ConstraintSpec):
        s = spec_or_weights
        return s.C.astype(float), s.d, s.d_prime
    C, d, dp = spec_or_weights
    return np.asarray(C, dtype=float), np.asarray(d, dtype=float), np.asarray(dp, dtype=float)


def _sector_sum_brute(g, C, d, dp):
    a, b = g.n_left, g.n_right
    nl, nr = d.size, dp.size
    lab_l = np.array(list(itertools.product(range(nl), repeat=a)), dtype=np.intp).reshape(-1, a)
    lab_r = np.array(list(itertools.product(range(nr), repeat=b)), dtype=np.intp).reshape(-1, b)
    wl = np.prod(d[lab_l], axis=1)
    wr = np.prod(dp[lab_r], axis=1)
    allowed = np.ones((lab_l.shape[0], lab_r.shape[0]))
    for li, ri in g.chords:
        allowed *= C[lab_l[:, li][:, None], lab_r[:, ri][None, :]]
    return float(wl @ allowed @ wr)


def _sector_sum_tree(g, C, d, dp):
    # nodes: ('L', i) and ('R', j); chords are tree edges when chi == 1
    adj = {("L", i): [] for i in range(g.n_left)}
    adj.update({("R", j): [] for j in range(g.n_right)})
    for li, ri in g.chords:
        adj[("L", li)].append(("R", ri))
        adj[("R", ri)].append(("L", li))
    root = ("L", 0)
    order, parent, stack = [], {root: None}, [root]
    while stack:
        u = stack.pop()
        order.append(u)
        for v in adj[u]:
            if v not in parent:
                parent[v] = u
                stack.append(v)
    msg = {}
    for u in reversed(order):
        vec = (d if u[0] == "L" else dp).copy()
        for v in adj[u]:
            if parent.get(v) == u:
                # C maps right-sector messages onto left sectors and vice versa
                vec = vec * (C @ msg[v] if u[0] == "L" else C.T @ msg[v])
        msg[u] = vec
    return float(msg[root].sum())


def sector_sum(g: LoopGraph, spec, method: str = "auto") -> float:
    """Constrained sum over sector labels of all loops of ``g``.

    Each left loop labelled ``l`` contributes ``d[l]``, each right loop
    labelled ``r`` contributes ``d_prime[r]``, and every chord requires
    ``C[l, r] == 1``.

    Parameters
    ----------
    g : LoopGraph
    spec : ConstraintSpec or tuple (C, d, d_prime)
        Weights may be any positive reals, e.g. integer sector dimensions.
    method : {'auto', 'brute', 'tree'}
        ``'brute'`` enumerates every label assignment. ``'tree'`` uses
        message passing and requires a planar graph (the loop graph is then
        a tree). ``'auto'`` picks ``'tree'`` when possible.
    """
    C, d, dp = _weights(spec)
    if method == "auto":
        method = "tree" if g.chi == 1 else "brute"
    if method == "tree":
        if g.chi != 1:
            raise ValidationError("tree contraction needs a planar loop graph")
        return _sector_sum_tree(g, C, d, dp)
    if method == "brute":
        return _sector_sum_brute(g, C, d, dp)
    raise ValidationError(f"unknown method {method!r}")


@lru_cache(maxsize=None)
def _planar_graphs(n):
    return tuple(loop_structure(p) for p in enumerate_pairings(n, planar_only=True))


@lru_cache(maxsize=None)
def _all_graphs(n):
    return tuple(loop_structure(p) for p in enumerate_pairings(n))


def planar_moment(spec: ConstraintSpec, n: int) -> float:
    """Leading large-N trace moment ``lim E[Tr rho^n] / N``."""
    n = _check_order(n, MAX_ORDER_PLANAR)
    C, d, dp = _weights(spec)
    return math.fsum(_sector_sum_tree(g, C, d, dp) for g in _planar_graphs(n))


def finite_moment_exact(dims, C, N, n: int, by_chi: bool = False):
    """Exact ``E[Tr rho^n]`` at finite sector dimensions.

    Every one of the ``n!`` complex-Gaussian Wick pairings is summed with
    the loop weights replaced by the sector dimensions and a factor
    ``1/N`` per contraction.

    Parameters
    ----------
    dims : tuple (D, D_prime)
        Left and right sector dimensions.
    C : array_like
        Constraint matrix.
    N : float
        Reference scale; the entry variance is ``1/N``.
    n : int
        Moment order, at most 5.
    by_chi : bool
        If true, return a dict mapping Euler characteristic to its partial
        sum instead of the total.
    """
    n = _check_order(n, MAX_ORDER_EXACT)
    D, Dp = dims
    weights = _weights((C, D, Dp))
    scale = float(N) ** (-n)
    parts = {}
    for g in _all_graphs(n):
        parts.setdefault(g.chi, []).append(sector_sum(g, weights, method="brute"))
    parts = {chi: math.fsum(v) * scale for chi, v in sorted(parts.items(), reverse=True)}
    if by_chi:
        return parts
    return math.fsum(parts.values())


def normalized_moment(spec: ConstraintSpec, n: int) -> float:
    """Moment ``mu_n`` of the eigenvalue density in the unit-mean ``epsilon`` scale."""
    if n == 0:
        return 1.0
    sc = scaling_constants(spec)
    return sc.eps_scale ** n * planar_moment(spec, n) / sc.sum_d
