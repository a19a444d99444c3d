"""Permutation-group machinery on {0, ..., n-1}.

Exact group orders via a deterministic Schreier-Sims stabilizer chain,
transitivity, minimal blocks of imprimitivity by the union-find
congruence closure, the overlap-union closure of a point set under the
group action (with a replayable witness chain of generator words), and
the full-tree-automorphism test for groups acting on the leaves of a
d-ary depth-N tree.

Permutations are tuples p with p[i] the image of i.  ``mul(a, b)``
applies a first, then b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BudgetError, InvalidInputError

CHAIN_STATE_CAP = 100_000


def check_perm(p, degree=None):
    p = tuple(int(x) for x in p)
    n = len(p) if degree is None else degree
    if len(p) != n or sorted(p) != list(range(n)):
        raise InvalidInputError("not a permutation of 0..n-1")
    return p


def identity(n):
    return tuple(range(n))


def mul(a, b):
    """Apply a, then b."""
    return tuple(b[x] for x in a)


def inverse(p):
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def cycle_type(p):
    """Sorted cycle lengths, fixed points included."""
    seen = [False] * len(p)
    out = []
    for i in range(len(p)):
        if seen[i]:
            continue
        ln = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = p[j]
            ln += 1
        out.append(ln)
    return tuple(sorted(out))


def perm_from_cycles(n, *cycles):
    p = list(range(n))
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:]):
            p[a] = b
        p[cyc[-1]] = cyc[0]
    return tuple(p)


class PermGroup:
    """Group generated by a list of permutations of {0..n-1}.

    The stabilizer chain is built lazily on first use and reused for
    order and membership queries; construction is deterministic.
    """

    def __init__(self, degree, generators):
        self.degree = int(degree)
        self.generators = [check_perm(g, self.degree) for g in generators]
        self._chain = None

    # -- basic queries ------------------------------------------------

    def orbit(self, point):
        seen = {point}
        queue = [point]
        while queue:
            a = queue.pop()
            for g in self.generators:
                b = g[a]
                if b not in seen:
                    seen.add(b)
                    queue.append(b)
        return seen

    def is_transitive(self):
        if self.degree == 0:
            return True
        return len(self.orbit(0)) == self.degree

    # -- stabilizer chain ---------------------------------------------

    def _build_chain(self):
        """Deterministic Schreier-Sims.

        Each level holds a base point and the transversal of its orbit
        under the group generated by every strong generator assigned to
        this level or deeper (those are exactly the ones fixing all
        earlier base points).  Residues of Schreier generators are
        inserted until every one sifts to the identity; each insertion
        strictly enlarges the group the chain describes, so the loop
        terminates.
        """
        n = self.degree
        ident = identity(n)
        levels = []  # list of dicts: {base, gens}; transversal derived

        def gens_for(j):
            return [g for lvl in levels[j:] for g in lvl["gens"]]

        def rebuild(j):
            lvl = levels[j]
            gens = gens_for(j)
            trans = {lvl["base"]: ident}
            queue = [lvl["base"]]
            while queue:
                a = queue.pop(0)
                for g in gens:
                    b = g[a]
                    if b not in trans:
                        trans[b] = mul(trans[a], g)
                        queue.append(b)
            lvl["transversal"] = trans

        def sift(p, start):
            j = start
            while j < len(levels):
                lvl = levels[j]
                rep = lvl["transversal"].get(p[lvl["base"]])
                if rep is None:
                    return p, j
                p = mul(p, inverse(rep))
                j += 1
            return p, j

        def insert(j, p):
            if j == len(levels):
                base = min(i for i in range(n) if p[i] != i)
                levels.append({"base": base, "gens": [], "transversal": {}})
            levels[j]["gens"].append(p)
            for k in range(j + 1):
                rebuild(k)

        for g in self.generators:
            if g == ident:
                continue
            if not levels:
                insert(0, g)
                continue
            r, j = sift(g, 0)
            if r != ident:
                insert(j, r)

        done = False
        while not done:
            done = True
            for j in range(len(levels)):
                lvl = levels[j]
                gens = gens_for(j)
                for a in sorted(lvl["transversal"]):
                    ua = lvl["transversal"][a]
                    for g in gens:
                        s = mul(mul(ua, g), inverse(lvl["transversal"][g[a]]))
                        if s == ident:
                            continue
                        r, k = sift(s, j + 1)
                        if r != ident:
                            insert(k, r)
                            done = False
                            break
                    if not done:
                        break
                if not done:
                    break
        self._chain = levels

    @property
    def chain(self):
        if self._chain is None:
            self._build_chain()
        return self._chain

    def order(self):
        """Exact order as an arbitrary-precision integer."""
        out = 1
        for lvl in self.chain:
            out *= len(lvl["transversal"])
        return out

    def __contains__(self, p):
        p = check_perm(p, self.degree)
        for lvl in self.chain:
            img = p[lvl["base"]]
            rep = lvl["transversal"].get(img)
            if rep is None:
                return False
            p = mul(p, inverse(rep))
        return p == identity(self.degree)

    # -- element enumeration ------------------------------------------

    def elements_bfs(self, cap=CHAIN_STATE_CAP):
        """All elements as (perm, word) in shortlex word order.

        Words are tuples of generator indices applied left to right.
        Raises BudgetError when the group is larger than ``cap``.
        """
        n = self.degree
        start = identity(n)
        seen = {start: ()}
        order = [(start, ())]
        frontier = [start]
        while frontier:
            new_frontier = []
            for p in frontier:
                w = seen[p]
                for gi, g in enumerate(self.generators):
                    q = mul(p, g)
                    if q not in seen:
                        seen[q] = w + (gi,)
                        order.append((q, w + (gi,)))
                        new_frontier.append(q)
                        if len(order) > cap:
                            raise BudgetError(
                                f"group enumeration exceeded cap {cap}"
                            )
            frontier = new_frontier
        return order


# -- blocks of imprimitivity ------------------------------------------


@dataclass
class Block:
    """A block of imprimitivity and the system it generates.

    ``points`` is the block through the seed; ``partition`` covers the
    orbit of the seed under the group.
    """

    points: tuple
    partition: tuple

    def verify(self, generators) -> bool:
        blocks = [frozenset(b) for b in self.partition]
        domain = frozenset().union(*blocks) if blocks else frozenset()
        for g in generators:
            for b in blocks:
                img = frozenset(g[x] for x in b)
                if img & domain and img not in blocks:
                    return False
        return True


class _DSU:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return None
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return ra


def minimal_block(G: PermGroup, seed) -> Block:
    """Smallest block of imprimitivity containing the seed set.

    Classical union-find congruence closure: force the seed into one
    class, then propagate "same class" through every generator until
    stable.  When G is intransitive the system is computed within the
    orbit of the seed.
    """
    seed = sorted(set(int(s) for s in seed))
    if not seed:
        raise InvalidInputError("seed must be nonempty")
    n = G.degree
    dsu = _DSU(n)
    queue = []
    for s in seed[1:]:
        if dsu.union(seed[0], s) is not None:
            queue.append((seed[0], s))
    while queue:
        a, b = queue.pop()
        for g in G.generators:
            ga, gb = g[a], g[b]
            if dsu.find(ga) != dsu.find(gb):
                dsu.union(ga, gb)
                queue.append((ga, gb))
    domain = set()
    for s in seed:
        domain |= G.orbit(s)
    classes = {}
    for x in range(n):
        if x in domain or dsu.find(x) == dsu.find(seed[0]):
            classes.setdefault(dsu.find(x), []).append(x)
    partition = tuple(tuple(c) for c in sorted(classes.values()))
    points = tuple(classes[dsu.find(seed[0])])
    return Block(points=points, partition=partition)


# -- overlap-union closure ------------------------------------------------


@dataclass
class ClosureResult:
    """Closure of a seed set under overlap-union by group elements.

    ``witness`` lists generator words; replaying them from the seed
    reproduces ``points``: each word's element maps the current set to
    one that overlaps it without being contained, and the union is
    taken.  ``complete`` is True when the whole group was enumerated, so
    the result is the exact fixpoint.
    """

    points: tuple
    witness: list
    complete: bool


def chain_closure(G: PermGroup, s0, cap=CHAIN_STATE_CAP) -> ClosureResult:
    """Grow s0 by repeatedly unioning overlapping images under G.

    Elements are enumerated breadth-first as words in the generators
    (shortlex), so witness chains are reproducible; a greedy scan is
    repeated until no enumerated element both meets and escapes the
    current set.  If the group exceeds ``cap``, the scan runs over the
    enumerated prefix and the result is flagged incomplete.
    """
    s0 = sorted(set(int(s) for s in s0))
    if not s0:
        raise InvalidInputError("s0 must be nonempty")
    try:
        elements = G.elements_bfs(cap)
        complete = True
    except BudgetError:
        elements = _bfs_prefix(G, cap)
        complete = False

    n = G.degree
    mat = np.array([p for p, _ in elements], dtype=np.int32)
    words = [w for _, w in elements]

    in_t = np.zeros(n, dtype=bool)
    in_t[s0] = True
    witness = []
    changed = True
    while changed:
        changed = False
        idx = np.flatnonzero(in_t)
        images = mat[:, idx]             # m x |T|
        hits = in_t[images]               # membership of each image point
        applicable = hits.any(axis=1) & ~hits.all(axis=1)
        cand = np.flatnonzero(applicable)
        if cand.size:
            k = int(cand[0])              # shortlex-first witness
            in_t[mat[k, idx]] = True
            witness.append(words[k])
            changed = True
    points = tuple(int(x) for x in np.flatnonzero(in_t))
    return ClosureResult(points=points, witness=witness, complete=complete)


def _bfs_prefix(G, cap):
    n = G.degree
    start = identity(n)
    seen = {start: ()}
    order = [(start, ())]
    frontier = [start]
    while frontier and len(order) <= cap:
        new_frontier = []
        for p in frontier:
            w = seen[p]
            for gi, g in enumerate(G.generators):
                q = mul(p, g)
                if q not in seen:
                    seen[q] = w + (gi,)
                    order.append((q, w + (gi,)))
                    new_frontier.append(q)
                    if len(order) > cap:
                        return order
        frontier = new_frontier
    return order


def apply_word(G: PermGroup, word):
    p = identity(G.degree)
    for gi in word:
        p = mul(p, G.generators[gi])
    return p


def replay_closure(G: PermGroup, s0, witness):
    """Re-apply a witness chain, checking the overlap conditions exactly.

    Returns the final set; raises InvalidInputError if any step fails
    its side conditions (image must meet the set and add new points).
    """
    t = set(int(s) for s in s0)
    for word in witness:
        p = apply_word(G, word)
        img = {p[x] for x in t}
        if not (img & t):
            raise InvalidInputError("witness step image is disjoint from the set")
        if img <= t:
            raise InvalidInputError("witness step adds no points")
        t |= img
    return tuple(sorted(t))


# -- tree automorphisms ----------------------------------------------------


def tree_ancestor(idx, d, levels_up):
    return idx // d**levels_up


def is_tree_compatible(p, d, N) -> bool:
    """Does p respect the canonical d-ary tree on 0..d^N-1?

    Leaf j sits below the level-k node j // d**(N-k); compatibility
    means siblings map to siblings at every level.
    """
    if len(p) != d**N:
        return False
    arr = np.asarray(p, dtype=np.int64)
    for k in range(1, N):
        block = d ** (N - k)
        parents = arr // block
        by_node = parents.reshape(d**k, block)
        if not (by_node == by_node[:, :1]).all():
            return False
    return True


def full_tree_aut_order(d, N) -> int:
    """|Aut(T)| for the d-ary depth-N tree: (d!)**((d^N - 1)/(d - 1))."""
    return math.factorial(d) ** ((d**N - 1) // (d - 1))


def is_full_tree_aut(G: PermGroup, d, N) -> bool:
    """Whether G is the whole automorphism group of the d-ary depth-N tree.

    Generators must be tree-compatible; the decision is exact integer
    equality of the stabilizer-chain order with (d!)^((d^N-1)/(d-1)).
    """
    if G.degree != d**N:
        raise InvalidInputError(f"degree {G.degree} does not match {d}^{N}")
    for g in G.generators:
        if not is_tree_compatible(g, d, N):
            raise InvalidInputError("generator is not tree-compatible")
    return G.order() == full_tree_aut_order(d, N)
