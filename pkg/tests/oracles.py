"""Independent brute-force oracles used by the tests.

Deliberately simple and separate from the package implementations: set
arithmetic and exhaustive enumeration only.
"""

import itertools
import math


def compose(a, b):
    """Apply a, then b (same convention as the package)."""
    return tuple(b[x] for x in a)


def enumerate_group(generators, cap=200_000):
    """All elements of <generators> by closure under multiplication."""
    n = len(generators[0])
    ident = tuple(range(n))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in generators:
                q = compose(p, g)
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
                    if len(seen) > cap:
                        raise RuntimeError("oracle enumeration blew the cap")
        frontier = nxt
    return seen


def is_block(B, elements):
    B = frozenset(B)
    for g in elements:
        img = frozenset(g[x] for x in B)
        if img != B and img & B:
            return False
    return True


def brute_minimal_block(generators, seed):
    """Smallest block containing the seed, by subset enumeration.

    Only sizes dividing the orbit size are candidates (transitive case);
    for safety every superset of the seed inside the orbit is checked.
    """
    elements = enumerate_group(generators)
    n = len(generators[0])
    orbit = set(seed)
    frontier = list(seed)
    while frontier:
        a = frontier.pop()
        for g in generators:
            if g[a] not in orbit:
                orbit.add(g[a])
                frontier.append(g[a])
    rest = sorted(orbit - set(seed))
    best = None
    for extra in range(len(rest) + 1):
        if best is not None:
            break
        for combo in itertools.combinations(rest, extra):
            B = tuple(sorted(set(seed) | set(combo)))
            if is_block(B, elements):
                best = B
                break
    return best


def brute_chain_closure(generators, s0):
    """Fixpoint of overlap-union over every group element."""
    elements = sorted(enumerate_group(generators))
    t = set(s0)
    changed = True
    while changed:
        changed = False
        for g in elements:
            img = {g[x] for x in t}
            if img & t and not img <= t:
                t |= img
                changed = True
    return tuple(sorted(t))


def enumerate_tree_automorphisms(d, N):
    """All automorphisms of the d-ary depth-N tree, acting on the leaves."""
    if N == 0:
        return [(0,)[:1]]

    def build(level):
        if level == 0:
            return [tuple([0])]
        subs = build(level - 1)
        m = d ** (level - 1)
        out = []
        for pi in itertools.permutations(range(d)):
            for chosen in itertools.product(subs, repeat=d):
                p = [0] * (d * m)
                for child in range(d):
                    for x in range(m):
                        p[child * m + x] = pi[child] * m + chosen[child][x]
                out.append(tuple(p))
        return out

    return build(N)


def full_tree_aut_order(d, N):
    return math.factorial(d) ** ((d**N - 1) // (d - 1))
