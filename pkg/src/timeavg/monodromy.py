"""Numerical monodromy of iterated polynomials.

Fundamental-group loops around the critical values of f^N (lollipop
stems plus small circles, and a loop at infinity), lifted through the
inverse branches of f^N by Euler-predictor / Newton-corrector
continuation of every fiber point at once.  The result of a lift is a
permutation of the level-N preimage tree that must pass exact
tree-compatibility checks; any lost track aborts loudly because these
permutations feed certificates.

Conventions: all loops wind counterclockwise (+1); permutations compose
left to right (mul(a, b) applies a first); the preimage tree is labeled
canonically so that the ancestor of leaf j at level k is
j // d**(N - k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import permgroup
from .dynamics import escape_radius, green_value
from .exceptions import InvalidInputError, LiftError, NumericalError, RoutingError
from .polycore import ComplexPoly, critical_data, fiber

# Step control for lifts.
INITIAL_STEP_DIVISIONS = 512
MIN_STEP_FRACTION = 1e-8
NEWTON_MAX = 8
NEWTON_SLOW = 4  # more iterations than this halves the step
CIRCLE_POINTS = 24


@dataclass
class LoopPath:
    """A closed polyline in the plane, based at ``base``.

    kind is "lollipop" (stem out to a small circle around ``center``),
    "infinity" (radial stem to a big circle), or "composite".
    ``clearance`` is the measured minimum distance of the polyline to
    the critical-value set it was built against.
    """

    base: complex
    waypoints: np.ndarray  # closed: waypoints[0] == waypoints[-1]
    kind: str
    center: complex | None = None
    clearance: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.waypoints, dtype=complex)
        if w.size < 3 or abs(w[0] - w[-1]) > 1e-12 * (1 + abs(w[0])):
            raise InvalidInputError("loop must be a closed polyline")
        if abs(w[0] - self.base) > 1e-12 * (1 + abs(self.base)):
            raise InvalidInputError("loop must start at its base point")
        self.waypoints = w

    def arclength(self) -> float:
        return float(np.abs(np.diff(self.waypoints)).sum())

    def winding_number(self, v) -> int:
        rel = self.waypoints - complex(v)
        total = float(np.angle(rel[1:] / rel[:-1]).sum())
        w = total / (2 * np.pi)
        if abs(w - round(w)) > 1e-6:
            raise NumericalError(f"non-integer winding {w} around {v}")
        return int(round(w))

    def min_distance_to(self, points) -> float:
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        best = np.inf
        a = self.waypoints[:-1]
        b = self.waypoints[1:]
        for v in pts:
            best = min(best, float(_segments_point_distance(a, b, v).min()))
        return best

    def perturbed(self, rng, amplitude: float) -> "LoopPath":
        """Jiggle the interior waypoints; endpoints stay at the base."""
        w = self.waypoints.copy()
        noise = amplitude * (
            rng.standard_normal(w.size - 2) + 1j * rng.standard_normal(w.size - 2)
        ) / np.sqrt(2)
        w[1:-1] += noise
        return LoopPath(
            base=self.base, waypoints=w, kind=self.kind,
            center=self.center, clearance=self.clearance,
        )


def _segments_point_distance(a, b, v):
    """Distance from point v to each segment [a_i, b_i]."""
    ab = b - a
    denom = np.abs(ab) ** 2
    t = np.where(denom > 0, ((v - a) * np.conj(ab)).real / np.where(denom > 0, denom, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t * ab
    return np.abs(v - proj)


def _route(p: complex, q: complex, obstacles, radii, max_passes: int = 6):
    """Polyline from p to q detouring around each obstacle's disk.

    When a segment dips inside an obstacle's clearance disk, a waypoint
    is inserted at the closest approach pushed radially away from the
    obstacle; the perpendicular (+90 degrees) side is chosen when the
    segment runs straight through.  Deterministic.
    """
    path = [complex(p), complex(q)]
    for _ in range(max_passes):
        clean = True
        for obs, rad in zip(obstacles, radii):
            k = 0
            while k < len(path) - 1:
                a, b = path[k], path[k + 1]
                d = float(_segments_point_distance(
                    np.array([a]), np.array([b]), obs)[0])
                if d >= rad:
                    k += 1
                    continue
                ab = b - a
                denom = abs(ab) ** 2
                t = ((obs - a) * np.conj(ab)).real / denom if denom > 0 else 0.0
                t = min(max(t, 0.0), 1.0)
                near = a + t * ab
                away = near - obs
                if abs(away) < 1e-12 * (1 + abs(obs)):
                    away = 1j * ab / abs(ab)  # straight through: go +90 deg
                else:
                    away = away / abs(away)
                detour = obs + away * (1.3 * rad)
                if t <= 1e-9 or t >= 1 - 1e-9:
                    # endpoint sits inside the disk; cannot reroute it
                    raise RoutingError(
                        f"endpoint too close to obstacle at {obs}; move the base point"
                    )
                path.insert(k + 1, detour)
                clean = False
                k += 2
        if clean:
            return path
    raise RoutingError("could not route stem clear of the critical values")


def _circle(center: complex, radius: float, start_angle: float, n: int):
    ang = start_angle + 2 * np.pi * np.arange(n + 1) / n  # counterclockwise
    return center + radius * np.exp(1j * ang)


def lollipop_generators(
    f: ComplexPoly,
    N: int,
    p,
    n_circle: int = CIRCLE_POINTS,
) -> list:
    """One counterclockwise lollipop per distinct critical value of f^N.

    Stems run along rays from the base point with detours so that no
    stem passes within clearance of another critical value; loops are
    returned in the canonical planar order (counterclockwise angle of
    the critical value as seen from p).  Each loop is verified to wind
    exactly once around its own value and zero times around the rest.
    """
    p = complex(p)
    cd = critical_data(f, N)
    values = cd.critical_values
    if np.abs(values - p).min() < 1e-9 * (1 + abs(p)):
        raise InvalidInputError("base point coincides with a critical value")

    # isolation radius of each value: distance to nearest other value or p
    iso = np.empty(values.size)
    for i, v in enumerate(values):
        others = np.delete(values, i)
        dmin = np.abs(others - v).min() if others.size else np.inf
        iso[i] = min(dmin, abs(v - p))

    order = np.argsort(np.mod(np.angle(values - p), 2 * np.pi), kind="stable")
    loops = []
    for i in order:
        v = complex(values[i])
        r = 0.3 * iso[i]
        others = np.delete(values, i)
        radii = [0.45 * iso[j] for j in range(values.size) if j != i]
        # stem from p to the circle entry point nearest p along the ray
        entry = v + r * (p - v) / abs(p - v)
        stem = _route(p, entry, others, radii)
        circ = _circle(v, r, float(np.angle(entry - v)), n_circle)
        waypoints = np.concatenate(
            [np.array(stem), circ[1:], np.array(stem[::-1][1:])]
        )
        loop = LoopPath(base=p, waypoints=waypoints, kind="lollipop", center=v)
        for j, u in enumerate(values):
            expect = 1 if j == i else 0
            got = loop.winding_number(u)
            if got != expect:
                raise RoutingError(
                    f"lollipop around {v} winds {got} (expected {expect}) around {u}"
                )
        loop.clearance = loop.min_distance_to(values)
        loops.append(loop)
    return loops


def infinity_loop(f: ComplexPoly, N: int, p, n_circle: int = 64) -> LoopPath:
    """Radial stem out beyond every critical value, one full circle, back.

    The circle radius is chosen so its Green level exceeds d^N times the
    largest Green value of a critical point: the preimage of the circle
    under f^N is then a single connected curve, which is what makes the
    lifted permutation one full cycle.
    """
    p = complex(p)
    d = f.degree
    cd = critical_data(f, N)
    values = cd.critical_values
    g_crit = 0.0
    for c in cd.critical_points:
        g_crit = max(g_crit, green_value(f, c).value)
    lead = abs(f.coeffs[-1])
    needed = d**N * g_crit + math.log(2.0)
    R = max(
        escape_radius(f) * 1.5,
        2.0 * float(np.abs(values).max(initial=0.0)) + 1.0,
        2.0 * abs(p) + 1.0,
        math.exp(needed - math.log(lead) / (d - 1)),
    )
    direction = p / abs(p) if abs(p) > 1e-12 else complex(math.cos(0.37), math.sin(0.37))
    exit_point = R * direction
    radii = [0.45 * iso for iso in _isolation_radii(values, p)]
    stem = _route(p, exit_point, values, radii)
    circ = _circle(0.0, R, float(np.angle(exit_point)), n_circle)
    # recenter circle on the exact exit point magnitude
    circ = circ * (abs(exit_point) / R)
    waypoints = np.concatenate([np.array(stem), circ[1:], np.array(stem[::-1][1:])])
    loop = LoopPath(base=p, waypoints=waypoints, kind="infinity")
    loop.clearance = loop.min_distance_to(values)
    return loop


def _isolation_radii(values, p):
    out = []
    for i, v in enumerate(values):
        others = np.delete(values, i)
        dmin = np.abs(others - v).min() if others.size else np.inf
        out.append(min(dmin, abs(v - p)))
    return out


class PreimageTree:
    """The full tree of preimages of a base point up to level N.

    Level k holds the d^k solutions of f^k(w) = p in canonical child
    order: the children of level-k node i occupy slots i*d .. i*d+d-1 of
    level k+1, so parent links are integer division and every
    TreePermutation check is exact index arithmetic.
    """

    def __init__(self, f: ComplexPoly, p, N: int):
        fb = fiber(f, p, N, require_simple=True)
        self.f = f
        self.base = complex(p)
        self.N = int(N)
        self.d = f.degree
        self.levels = fb.levels
        self.residual = fb.residual
        self.separations = [
            _level_separation(lvl) for lvl in fb.levels
        ]

    @property
    def points(self):
        return self.levels[self.N]

    def separation(self, level=None) -> float:
        return self.separations[self.N if level is None else level]

    def ancestor(self, idx: int, at_level: int, from_level: int | None = None) -> int:
        lvl = self.N if from_level is None else from_level
        return idx // self.d ** (lvl - at_level)


def _level_separation(points) -> float:
    if points.size < 2:
        return np.inf
    diff = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(diff, np.inf)
    return float(diff.min())


@dataclass
class TreePermutation:
    """A permutation of the level-``level`` fiber respecting the tree."""

    level: int
    d: int
    perm: tuple

    def __post_init__(self):
        self.perm = permgroup.check_perm(self.perm, self.d**self.level)
        if not permgroup.is_tree_compatible(self.perm, self.d, self.level):
            raise LiftError("lifted permutation is not tree-compatible")

    def __mul__(self, other: "TreePermutation") -> "TreePermutation":
        """self then other."""
        if (self.level, self.d) != (other.level, other.d):
            raise InvalidInputError("level mismatch")
        return TreePermutation(self.level, self.d, permgroup.mul(self.perm, other.perm))

    def inverse(self) -> "TreePermutation":
        return TreePermutation(self.level, self.d, permgroup.inverse(self.perm))

    def restrict(self, level: int) -> "TreePermutation":
        """The induced permutation on an ancestor level."""
        if not 0 <= level <= self.level:
            raise InvalidInputError("bad restriction level")
        block = self.d ** (self.level - level)
        out = [0] * (self.d**level)
        for node in range(self.d**level):
            out[node] = self.perm[node * block] // block
        return TreePermutation(level, self.d, tuple(out))

    def cycle_type(self) -> tuple:
        return permgroup.cycle_type(self.perm)

    def is_identity(self) -> bool:
        return self.perm == permgroup.identity(len(self.perm))


def lift_loop(
    f: ComplexPoly,
    N: int,
    tree: PreimageTree,
    loop: LoopPath,
    initial_divisions: int = INITIAL_STEP_DIVISIONS,
) -> TreePermutation:
    """Lift a loop through the inverse branches of f^N.

    Every fiber point is continued along the loop at once with a shared
    adaptive step: Euler prediction through the derivative chain, then
    Newton correction onto f^N(w) = gamma(s).  The step halves whenever
    Newton runs long or any point moves more than a third of the fiber
    separation (that radius makes the endpoint match provably
    unambiguous); underflow of the step raises instead of guessing.
    """
    if abs(loop.base - tree.base) > 1e-9 * (1 + abs(tree.base)):
        raise InvalidInputError("loop must be based at the tree's base point")
    endpoints = _track_fiber(f, N, tree.points, loop, tree.separation(), initial_divisions)
    perm = _match_endpoints(endpoints, tree.points, tree.separation())
    return TreePermutation(N, tree.d, perm)


def _track_fiber(f, N, start_points, loop, separation, initial_divisions):
    w = np.array(start_points, dtype=complex)
    seg = np.diff(loop.waypoints)
    seg_len = np.abs(seg)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    L = float(cum[-1])
    if L <= 0:
        return w

    def gamma(s):
        s = min(max(s, 0.0), L)
        k = int(np.searchsorted(cum, s, side="right") - 1)
        k = min(k, len(seg) - 1)
        t = (s - cum[k]) / seg_len[k] if seg_len[k] > 0 else 0.0
        return complex(loop.waypoints[k] + t * seg[k])

    guard = separation / 3.0
    h0 = L / initial_divisions
    h = h0
    s = 0.0
    target_prev = gamma(0.0)
    max_steps = int(initial_divisions / MIN_STEP_FRACTION)
    steps = 0
    while s < L and steps < max_steps:
        steps += 1
        h_eff = min(h, L - s)
        target = gamma(s + h_eff)
        step_ok, w_new, iters = _pc_step(f, N, w, target_prev, target, guard)
        if not step_ok:
            h /= 2.0
            if h < L * MIN_STEP_FRACTION:
                raise LiftError(
                    f"step underflow at arclength {s:.6g} of {L:.6g} on {loop.kind} loop"
                )
            continue
        w = w_new
        s += h_eff
        target_prev = target
        if iters <= 2:
            h = min(h * 1.4, 4 * h0)
        elif iters > 3:
            h = max(h * 0.7, L * MIN_STEP_FRACTION)
    if s < L:
        raise LiftError("tracking exceeded the step budget")  # pragma: no cover
    return w


def _pc_step(f, N, w, target_prev, target, guard):
    """One predictor-corrector step of all fiber points; shared verdict."""
    val, deriv = f.eval_iterated_with_derivative(w, N)
    if np.any(np.abs(deriv) < 1e-300):
        return False, w, NEWTON_MAX
    pred = w + (target - target_prev) / deriv
    cur = pred
    scale = max(1.0, abs(target))
    iters = NEWTON_MAX
    for it in range(1, NEWTON_MAX + 1):
        val, deriv = f.eval_iterated_with_derivative(cur, N)
        resid = np.abs(val - target)
        if np.all(resid <= 1e-11 * scale):
            iters = it - 1
            break
        if np.any(np.abs(deriv) < 1e-300):
            return False, w, NEWTON_MAX
        cur = cur - (val - target) / deriv
    else:
        return False, w, NEWTON_MAX
    moved = np.abs(cur - w)
    if iters > NEWTON_SLOW or np.any(moved > guard) or not np.all(np.isfinite(cur)):
        return False, w, max(iters, NEWTON_SLOW + 1)
    return True, cur, iters


def _match_endpoints(endpoints, fiber_points, separation):
    dist = np.abs(endpoints[:, None] - fiber_points[None, :])
    nearest = dist.argmin(axis=1)
    best = dist[np.arange(len(endpoints)), nearest]
    if np.any(best > separation / 3.0):
        k = int(best.argmax())
        raise LiftError(
            f"endpoint {k} is {best[k]:.3e} from the nearest fiber point "
            f"(limit {separation / 3.0:.3e})"
        )
    if len(set(nearest.tolist())) != len(endpoints):
        raise LiftError("endpoint matching is not injective")
    return tuple(int(x) for x in nearest)


def infinity_cycle(f: ComplexPoly, N: int, tree: PreimageTree) -> TreePermutation:
    """Lift of the loop at infinity; verified to be one d^N-cycle."""
    loop = infinity_loop(f, N, tree.base)
    perm = lift_loop(f, N, tree, loop)
    n = tree.d**N
    ct = perm.cycle_type()
    if ct != (n,):
        raise NumericalError(
            f"infinity lift has cycle type {ct}, expected a single {n}-cycle; "
            "this is an internal consistency failure"
        )
    return perm


@dataclass
class MonodromyResult:
    """Generators of the monodromy action of f^N on the preimage tree."""

    f: ComplexPoly
    N: int
    tree: PreimageTree
    loops: list
    lifts: list  # TreePermutation per lollipop, in planar order
    infinity: TreePermutation
    critical_values: np.ndarray

    def group(self, include_infinity: bool = True) -> permgroup.PermGroup:
        gens = [t.perm for t in self.lifts]
        if include_infinity:
            gens.append(self.infinity.perm)
        return permgroup.PermGroup(self.tree.d**self.N, gens)


def pick_base_point(f: ComplexPoly, N: int, seed: int = 0, trials: int = 64) -> complex:
    """A generic base point: clear of the critical values, simple fiber."""
    cd = critical_data(f, N)
    values = cd.critical_values
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        p = complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) * scale
        if values.size and np.abs(values - p).min() < 0.2 * scale / max(values.size, 1):
            continue
        try:
            fiber(f, p, N, require_simple=True)
            return p
        except NumericalError:
            continue
    raise NumericalError("could not find a generic base point")


def monodromy_group(
    f: ComplexPoly,
    N: int,
    p=None,
    seed: int = 0,
) -> MonodromyResult:
    """Tree, lollipop generators, their lifts, and the infinity cycle."""
    if p is None:
        p = pick_base_point(f, N, seed=seed)
    tree = PreimageTree(f, p, N)
    loops = lollipop_generators(f, N, p)
    lifts = [lift_loop(f, N, tree, lp) for lp in loops]
    inf = infinity_cycle(f, N, tree)
    return MonodromyResult(
        f=f, N=N, tree=tree, loops=loops, lifts=lifts, infinity=inf,
        critical_values=critical_data(f, N).critical_values,
    )
