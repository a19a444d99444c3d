"""Complex polynomial arithmetic at exact degree.

Evaluation, derivatives, composition and iteration, simultaneous-iteration
root finding, critical points and values, and preimage fibers solved
level by level so the tree structure (parent = image under f) comes for
free.  Coefficients are dense complex arrays in ascending degree order;
trailing coefficients below a relative noise threshold are stripped so
that composition noise cannot inflate the degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import BudgetError, FiberError, InvalidInputError, RootSolveError

# Trailing-coefficient trim threshold, relative to the largest coefficient.
COEFF_TRIM_REL = 1e-12
# Deduplication tolerance for critical values: 1e-8 * (1 + magnitude).
VALUE_DEDUP_REL = 1e-8
# Default cap on the number of coefficients an iterate may hold.
ITERATE_COEFF_CAP = 1 << 16
# Default cap on fiber size d**N.
FIBER_CAP = 4096


def _trim(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size == 0:
        raise InvalidInputError("coefficients must be a nonempty 1-d sequence")
    scale = float(np.abs(c).max())
    if scale == 0.0:
        return c[:1].copy()
    keep = c.size
    while keep > 1 and abs(c[keep - 1]) <= COEFF_TRIM_REL * scale:
        keep -= 1
    return c[:keep].copy()


class ComplexPoly:
    """One-variable polynomial with complex coefficients.

    Immutable by convention: operations return new instances; ``coeffs``
    must not be mutated in place.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = _trim(coeffs)

    @classmethod
    def identity(cls) -> "ComplexPoly":
        return cls([0.0, 1.0])

    @classmethod
    def constant(cls, c) -> "ComplexPoly":
        return cls([complex(c)])

    @classmethod
    def from_roots(cls, roots, lead=1.0) -> "ComplexPoly":
        c = np.array([complex(lead)], dtype=complex)
        for r in roots:
            c = np.convolve(c, np.array([-complex(r), 1.0], dtype=complex))
        return cls(c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[-1])

    def __call__(self, z):
        """Horner-scheme evaluation; accepts scalars or arrays."""
        scalar = np.isscalar(z) or (isinstance(z, np.generic) and np.ndim(z) == 0)
        zz = np.asarray(z, dtype=complex)
        acc = np.full(zz.shape, self.coeffs[-1], dtype=complex)
        for a in self.coeffs[-2::-1]:
            acc = acc * zz + a
        return complex(acc) if scalar else acc

    def abs_eval(self, r):
        """Evaluate sum |a_k| r^k; the natural residual scale at |z| = r."""
        rr = np.abs(np.asarray(r, dtype=float))
        acc = np.full(rr.shape, abs(self.coeffs[-1]), dtype=float)
        for a in self.coeffs[-2::-1]:
            acc = acc * rr + abs(a)
        return float(acc) if np.ndim(r) == 0 else acc

    def derivative(self) -> "ComplexPoly":
        if self.degree == 0:
            return ComplexPoly([0.0])
        return ComplexPoly(self.coeffs[1:] * np.arange(1, self.coeffs.size))

    def __add__(self, other):
        other = _as_poly(other)
        n = max(self.coeffs.size, other.coeffs.size)
        c = np.zeros(n, dtype=complex)
        c[: self.coeffs.size] += self.coeffs
        c[: other.coeffs.size] += other.coeffs
        return ComplexPoly(c)

    __radd__ = __add__

    def __neg__(self):
        return ComplexPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) + (-self)

    def __mul__(self, other):
        other = _as_poly(other)
        return ComplexPoly(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def compose(self, inner: "ComplexPoly") -> "ComplexPoly":
        """Coefficients of self(inner(z)) by a Horner scheme over polynomials."""
        acc = np.array([self.coeffs[-1]], dtype=complex)
        for a in self.coeffs[-2::-1]:
            acc = np.convolve(acc, inner.coeffs)
            acc[0] += a
        return ComplexPoly(acc)

    def iterate(self, n: int, coeff_cap: int = ITERATE_COEFF_CAP) -> "ComplexPoly":
        """Coefficient representation of the n-th iterate; iterate(0) is z."""
        if n < 0:
            raise InvalidInputError("iteration count must be >= 0")
        if n == 0:
            return ComplexPoly.identity()
        if self.degree >= 2 and self.degree ** n > coeff_cap:
            raise BudgetError(
                f"iterate degree {self.degree}**{n} exceeds coefficient cap {coeff_cap}"
            )
        out = self
        for _ in range(n - 1):
            out = out.compose(self)
        return out

    def orbit(self, z, n: int):
        """[z, f(z), ..., f^n(z)] without expanding any iterate."""
        out = [np.asarray(z, dtype=complex)]
        for _ in range(n):
            out.append(self(out[-1]))
        return out

    def eval_iterated(self, z, n: int):
        """f^n(z) by n-fold evaluation."""
        w = np.asarray(z, dtype=complex)
        for _ in range(n):
            w = self(w)
        return w

    def eval_iterated_with_derivative(self, z, n: int):
        """(f^n(z), (f^n)'(z)) via the chain rule, never expanding f^n."""
        w = np.asarray(z, dtype=complex)
        dp = self.derivative()
        deriv = np.ones_like(w)
        for _ in range(n):
            deriv = deriv * dp(w)
            w = self(w)
        return w, deriv

    def cauchy_root_bound(self) -> float:
        """All roots lie in |z| <= 1 + max |a_i / a_d|."""
        if self.degree == 0:
            return 1.0
        return 1.0 + float(np.abs(self.coeffs[:-1]).max(initial=0.0) / abs(self.coeffs[-1]))

    def fujiwara_root_bound(self) -> float:
        """Fujiwara bound, much tighter than Cauchy for iterated maps."""
        d = self.degree
        if d == 0:
            return 1.0
        lead = abs(self.coeffs[-1])
        best = 0.0
        for k in range(1, d + 1):
            a = abs(self.coeffs[d - k])
            if k == d:
                a /= 2.0
            if a > 0.0:
                best = max(best, (a / lead) ** (1.0 / k))
        return 2.0 * best

    def almost_equal(self, other: "ComplexPoly", rel=1e-9) -> bool:
        a, b = self.coeffs, other.coeffs
        if a.size != b.size:
            return False
        scale = max(np.abs(a).max(), np.abs(b).max(), 1e-300)
        return bool(np.abs(a - b).max() <= rel * scale)

    def __repr__(self):
        return f"ComplexPoly(degree={self.degree})"


def _as_poly(x) -> ComplexPoly:
    if isinstance(x, ComplexPoly):
        return x
    if np.isscalar(x) or isinstance(x, (int, float, complex)):
        return ComplexPoly([complex(x)])
    raise InvalidInputError(f"cannot coerce {type(x)!r} to ComplexPoly")


def poly_from_pairs(pairs) -> ComplexPoly:
    """Build a polynomial from the shared literal format [[re, im], ...]."""
    try:
        coeffs = [complex(float(re), float(im)) for re, im in pairs]
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad polynomial literal: {exc}") from exc
    return ComplexPoly(coeffs)


def poly_to_pairs(f: ComplexPoly):
    return [[float(c.real), float(c.imag)] for c in f.coeffs]


def roots(f: ComplexPoly, tol: float = 1e-12, max_iter: int = 600, seed: int = 0):
    """All ``degree`` roots of f, with multiplicity.

    Simultaneous (Aberth-Ehrlich style) iteration started on a perturbed
    circle at the Cauchy bound, polished by Newton.  Residuals are checked
    against |f| evaluated with absolute coefficients; failure raises
    RootSolveError rather than returning a silently wrong answer.
    """
    d = f.degree
    if d < 1:
        raise InvalidInputError("roots requires degree >= 1")
    if d == 1:
        return np.array([-f.coeffs[0] / f.coeffs[1]])

    rng = np.random.default_rng(seed)
    radius = max(min(f.cauchy_root_bound(), f.fujiwara_root_bound()), 1e-8)
    angles = 2 * np.pi * (np.arange(d) + 0.5) / d + 0.1 * rng.standard_normal(d) / d
    z = radius * np.exp(1j * angles)

    dp = f.derivative()
    for _ in range(max_iter):
        fz = f(z)
        scale = f.abs_eval(np.abs(z)) + 1e-300
        if np.all(np.abs(fz) <= 0.1 * tol * scale):
            break
        dz = dp(z)
        # Nudge off exact critical points so the Newton ratio stays finite.
        bad = np.abs(dz) < 1e-300
        if np.any(bad):
            z = z + bad * (1e-8 * radius + 1e-8)
            fz = f(z)
            dz = dp(z)
        w = fz / dz
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        s = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - w * s
        small = np.abs(denom) < 1e-12
        denom = np.where(small, 1.0, denom)
        delta = w / denom
        # Clamp runaway steps; keeps the iteration inside sane territory.
        cap_step = 0.5 * (1.0 + np.abs(z))
        big = np.abs(delta) > cap_step
        if np.any(big):
            delta = np.where(big, delta * (cap_step / np.abs(delta)), delta)
        z = z - delta
        if not np.all(np.isfinite(z)):  # pragma: no cover
            z = np.where(np.isfinite(z), z, radius * np.exp(2j * np.pi * rng.random(d)))
    # Newton polish sharpens simple roots; multiple roots stay as clusters
    # and are accepted on residual alone.
    for _ in range(3):
        dz = dp(z)
        ok = np.abs(dz) > 1e-300
        z = np.where(ok, z - f(z) / np.where(ok, dz, 1.0), z)

    resid = np.abs(f(z))
    scale = f.abs_eval(np.abs(z)) + 1e-300
    if not np.all(resid <= tol * scale):
        worst = float((resid / scale).max())
        raise RootSolveError(
            f"root iteration left relative residual {worst:.3e} > {tol:.1e} "
            f"(degree {d})"
        )
    return z


def sort_points(points: np.ndarray) -> np.ndarray:
    """Deterministic order: by real part, then imaginary part."""
    idx = np.lexsort((points.imag, points.real))
    return points[idx]


@dataclass
class CriticalData:
    """Critical points of f and critical values of f^n.

    ``critical_values`` is the forward orbit of the critical points up to
    n steps, deduplicated to tolerance; ``multiplicities[j]`` counts how
    many (critical point, step) pairs landed on value j.
    """

    level: int
    critical_points: np.ndarray
    critical_values: np.ndarray
    multiplicities: list
    max_cardinality: bool


def critical_data(f: ComplexPoly, n: int) -> CriticalData:
    """Critical points of f and the critical values of f^n.

    The critical values of f^n are exactly the union over 1 <= k <= n of
    f^k applied to the critical points of f.
    """
    d = f.degree
    if d < 2:
        raise InvalidInputError("critical_data requires degree >= 2")
    if n < 1:
        raise InvalidInputError("critical_data requires level >= 1")
    crit = roots(f.derivative())
    values = []  # list of [value, count]
    w = crit.copy()
    for _ in range(n):
        w = f(w)
        for v in w:
            for rec in values:
                if abs(v - rec[0]) <= VALUE_DEDUP_REL * (1.0 + abs(rec[0])):
                    rec[1] += 1
                    break
            else:
                values.append([complex(v), 1])
    order = np.lexsort(
        (np.array([v[0].imag for v in values]), np.array([v[0].real for v in values]))
    )
    vals = np.array([values[i][0] for i in order])
    mults = [values[i][1] for i in order]
    return CriticalData(
        level=n,
        critical_points=sort_points(crit),
        critical_values=vals,
        multiplicities=mults,
        max_cardinality=(vals.size == n * (d - 1)),
    )


@dataclass
class Fiber:
    """The d^N solutions of f^N(w) = p with their preimage-tree structure.

    ``levels[k]`` holds the d^k level-k points in canonical order: the d
    children of level-k point i occupy slots i*d .. i*d + d - 1 at level
    k + 1, so the ancestor of level-N index j at level k is
    j // d**(N - k).
    """

    level: int
    base: complex
    degree: int
    points: np.ndarray
    levels: list = field(repr=False)
    separation: float
    residual: float
    residual_tol: float
    simple: bool

    def ancestor(self, idx: int, at_level: int) -> int:
        return idx // self.degree ** (self.level - at_level)


def _min_separation(points: np.ndarray) -> float:
    m = points.size
    if m < 2:
        return np.inf
    if m <= 1024:
        diff = np.abs(points[:, None] - points[None, :])
        np.fill_diagonal(diff, np.inf)
        return float(diff.min())
    # Window scan after a lexicographic sort; adequate for a lower bound.
    pts = sort_points(points)
    best = np.inf
    for w in range(1, 64):
        if w >= m:
            break
        best = min(best, float(np.abs(pts[w:] - pts[:-w]).min()))
    return best


def fiber(
    f: ComplexPoly,
    p,
    N: int,
    cap: int = FIBER_CAP,
    require_simple: bool = False,
) -> Fiber:
    """Level-by-level preimage fiber of p under f^N.

    Each level solves f(w) = t for every level-(k) point t, so parent
    links are recorded by construction; a final Newton pass against the
    full chain pins the level-N residual.  Fibers whose points nearly
    collide (p too close to a critical value of f^N) are flagged as not
    simple; with ``require_simple`` that is an error and the caller
    should re-sample p.
    """
    d = f.degree
    if d < 1:
        raise InvalidInputError("fiber requires degree >= 1")
    if N < 1:
        raise InvalidInputError("fiber requires N >= 1")
    if d**N > cap:
        raise BudgetError(f"fiber size {d}**{N} exceeds cap {cap}")

    p = complex(p)
    levels = [np.array([p], dtype=complex)]
    for _ in range(N):
        parents = levels[-1]
        children = np.empty(parents.size * d, dtype=complex)
        for i, t in enumerate(parents):
            rs = sort_points(roots(f - t))
            children[i * d : (i + 1) * d] = rs
        levels.append(children)

    # Chain-Newton polish of every level against its own equation
    # f^k(w) = p; keeps residuals at machine scale through the tree.
    for k in range(1, N + 1):
        w = levels[k]
        for _ in range(2):
            val, deriv = f.eval_iterated_with_derivative(w, k)
            ok = np.abs(deriv) > 1e-300
            w = np.where(ok, w - (val - p) / np.where(ok, deriv, 1.0), w)
        levels[k] = w

    points = levels[N]
    residual = float(np.abs(f.eval_iterated(points, N) - p).max())
    residual_tol = 1e-9 * max(1.0, abs(p))
    if residual > residual_tol:
        raise FiberError(
            f"fiber residual {residual:.3e} exceeds {residual_tol:.3e}; "
            "p is likely too close to a critical value of f^N"
        )
    separation = _min_separation(points)
    simple = bool(separation > 10.0 * residual_tol)
    if require_simple and not simple:
        raise FiberError(
            f"fiber is not simple (separation {separation:.3e}); re-sample p"
        )
    return Fiber(
        level=N,
        base=p,
        degree=d,
        points=points,
        levels=levels,
        separation=separation,
        residual=residual,
        residual_tol=residual_tol,
        simple=simple,
    )
