"""Escaping-set analytics for one polynomial.

Escape radius, Green's function estimates, cycle detection with
multiplier classes, pixel charts of the bounded components by grid
flood fill, and point classification (escaping / bounded / near the
boundary).  Julia-set membership is never decided exactly: everything
near the boundary stays a pixel-level "near_julia" verdict so that
downstream certificates err on the inconclusive side.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .exceptions import InvalidInputError, NumericalError
from .polycore import ComplexPoly, roots, sort_points

# Multiplier class thresholds.
SUPER_TOL = 1e-8
UNIT_BAND = 1e-6
ROOT_OF_UNITY_MAX_Q = 64


def escape_radius(f: ComplexPoly) -> float:
    """R with |z| > R implying |f(z)| >= 2 |z|.

    The bound R = max(1, (2 + sum |a_i|) / |a_d|) gives
    |f(z)| >= |z|^(d-1) (|a_d||z| - sum|a_i|) >= 2|z| for |z| >= R.
    A deterministic spot check on 100 boundary samples backs the
    inequality (and bumps R if rounding ever bites).
    """
    d = f.degree
    if d < 2:
        raise InvalidInputError("escape_radius requires degree >= 2")
    lower = np.abs(f.coeffs[:-1]).sum()
    R = max(1.0, (2.0 + lower) / abs(f.coeffs[-1]))
    for _ in range(60):
        z = R * np.exp(2j * np.pi * np.arange(100) / 100)
        if np.all(np.abs(f(z)) >= 2 * np.abs(z) * (1 - 1e-12)):
            return R
        R *= 2.0
    raise NumericalError("escape radius verification failed")  # pragma: no cover


@dataclass
class GreensEstimate:
    value: float
    iterations_used: int
    error_bound: float


def green_value(f: ComplexPoly, z, tol: float = 1e-10, max_iter: int = 1000) -> GreensEstimate:
    """Escape-rate potential lim d^-n log+ |f^n(z)|.

    Returns 0 when the orbit stays inside the escape radius for the full
    budget.  Once the orbit escapes, iteration continues until the tail
    correction is provably below ``tol``; the explicit leading-term
    correction log|a_d|/(d-1) is added, so the error bound is the tiny
    remainder only.  Overflow is avoided by stopping below a
    degree-dependent magnitude and finishing analytically.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    d = f.degree
    if d < 2:
        raise InvalidInputError("green_value requires degree >= 2")
    R = escape_radius(f)
    switch = 10.0 ** (250.0 / d)
    w = complex(z)
    n = 0
    while n < max_iter and abs(w) <= R:
        w = f(w)
        n += 1
    if abs(w) <= R:
        return GreensEstimate(value=0.0, iterations_used=n, error_bound=0.0)
    # escaped: |f(w)| >= 2|w| from here on, so this loop is short
    extra = 0
    while abs(w) <= switch and extra < 2000:
        w = f(w)
        n += 1
        extra += 1
    lead = abs(f.coeffs[-1])
    eps = float(np.abs(f.coeffs[:-1]).sum() / (lead * abs(w)))
    dinv = math.exp(-n * math.log(d))
    value = dinv * (math.log(abs(w)) + math.log(lead) / (d - 1))
    err = dinv * (-math.log1p(-min(eps, 0.5))) / (d - 1)
    return GreensEstimate(value=value, iterations_used=n, error_bound=err)


@dataclass
class CycleInfo:
    """A periodic cycle with its multiplier class.

    kind is one of superattracting, attracting, parabolic, rotation,
    repelling; the thresholds live in this module's constants.
    """

    period: int
    points: np.ndarray
    multiplier: complex
    kind: str


def _classify_multiplier(lam: complex, linear: bool = False) -> str:
    m = abs(lam)
    if m <= SUPER_TOL:
        return "superattracting"
    if m < 1.0 - UNIT_BAND:
        return "attracting"
    if m <= 1.0 + UNIT_BAND:
        if linear:
            # A linear map with |a| = 1 is an honest rotation about its
            # fixed point even at a root of unity (it is periodic, not
            # parabolic: there is no petal dynamics to speak of).
            return "rotation"
        for q in range(1, ROOT_OF_UNITY_MAX_Q + 1):
            if abs(lam**q - 1.0) <= UNIT_BAND:
                return "parabolic"
        return "rotation"
    return "repelling"


def find_cycles(f: ComplexPoly, max_period: int, cap: int = 64) -> list:
    """All cycles of period <= max_period, with multiplier classes.

    Solves f^m(z) = z for each m and keeps one representative per cycle;
    multipliers come from the chain rule along the cycle.  The cap keeps
    the solved degree d^m where simultaneous iteration is trustworthy.
    """
    d = f.degree
    if d < 1:
        raise InvalidInputError("find_cycles requires degree >= 1")
    if d == 1:
        a, b = complex(f.coeffs[1]), complex(f.coeffs[0])
        if abs(a - 1.0) < 1e-14:
            return []
        fixed = b / (1.0 - a)
        return [CycleInfo(1, np.array([fixed]), a, _classify_multiplier(a, linear=True))]

    dp = f.derivative()
    cycles = []

    def known(z0):
        for c in cycles:
            if np.abs(c.points - z0).min() <= 1e-6 * (1.0 + abs(z0)):
                return True
        return False

    for m in range(1, max_period + 1):
        if d**m > cap:
            break  # deeper periods would need degrees past solver territory
        fm = f.iterate(m)
        if fm.degree != d**m:
            break  # expansion lost its head to coefficient range; stop deepening
        g = fm - ComplexPoly.identity()
        if g.degree < 1:
            continue
        for z0 in sort_points(roots(g)):
            z0 = complex(z0)
            # minimal period must divide m
            minimal = m
            for q in range(1, m):
                if m % q == 0 and abs(f.eval_iterated(z0, q) - z0) <= 1e-8 * (1 + abs(z0)):
                    minimal = q
                    break
            if minimal != m or known(z0):
                continue
            pts = [z0]
            lam = complex(dp(z0))
            w = z0
            for _ in range(m - 1):
                w = f(w)
                pts.append(complex(w))
                lam *= complex(dp(w))
            cycles.append(
                CycleInfo(m, np.array(pts), lam, _classify_multiplier(lam))
            )
    return cycles


@dataclass
class ComponentMeta:
    component_id: int
    n_pixels: int
    sample: complex
    cycle_id: int | None
    convergence: str | None  # "orbit" | "birkhoff" | None


@dataclass
class ComponentChart:
    """Pixel labeling of the plane: escaping pixels vs bounded components.

    labels[i, j] is -1 for escaping pixels and a component id >= 0
    otherwise; escape_time[i, j] is the iteration count at escape (-1
    when bounded within budget).  Pixel (i, j) covers the point
    x0 + (j + 0.5) dx + i (y0 + (i + 0.5) dy).
    """

    box: tuple  # (x0, x1, y0, y1)
    nx: int
    ny: int
    labels: np.ndarray = field(repr=False)
    escape_time: np.ndarray = field(repr=False)
    components: list = field(default_factory=list)
    cycles: list = field(default_factory=list)
    iter_budget: int = 0
    bailout: float = 0.0

    @property
    def pixel_size(self) -> float:
        return (self.box[1] - self.box[0]) / self.nx

    def pixel_of(self, z) -> tuple:
        x0, x1, y0, y1 = self.box
        j = int((z.real - x0) / (x1 - x0) * self.nx)
        i = int((z.imag - y0) / (y1 - y0) * self.ny)
        if not (0 <= i < self.ny and 0 <= j < self.nx):
            raise InvalidInputError(f"point {z} outside chart box")
        return i, j

    def label_at(self, z) -> int:
        i, j = self.pixel_of(z)
        return int(self.labels[i, j])

    def neighborhood_labels(self, z) -> set:
        i, j = self.pixel_of(z)
        out = set()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                a, b = i + di, j + dj
                if 0 <= a < self.ny and 0 <= b < self.nx:
                    out.add(int(self.labels[a, b]))
        return out

    def pixels_from_escape(self, z, radius: int = 2) -> bool:
        """True when no escaping pixel lies within ``radius`` pixels."""
        i, j = self.pixel_of(z)
        i0, i1 = max(0, i - radius), min(self.ny, i + radius + 1)
        j0, j1 = max(0, j - radius), min(self.nx, j + radius + 1)
        return bool((self.labels[i0:i1, j0:j1] >= 0).all())

    def component_meta(self, cid: int) -> ComponentMeta:
        for meta in self.components:
            if meta.component_id == cid:
                return meta
        raise InvalidInputError(f"no component {cid}")

    def save_pgm(self, path) -> None:
        """Escape-time picture as a portable graymap (bounded = black)."""
        t = self.escape_time.astype(float).copy()
        t[t < 0] = 0.0
        mx = t.max() or 1.0
        img = np.where(
            self.labels >= 0, 0, (55 + 200 * t / mx).astype(int)
        ).clip(0, 255)
        with open(path, "w") as fh:
            fh.write(f"P2\n{self.nx} {self.ny}\n255\n")
            for row in img[::-1]:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")

    def metadata(self) -> dict:
        return {
            "box": list(self.box),
            "resolution": [self.nx, self.ny],
            "iter_budget": self.iter_budget,
            "bailout": self.bailout,
            "components": [
                {
                    "id": m.component_id,
                    "n_pixels": m.n_pixels,
                    "sample": [m.sample.real, m.sample.imag],
                    "cycle_id": m.cycle_id,
                    "convergence": m.convergence,
                }
                for m in self.components
            ],
            "cycles": [
                {
                    "id": k,
                    "period": c.period,
                    "points": [[p.real, p.imag] for p in c.points],
                    "multiplier": [c.multiplier.real, c.multiplier.imag],
                    "kind": c.kind,
                }
                for k, c in enumerate(self.cycles)
            ],
        }

    def save_metadata(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def component_chart(
    f: ComplexPoly,
    box=None,
    resolution: int = 400,
    iter_budget: int = 512,
    max_period: int = 6,
) -> ComponentChart:
    """Flood-fill chart of the bounded components.

    The grid is iterated until escape past the escape radius (bailout);
    surviving pixels are 4-connected into components and each component
    gets a sampled interior orbit matched against the detected cycles,
    directly for (super)attracting / parabolic limits and through the
    orbit's running mean for rotation components.
    """
    d = f.degree
    linear = d == 1
    if d < 1:
        raise InvalidInputError("component_chart requires degree >= 1")
    if linear:
        bailout = 1e6
    else:
        bailout = escape_radius(f)
    if box is None:
        half = bailout * 1.02 if not linear else 2.0
        box = (-half, half, -half, half)
    x0, x1, y0, y1 = (float(v) for v in box)
    if not (x1 > x0 and y1 > y0):
        raise InvalidInputError("empty chart box")
    nx = ny = int(resolution)

    if not linear:
        for cz in (complex(x0, y0), complex(x0, y1), complex(x1, y0), complex(x1, y1)):
            g = green_value(f, cz, max_iter=iter_budget)
            if g.value == 0.0:
                raise InvalidInputError(
                    "chart box corner does not escape; box must contain the filled set"
                )

    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    z = xs[None, :] + 1j * ys[:, None]
    w = z.copy()
    escape_time = np.full(z.shape, -1, dtype=np.int32)
    alive = np.ones(z.shape, dtype=bool)
    for n in range(iter_budget):
        gone = alive & (np.abs(w) > bailout)
        escape_time[gone] = n
        alive &= ~gone
        if not alive.any():
            break
        w[alive] = f(w[alive])
    bounded = alive

    labels_raw, n_comp = ndimage.label(
        bounded, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]]
    )
    labels = labels_raw.astype(np.int32) - 1  # -1 escaping, 0.. components

    cycles = find_cycles(f, max_period) if d >= 1 else []
    components = []
    for cid in range(n_comp):
        ii, jj = np.nonzero(labels == cid)
        ci, cj = ii.mean(), jj.mean()
        k = int(np.argmin((ii - ci) ** 2 + (jj - cj) ** 2))
        sample = complex(z[ii[k], jj[k]])
        cycle_id, mode = _match_component_cycle(f, sample, cycles, iter_budget)
        components.append(
            ComponentMeta(
                component_id=cid,
                n_pixels=int(ii.size),
                sample=sample,
                cycle_id=cycle_id,
                convergence=mode,
            )
        )
    return ComponentChart(
        box=(x0, x1, y0, y1),
        nx=nx,
        ny=ny,
        labels=labels,
        escape_time=escape_time,
        components=components,
        cycles=cycles,
        iter_budget=iter_budget,
        bailout=bailout,
    )


def _match_component_cycle(f, sample, cycles, budget):
    if not cycles:
        return None, None
    w = complex(sample)
    tail = []
    for n in range(budget):
        w = f(w)
        if n >= budget // 2:
            tail.append(w)
        if abs(w) > 1e12:
            return None, None
    tail = np.array(tail)
    end = tail[-1]
    # direct convergence to a cycle point
    best, best_dist = None, np.inf
    for k, c in enumerate(cycles):
        dist = float(np.abs(c.points - end).min())
        if dist < best_dist:
            best, best_dist = k, dist
    if best is not None and best_dist <= 1e-4 * (1.0 + abs(end)):
        return best, "orbit"
    # rotation components: the running mean of the orbit tends to the
    # center (mean-value property of the conjugacy), at O(1/N) speed
    mean = complex(tail.mean())
    best, best_dist = None, np.inf
    for k, c in enumerate(cycles):
        if c.kind != "rotation":
            continue
        dist = float(np.abs(c.points - mean).min())
        if dist < best_dist:
            best, best_dist = k, dist
    if best is not None and best_dist <= 0.15 * (1.0 + abs(mean)):
        return best, "birkhoff"
    return None, None


@dataclass
class PointClass:
    kind: str  # "escaping" | "bounded" | "near_julia"
    green: GreensEstimate | None = None
    component_id: int | None = None
    detail: str = ""


def classify_point(
    f: ComplexPoly,
    z,
    chart: ComponentChart | None = None,
    tol: float = 1e-10,
    iter_budget: int = 1000,
    resolution: int = 400,
) -> PointClass:
    """Escaping (positive Green value), bounded (component id), or near
    the boundary at pixel precision."""
    z = complex(z)
    g = green_value(f, z, tol=tol, max_iter=iter_budget)
    if g.value > 0.0:
        return PointClass(kind="escaping", green=g)
    if chart is None:
        chart = component_chart(f, resolution=resolution, iter_budget=min(iter_budget, 512))
    try:
        nb = chart.neighborhood_labels(z)
    except InvalidInputError:
        return PointClass(kind="near_julia", green=g, detail="outside chart box")
    if len(nb) == 1 and -1 not in nb:
        return PointClass(kind="bounded", green=g, component_id=nb.pop())
    if -1 in nb and len(nb) == 1:
        return PointClass(
            kind="near_julia", green=g,
            detail="orbit bounded in budget but neighborhood escapes",
        )
    return PointClass(kind="near_julia", green=g, detail="mixed pixel neighborhood")


def level_curve_points(f: ComplexPoly, level: float, n_angles: int = 360, r_hint=None):
    """Points on {G = level} by radial bisection; rows of (x, y, G)."""
    if level <= 0:
        raise InvalidInputError("level must be positive")
    R = escape_radius(f)
    hi0 = r_hint or max(R * 2, math.exp(level) * 4)
    out = []
    for k in range(n_angles):
        ang = 2 * np.pi * k / n_angles
        lo, hi = 0.0, hi0
        glo = green_value(f, lo).value
        for _ in range(60):
            if green_value(f, hi * np.exp(1j * ang)).value > level:
                break
            hi *= 2
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            gm = green_value(f, mid * np.exp(1j * ang)).value
            if gm > level:
                hi = mid
            else:
                lo = mid
        z = 0.5 * (lo + hi) * np.exp(1j * ang)
        out.append((z.real, z.imag, green_value(f, z).value))
    return np.array(out)


def save_level_curve_csv(points: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,G\n")
        for x, y, g in points:
            fh.write(f"{x!r},{y!r},{g!r}\n")
