"""Muckenhoupt A_p machinery: weights, dyadic cube families, characteristic
estimates, BMO norms and weighted measures.

Power weights |x|^a get exact interval integrals in one dimension, so the
A_p characteristic over a finite cube family is analytic there; the grid
representation replaces the cell containing the singular point by its exact
cell average.  Divergent integrals (exponent <= -dim) propagate as +inf.
A separate refinement probe exhibits the divergence rate by shrinking the
resolved scale around the singular point dyadically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, SampledFunction


# ---------------------------------------------------------------------------
# cubes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cube:
    """Axis-aligned cube given by center and sidelength."""

    center: tuple
    sidelength: float

    def __post_init__(self):
        if self.sidelength <= 0:
            raise ValueError("sidelength must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self) -> int:
        return len(self.center)

    def bounds(self) -> list:
        half = self.sidelength / 2.0
        return [(c - half, c + half) for c in self.center]

    def volume(self) -> float:
        return self.sidelength**self.dim

    def contains_origin(self) -> bool:
        return all(lo <= 0.0 <= hi for lo, hi in self.bounds())

    def translate(self, shift) -> "Cube":
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        return Cube(tuple(c + s for c, s in zip(self.center, shift)), self.sidelength)


@dataclass(frozen=True, eq=False)
class CubeFamily:
    """A finite family of cubes inside the grid box, plus its recipe."""

    cubes: tuple
    recipe: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "cubes", tuple(self.cubes))
        if not self.cubes:
            raise ValueError("cube family is empty")

    def __iter__(self):
        return iter(self.cubes)

    def __len__(self):
        return len(self.cubes)

    def min_sidelength(self) -> float:
        return min(q.sidelength for q in self.cubes)

    def translate(self, shift) -> "CubeFamily":
        return CubeFamily(tuple(q.translate(shift) for q in self.cubes),
                          dict(self.recipe, translated=True))

    @staticmethod
    def dyadic(dim: int, halfwidth: float, j_min: int, j_max: int) -> "CubeFamily":
        """Standard dyadic partitions of the box at levels j_min..j_max;
        level j tiles [-R, R)^dim with 2^j cubes per axis."""
        if j_min < 0 or j_max < j_min:
            raise ValueError("need 0 <= j_min <= j_max")
        cubes = []
        for j in range(j_min, j_max + 1):
            n = 2**j
            ell = 2.0 * halfwidth / n
            centers = -halfwidth + (np.arange(n) + 0.5) * ell
            if dim == 1:
                cubes.extend(Cube((c,), ell) for c in centers)
            else:
                cubes.extend(
                    Cube((cx, cy), ell) for cx in centers for cy in centers
                )
        return CubeFamily(tuple(cubes), {"kind": "dyadic", "dim": dim,
                                         "halfwidth": halfwidth,
                                         "j_min": j_min, "j_max": j_max})

    @staticmethod
    def centered(dim: int, halfwidth: float, levels: int) -> "CubeFamily":
        """Nested cubes centered at the origin with dyadically shrinking sides."""
        if levels < 1:
            raise ValueError("levels must be >= 1")
        cubes = tuple(
            Cube((0.0,) * dim, 2.0 * halfwidth / 2**j) for j in range(levels)
        )
        return CubeFamily(cubes, {"kind": "centered", "dim": dim,
                                  "halfwidth": halfwidth, "levels": levels})


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


def _power_interval_integral(c: float, lo: float, hi: float) -> float:
    """Exact int_lo^hi |x|^c dx; +inf when the singularity is non-integrable."""
    if lo > hi:
        return 0.0
    touches = lo <= 0.0 <= hi
    if touches and c <= -1.0:
        return math.inf

    def prim(x: float) -> float:
        if x == 0.0:
            return 0.0
        sign = 1.0 if x > 0 else -1.0
        return sign * abs(x) ** (c + 1.0) / (c + 1.0)

    if c == -1.0:
        # origin excluded by the branch above
        return abs(math.log(abs(hi)) - math.log(abs(lo)))
    return prim(hi) - prim(lo)


def _power_interval_integral_floored(c: float, lo: float, hi: float, floor: float) -> float:
    """int over [lo, hi] minus the unresolved zone (-floor, floor)."""
    if floor <= 0:
        return _power_interval_integral(c, lo, hi)
    total = 0.0
    if lo < -floor:
        total += _power_interval_integral(c, lo, min(hi, -floor))
    if hi > floor:
        total += _power_interval_integral(c, max(lo, floor), hi)
    return total


class Weight:
    """Common interface: positive weights evaluable on cubes and grids."""

    dim: int = 1

    def grid_values(self, spec: GridSpec) -> np.ndarray:
        raise NotImplementedError

    def cube_integral(self, cube: Cube, exponent: float = 1.0) -> float:
        """int_Q w^exponent, exact where a closed form exists."""
        raise NotImplementedError

    def cube_essinf(self, cube: Cube) -> float:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


class Constant(Weight):
    def __init__(self, c: float = 1.0, dim: int = 1):
        if c <= 0:
            raise ValueError("constant weight must be positive")
        self.c = float(c)
        self.dim = dim

    def grid_values(self, spec: GridSpec) -> np.ndarray:
        return np.full(spec.shape, self.c)

    def cube_integral(self, cube: Cube, exponent: float = 1.0) -> float:
        return self.c**exponent * cube.volume()

    def cube_essinf(self, cube: Cube) -> float:
        return self.c

    def descriptor(self) -> dict:
        return {"type": "constant", "c": self.c}


class PowerWeight(Weight):
    """w(x) = |x|^a.  The grid cell containing 0 carries its exact average."""

    def __init__(self, a: float, dim: int = 1):
        self.a = float(a)
        self.dim = dim

    def grid_values(self, spec: GridSpec) -> np.ndarray:
        if self.a <= -spec.dim:
            raise ValueError("power weight is not locally integrable at this exponent")
        x = spec.coords()
        r = np.sqrt(np.sum(x**2, axis=-1))
        vals = np.where(r > 0, r, 1.0) ** self.a
        h = spec.step
        if spec.dim == 1:
            cell_avg = (h / 2.0) ** self.a / (self.a + 1.0)
        else:
            cell_avg = self._cell_average_2d(h)
        vals[r == 0] = cell_avg
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise ValueError("weight must be positive and finite on the grid")
        return vals

    def _cell_average_2d(self, h: float) -> float:
        # polar-exact inner disc plus midpoint corners
        a = self.a
        disc = 2 * math.pi * (h / 2) ** (a + 2) / (a + 2)
        sub = 33
        off = ((np.arange(sub) + 0.5) / sub - 0.5) * h
        xx, yy = np.meshgrid(off, off, indexing="ij")
        rr = np.sqrt(xx**2 + yy**2)
        mask = rr > h / 2
        corners = np.sum(rr[mask] ** a) * (h / sub) ** 2
        return (disc + corners) / h**2

    def cube_integral(self, cube: Cube, exponent: float = 1.0) -> float:
        c = self.a * exponent
        if cube.dim == 1:
            (lo, hi), = cube.bounds()
            return _power_interval_integral(c, lo, hi)
        return self._cube_integral_2d(cube, c, floor=0.0)

    def cube_integral_floored(self, cube: Cube, exponent: float, floor: float) -> float:
        """Cube integral with the ball |x| < floor left unresolved (dropped)."""
        c = self.a * exponent
        if cube.dim == 1:
            (lo, hi), = cube.bounds()
            return _power_interval_integral_floored(c, lo, hi, floor)
        return self._cube_integral_2d(cube, c, floor=floor)

    def _cube_integral_2d(self, cube: Cube, c: float, floor: float) -> float:
        (lx, hx), (ly, hy) = cube.bounds()
        touches = lx <= 0 <= hx and ly <= 0 <= hy
        if touches and c <= -2.0 and floor <= 0:
            return math.inf
        n = 256
        gx = lx + (np.arange(n) + 0.5) * (hx - lx) / n
        gy = ly + (np.arange(n) + 0.5) * (hy - ly) / n
        xx, yy = np.meshgrid(gx, gy, indexing="ij")
        rr = np.sqrt(xx**2 + yy**2)
        cell = (hx - lx) * (hy - ly) / n**2
        vals = np.where(rr > max(floor, 1e-300), rr**c, 0.0)
        total = float(np.sum(vals) * cell)
        if touches and floor <= 0:
            # refine around the singular midpoint cell with an exact disc
            hloc = (hx - lx) / n
            total += 2 * math.pi * (hloc / 2) ** (c + 2) / (c + 2) if c > -2 else math.inf
        return total

    def cube_essinf(self, cube: Cube) -> float:
        bounds = cube.bounds()
        if self.a == 0:
            return 1.0
        corners_r = []
        if cube.dim == 1:
            (lo, hi), = bounds
            rmin = 0.0 if lo <= 0 <= hi else min(abs(lo), abs(hi))
            rmax = max(abs(lo), abs(hi))
        else:
            (lx, hx), (ly, hy) = bounds
            dx = 0.0 if lx <= 0 <= hx else min(abs(lx), abs(hx))
            dy = 0.0 if ly <= 0 <= hy else min(abs(ly), abs(hy))
            rmin = math.hypot(dx, dy)
            rmax = max(math.hypot(x, y) for x in (lx, hx) for y in (ly, hy))
        if self.a > 0:
            return rmin**self.a if rmin > 0 else 0.0
        return rmax**self.a

    def descriptor(self) -> dict:
        return {"type": "power", "a": self.a}


class CustomSampled(Weight):
    """Weight given by positive samples on a grid."""

    def __init__(self, spec: GridSpec, values: np.ndarray):
        vals = np.asarray(values, dtype=float)
        if vals.shape != spec.shape:
            raise ValueError("values shape does not match grid")
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise ValueError("weight samples must be positive and finite")
        self.spec = spec
        self.values = vals
        self.dim = spec.dim

    def grid_values(self, spec: GridSpec) -> np.ndarray:
        if spec != self.spec:
            raise ValueError("sampled weight is bound to its own grid")
        return self.values

    def cube_integral(self, cube: Cube, exponent: float = 1.0) -> float:
        mask = _cells_in_cube(self.spec, cube)
        return float(np.sum(self.values[mask] ** exponent) * self.spec.cell_volume)

    def cube_essinf(self, cube: Cube) -> float:
        mask = _cells_in_cube(self.spec, cube)
        return float(np.min(self.values[mask]))

    def descriptor(self) -> dict:
        return {"type": "custom_sampled", "N": self.spec.samples_per_axis}


def weight_from_descriptor(desc: dict, dim: int = 1) -> Weight:
    kind = desc.get("type")
    if kind == "constant":
        return Constant(float(desc.get("c", 1.0)), dim)
    if kind == "power":
        return PowerWeight(float(desc["a"]), dim)
    raise ValueError(f"unknown weight type {kind!r}")


def _cells_in_cube(spec: GridSpec, cube: Cube) -> np.ndarray:
    """Boolean mask of grid cells whose centers lie in the half-open cube."""
    x = spec.coords()
    mask = np.ones(spec.shape, dtype=bool)
    for axis, (lo, hi) in enumerate(cube.bounds()):
        c = x[..., axis]
        mask &= (c >= lo) & (c < hi)
    return mask


# ---------------------------------------------------------------------------
# A_p characteristic, BMO, weighted measure
# ---------------------------------------------------------------------------


def ap_characteristic(w: Weight, p: float, cubes: CubeFamily) -> float:
    """sup over the family of (avg_Q w) (avg_Q w^{-1/(p-1)})^{p-1}.

    Exact integrals where the weight provides them; at least 1 up to
    quadrature slack; +inf when a dual integral diverges.
    """
    if not p > 1:
        raise ValueError("ap_characteristic needs p > 1")
    best = 0.0
    dual = -1.0 / (p - 1.0)
    for q in cubes:
        vol = q.volume()
        avg_w = w.cube_integral(q) / vol
        avg_dual = w.cube_integral(q, exponent=dual) / vol
        if math.isinf(avg_w) or math.isinf(avg_dual):
            return math.inf
        best = max(best, avg_w * avg_dual ** (p - 1.0))
    return best


def a1_characteristic(w: Weight, cubes: CubeFamily) -> float:
    """sup_Q (avg_Q w) / essinf_Q w, the p = 1 characteristic."""
    best = 0.0
    for q in cubes:
        avg_w = w.cube_integral(q) / q.volume()
        lo = w.cube_essinf(q)
        if lo <= 0:
            return math.inf
        best = max(best, avg_w / lo)
    return best


def power_weight_in_ap(a: float, p: float, dim: int) -> bool:
    """Closed-form classification: |x|^a in A_p iff -dim < a < dim (p - 1)."""
    return -dim < a < dim * (p - 1.0)


def ap_refinement_trend(w: PowerWeight, p: float, cube: Cube, levels: int) -> dict:
    """Characteristic of one singular cube at dyadically refined resolution.

    Level L resolves structure down to r_L = sidelength * 2^-L around the
    singular point; mass inside r_L is unresolved.  For exponents inside the
    A_p range the estimates stabilize; outside they keep growing, and the
    per-level growth factor approaches 2^{|c| - dim} + o(1) from above, where
    c is the divergent exponent.
    """
    if not isinstance(w, PowerWeight):
        raise TypeError("refinement trend applies to power weights")
    if not p > 1:
        raise ValueError("need p > 1")
    dual = -1.0 / (p - 1.0)
    vol = cube.volume()
    values = []
    for lev in range(1, levels + 1):
        floor = (cube.sidelength / 2.0) * 2.0**-lev
        avg_w = w.cube_integral_floored(cube, 1.0, floor) / vol
        avg_dual = w.cube_integral_floored(cube, dual, floor) / vol
        values.append(avg_w * avg_dual ** (p - 1.0))
    values = np.asarray(values)
    growth = values[1:] / np.where(values[:-1] > 0, values[:-1], np.nan)
    return {
        "levels": list(range(1, levels + 1)),
        "values": values.tolist(),
        "growth_factors": growth.tolist(),
        "expected_in_ap": power_weight_in_ap(w.a, p, w.dim),
    }


def bmo_norm(b: SampledFunction, cubes: CubeFamily) -> float:
    """sup over cubes of avg_Q |b - avg_Q b| on the sampling grid."""
    vals = b.values
    if np.max(np.abs(vals.imag)) > 1e-12 * max(1.0, np.max(np.abs(vals.real))):
        raise ValueError("bmo_norm expects a real-valued function")
    re = vals.real
    best = 0.0
    for q in cubes:
        mask = _cells_in_cube(b.spec, q)
        if not np.any(mask):
            continue
        sel = re[mask]
        avg = float(np.mean(sel))
        best = max(best, float(np.mean(np.abs(sel - avg))))
    return best


def weighted_measure(w: Weight, cube: Cube) -> float:
    """w(Q) = int_Q w(x) dx."""
    return w.cube_integral(cube)
