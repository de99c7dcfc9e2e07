"""Empirical operator-norm sweeps: reproducible test-function families, the
ratio statistics ||Tf||_{p,w} / ||f||_{p,w} over a family, and a trend
statistic that exhibits (never proves) uniform boundedness.

The near-extremizer search nudges the best family member's shape parameters
by deterministic coordinate ascent, so the reported maximum is adversarial
rather than anecdotal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, SampledFunction, lp_norm
from .weights import Weight


# ---------------------------------------------------------------------------
# test-function construction
# ---------------------------------------------------------------------------


def gaussian_function(spec: GridSpec, center: float = 0.0, width: float = 1.0,
                      freq: float = 0.0) -> SampledFunction:
    """exp(-pi ((x-c)/width)^2), optionally modulated by cos(2 pi freq x)."""
    x = spec.coords()
    r2 = np.sum((x - center) ** 2, axis=-1)
    vals = np.exp(-math.pi * r2 / width**2)
    if freq:
        vals = vals * np.cos(2.0 * math.pi * freq * x[..., 0])
    return SampledFunction(spec, vals.astype(complex))


def step_function(spec: GridSpec, a: float = 0.0, b: float = 1.0) -> SampledFunction:
    x = spec.coords()[..., 0]
    return SampledFunction(spec, ((x >= a) & (x <= b)).astype(complex))


def band_limited_function(spec: GridSpec, band: tuple, rng: np.random.Generator) -> SampledFunction:
    """Random trigonometric polynomial with frequencies |xi| in [band0, band1]."""
    freqs = spec.abs_freq_grid()
    mask = (freqs >= band[0]) & (freqs <= band[1])
    if not np.any(mask):
        raise ValueError(f"no grid frequencies inside band {band}")
    coef = np.zeros(spec.shape, dtype=complex)
    k = int(np.count_nonzero(mask))
    coef[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    vals = np.fft.ifftn(coef) * spec.size
    return SampledFunction(spec, vals)


def log_abs_function(spec: GridSpec) -> SampledFunction:
    """log|x| with the singular cell replaced by its exact cell average."""
    x = spec.coords()
    r = np.sqrt(np.sum(x**2, axis=-1))
    h = spec.step
    vals = np.where(r > 0, np.log(np.maximum(r, 1e-300)), 0.0)
    if spec.dim == 1:
        vals[r == 0] = math.log(h / 2.0) - 1.0  # (1/h) int_{-h/2}^{h/2} log|x|
    else:
        # polar-exact average over the inscribed disc, midpoint corners
        sub = 33
        off = ((np.arange(sub) + 0.5) / sub - 0.5) * h
        xx, yy = np.meshgrid(off, off, indexing="ij")
        rr = np.sqrt(xx**2 + yy**2)
        disc = 2 * math.pi * (h / 2) ** 2 * (math.log(h / 2) / 2 - 0.25) * 2
        corners = np.sum(np.where(rr > h / 2, np.log(np.maximum(rr, 1e-300)), 0.0)) * (h / sub) ** 2
        vals[r == 0] = (disc + corners) / h**2
    return SampledFunction(spec, vals.astype(complex))


def make_function(desc: dict, spec: GridSpec, rng: np.random.Generator | None = None) -> SampledFunction:
    """Build a sampled function from a JSON-style descriptor."""
    kind = desc.get("type")
    if kind == "gaussian":
        return gaussian_function(
            spec, float(desc.get("center", 0.0)), float(desc.get("width", 0.5)),
            float(desc.get("freq", 0.0)),
        )
    if kind == "step":
        return step_function(spec, float(desc.get("a", 0.0)), float(desc.get("b", 1.0)))
    if kind == "trig":
        seed = int(desc.get("seed", 0))
        band = tuple(desc.get("band", (0.5, 2.0)))
        return band_limited_function(spec, band, np.random.default_rng(seed))
    if kind == "log_abs":
        return log_abs_function(spec)
    raise ValueError(f"unknown function type {desc.get('type')!r}")


@dataclass(frozen=True)
class TestFamily:
    """Reproducible family of test functions.

    kinds: "gaussian" (random centers/widths), "modulated" (gaussians times
    cosines), "trig" (random band-limited polynomials), "step" (random
    indicator intervals).
    """

    kind: str
    count: int
    seed: int
    band: tuple = (0.5, 2.0)
    width_range: tuple = (0.25, 2.0)
    center_range: tuple = (-2.0, 2.0)

    def __post_init__(self):
        if self.kind not in ("gaussian", "modulated", "trig", "step"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("family must be nonempty")

    def _params(self, rng: np.random.Generator) -> dict:
        if self.kind in ("gaussian", "modulated"):
            w = math.exp(rng.uniform(math.log(self.width_range[0]), math.log(self.width_range[1])))
            c = rng.uniform(*self.center_range)
            fr = (
                math.exp(rng.uniform(math.log(max(self.band[0], 1e-3)), math.log(self.band[1])))
                if self.kind == "modulated"
                else 0.0
            )
            return {"center": c, "width": w, "freq": fr}
        if self.kind == "step":
            a = rng.uniform(*self.center_range)
            return {"a": a, "b": a + math.exp(rng.uniform(-1.5, 1.0))}
        return {"trig_seed": int(rng.integers(0, 2**31 - 1))}

    def generate(self, spec: GridSpec) -> list:
        rng = np.random.default_rng(self.seed)
        out = []
        for _ in range(self.count):
            p = self._params(rng)
            out.append(self._build(spec, p))
        return out

    def _build(self, spec: GridSpec, p: dict) -> SampledFunction:
        if self.kind in ("gaussian", "modulated"):
            return gaussian_function(spec, p["center"], p["width"], p.get("freq", 0.0))
        if self.kind == "step":
            return step_function(spec, p["a"], p["b"])
        return band_limited_function(spec, self.band, np.random.default_rng(p["trig_seed"]))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "count": self.count,
            "seed": self.seed,
            "band": list(self.band),
            "width_range": list(self.width_range),
            "center_range": list(self.center_range),
        }


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepReport:
    ratios: list
    max_ratio: float
    median_ratio: float
    trend: float
    refined_max: float | None
    certified: bool | None
    flags: list
    settings: dict

    def to_dict(self) -> dict:
        return {
            "ratios": self.ratios,
            "max_ratio": self.max_ratio,
            "median_ratio": self.median_ratio,
            "trend": self.trend,
            "refined_max": self.refined_max,
            "certified": self.certified,
            "flags": self.flags,
            "settings": self.settings,
        }

    def export_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "ratio"])
            for i, r in enumerate(self.ratios):
                w.writerow([i, repr(float(r))])


def norm_ratio_sweep(
    op,
    fam: TestFamily,
    spec: GridSpec,
    p: float,
    weight: Weight | None = None,
    refine_steps: int = 0,
    certified: bool | None = None,
    op_name: str = "operator",
) -> SweepReport:
    """Per-function ratios ||op(f)||_{p,w} / ||f||_{p,w}; max, median and the
    enlarging-family trend (max over the second half / max over the first).
    Deterministic given (family seed, settings)."""
    funcs = fam.generate(spec)
    ratios = []
    flags = []
    for f in funcs:
        denom = lp_norm(f, p, weight)
        if denom <= 0:
            raise ValueError("family produced a zero function")
        ratios.append(float(lp_norm(op(f), p, weight) / denom))
    half = len(ratios) // 2
    trend = (
        max(ratios[half:]) / max(ratios[:half])
        if half >= 1 and max(ratios[:half]) > 0
        else 0.0
    )
    refined = None
    if refine_steps > 0 and fam.kind in ("gaussian", "modulated"):
        refined = _near_extremizer(op, fam, spec, p, weight, refine_steps, ratios)
    if trend > 2.0:
        flags.append("trend_above_2")
    return SweepReport(
        ratios=ratios,
        max_ratio=max(ratios),
        median_ratio=float(np.median(ratios)),
        trend=float(trend),
        refined_max=refined,
        certified=certified,
        flags=flags,
        settings={
            "op": op_name,
            "p": p,
            "weight": weight.descriptor() if weight is not None else None,
            "family": fam.to_dict(),
            "grid": {"dim": spec.dim, "R": spec.halfwidth, "N": spec.samples_per_axis},
            "refine_steps": refine_steps,
        },
    )


def _near_extremizer(op, fam, spec, p, weight, steps, base_ratios) -> float:
    """Deterministic coordinate ascent over (center, width, freq) from the
    best family member; plain families understate operator norms."""
    rng = np.random.default_rng(fam.seed)
    params = [fam._params(rng) for _ in range(fam.count)]
    best_i = int(np.argmax(base_ratios))
    cur = dict(params[best_i])
    cur.setdefault("freq", 0.0)

    def ratio_of(q) -> float:
        f = gaussian_function(spec, q["center"], q["width"], q.get("freq", 0.0))
        denom = lp_norm(f, p, weight)
        return float(lp_norm(op(f), p, weight) / denom) if denom > 0 else 0.0

    best = ratio_of(cur)
    moves = [
        ("width", 1.25), ("width", 0.8),
        ("center", 1.0), ("center", -1.0),
        ("freq", 1.25), ("freq", 0.8),
    ]
    scale = spec.halfwidth / 16.0
    for _ in range(steps):
        improved = False
        for key, fac in moves:
            trial = dict(cur)
            if key == "center":
                trial["center"] = cur["center"] + fac * scale
            elif key == "freq" and cur.get("freq", 0.0) == 0.0:
                continue
            else:
                trial[key] = cur[key] * fac
            r = ratio_of(trial)
            if r > best * (1.0 + 1e-12):
                best, cur, improved = r, trial, True
                break
        if not improved:
            scale *= 0.5
            if scale < spec.step:
                break
    return best
