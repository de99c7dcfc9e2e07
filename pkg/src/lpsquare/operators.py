"""Convolution-family operators on sampled functions: the square function
S(f)(x) = (int_0^inf |psi_t * f(x)|^2 dt/t)^(1/2) over a truncated dilation
grid, the second-difference Marcinkiewicz route, non-isotropic maximal
averages, smooth dyadic frequency blocks with their shifted-block norms, and
the single-octave uniform weighted bound.

All convolutions run through DFT-domain multipliers supplied by the kernel
(exact closed-form transforms or exact cell averages), so every operator
here treats the grid data as one period cell of a periodic function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, SampledFunction, TimeGrid, weighted_l2_sq
from .kernels import Kernel, SphereFunction
from .weights import Weight


class LeakageError(ValueError):
    """Kernel mass outside the half-box exceeds the configured bound."""

    def __init__(self, t: float, leakage: float, bound: float):
        self.t = t
        self.leakage = leakage
        self.bound = bound
        super().__init__(
            f"periodization leakage {leakage:.4g} at t={t:.6g} exceeds bound {bound:.4g}"
        )


@dataclass(frozen=True, eq=False)
class DilationBank:
    """Precomputed convolution multipliers for (kernel, timegrid, grid),
    reusable across many inputs."""

    kernel: Kernel
    timegrid: TimeGrid
    spec: GridSpec
    multipliers: np.ndarray  # (n_nodes, *freq_shape)
    leakages: np.ndarray  # (n_nodes,)

    @staticmethod
    def build(kernel: Kernel, tg: TimeGrid, spec: GridSpec) -> "DilationBank":
        nodes = tg.nodes
        mults = np.empty((nodes.size,) + spec.shape, dtype=complex)
        leaks = np.empty(nodes.size)
        for i, t in enumerate(nodes):
            mults[i] = kernel.convolution_multiplier(t, spec)
            leaks[i] = kernel.leakage(t, spec.halfwidth)
        return DilationBank(kernel, tg, spec, mults, leaks)


def _check_leakage(bank: DilationBank, bound: float) -> dict:
    worst = int(np.argmax(bank.leakages))
    info = {
        "max_leakage": float(bank.leakages[worst]),
        "at_t": float(bank.timegrid.nodes[worst]),
        "bound": bound,
    }
    if bank.leakages[worst] > bound:
        raise LeakageError(info["at_t"], info["max_leakage"], bound)
    return info


@dataclass(frozen=True, eq=False)
class SquareFunctionResult:
    values: SampledFunction  # nonnegative real part carries the result
    tail_estimate: float
    tail_flag: bool
    leakage: dict
    timegrid: TimeGrid

    def export_csv(self, path) -> None:
        self.values.export_abs_csv(path)


def _small_t_tail(weights, octaves, sup_sq, k_min) -> tuple:
    """Geometric extrapolation of the missing (0, t_min) dilation range from
    the measured per-octave decay of sup_x |psi_t * f|^2."""
    s0 = float(np.sum(weights[octaves == k_min] * sup_sq[octaves == k_min]))
    s1 = float(np.sum(weights[octaves == k_min + 1] * sup_sq[octaves == k_min + 1]))
    if s1 <= 0 or s0 <= 0:
        return 0.0, False
    ratio = s0 / s1
    if ratio >= 1.0:
        return math.inf, True
    return s0 * ratio / (1.0 - ratio), False


def square_function(
    kernel: Kernel,
    f: SampledFunction,
    tg: TimeGrid,
    leakage_bound: float = 0.5,
    bank: DilationBank | None = None,
) -> SquareFunctionResult:
    """Truncated square function with dt/t quadrature over the dilation grid."""
    if kernel.dim != f.dim:
        raise ValueError("kernel dimension does not match the function")
    if bank is None:
        bank = DilationBank.build(kernel, tg, f.spec)
    leak_info = _check_leakage(bank, leakage_bound)
    fhat = np.fft.fftn(f.values)
    weights = tg.weights
    octaves = tg.octaves
    acc = np.zeros(f.spec.shape)
    sup_sq = np.empty(weights.size)
    for i in range(weights.size):
        conv = np.fft.ifftn(fhat * bank.multipliers[i])
        a2 = np.abs(conv) ** 2
        acc += weights[i] * a2
        sup_sq[i] = a2.max()
    tail, tail_flag = _small_t_tail(weights, octaves, sup_sq, tg.k_min)
    vals = SampledFunction(f.spec, np.sqrt(acc).astype(complex))
    return SquareFunctionResult(vals, tail, tail_flag, leak_info, tg)


def sup_dilation(
    kernel: Kernel,
    f: SampledFunction,
    tg: TimeGrid,
    leakage_bound: float = 0.5,
    bank: DilationBank | None = None,
) -> SampledFunction:
    """Pointwise sup over grid dilations of |psi_t * f|."""
    if bank is None:
        bank = DilationBank.build(kernel, tg, f.spec)
    _check_leakage(bank, leakage_bound)
    fhat = np.fft.fftn(f.values)
    out = np.zeros(f.spec.shape)
    for i in range(tg.nodes.size):
        conv = np.abs(np.fft.ifftn(fhat * bank.multipliers[i]))
        np.maximum(out, conv, out=out)
    return SampledFunction(f.spec, out.astype(complex))


# ---------------------------------------------------------------------------
# Marcinkiewicz route (dim 1): second differences of the antiderivative
# ---------------------------------------------------------------------------


class _CellAntiderivative:
    """Exact antiderivative of the piecewise-constant cell model of f,
    evaluated anywhere with linear-in-mass periodic extension."""

    def __init__(self, f: SampledFunction):
        if f.dim != 1:
            raise ValueError("one-dimensional only")
        self.h = f.step
        self.n = f.samples_per_axis
        self.period = 2.0 * f.halfwidth
        self.anchor = -f.halfwidth - self.h / 2.0  # left edge of cell 0
        self.fvals = f.values
        self.cum = np.concatenate([[0.0 + 0.0j], np.cumsum(f.values) * self.h])
        self.mass = self.cum[-1]

    def __call__(self, p: np.ndarray) -> np.ndarray:
        u = (np.asarray(p, dtype=float) - self.anchor) / self.h
        wrap = np.floor(u / self.n)
        loc = u - wrap * self.n
        idx = np.minimum(loc.astype(int), self.n - 1)
        theta = loc - idx
        return self.cum[idx] + theta * self.h * self.fvals[idx] + wrap * self.mass


def marcinkiewicz_1d(f: SampledFunction, tg: TimeGrid) -> SampledFunction:
    """Square function through F(x+t) + F(x-t) - 2F(x) over t, with
    F the exact antiderivative of the cell model of f."""
    F = _CellAntiderivative(f)
    x = f.spec.axis_coords()
    acc = np.zeros(f.spec.shape)
    for t, w in zip(tg.nodes, tg.weights):
        second = (F(x + t) + F(x - t) - 2.0 * F(x)) / t
        acc += w * np.abs(second) ** 2
    return SampledFunction(f.spec, np.sqrt(acc).astype(complex))


# ---------------------------------------------------------------------------
# non-isotropic maximal averages
# ---------------------------------------------------------------------------


def _window_integrals_1d(spec: GridSpec, omega: SphereFunction, r: float) -> np.ndarray:
    """Per-cell integral of Omega(sign y) over cell  intersect [-r, r]."""
    d = spec.displacement_coords()[..., 0]
    h = spec.step
    lo = d - h / 2
    hi = d + h / 2
    pos = np.clip(np.minimum(hi, r), 0.0, None) - np.clip(np.minimum(lo, r), 0.0, None)
    neg = np.clip(np.minimum(hi, 0.0), -r, None) - np.clip(np.minimum(lo, 0.0), -r, None)
    return omega.values[0] * pos + omega.values[1] * neg


def _window_integrals_2d(spec: GridSpec, omega: SphereFunction, r: float) -> np.ndarray:
    d = spec.displacement_coords()
    h = spec.step
    rr = np.sqrt(np.sum(d**2, axis=-1))
    inside = rr <= r - h  # cells fully inside
    boundary = (~inside) & (rr <= r + h)
    vals = np.zeros(spec.shape)
    ang = omega.evaluate_direction(np.where(rr[..., None] > 0, d, [1.0, 0.0]))
    vals[inside] = ang[inside] * h * h
    if np.any(boundary):
        off = (np.arange(4) + 0.5) / 4 - 0.5
        ox, oy = np.meshgrid(off * h, off * h, indexing="ij")
        sub = d[boundary][:, None, :] + np.stack([ox.ravel(), oy.ravel()], -1)[None, :, :]
        frac = np.mean(np.sum(sub**2, axis=-1) <= r * r, axis=1)
        vals[boundary] = ang[boundary] * frac * h * h
    return vals


def default_radii(spec: GridSpec, per_octave: int = 8) -> np.ndarray:
    lo = spec.step / 2.0
    hi = spec.halfwidth / 2.0
    count = int(math.ceil(per_octave * math.log2(hi / lo))) + 1
    return np.geomspace(lo, hi, count)


def maximal_omega(
    f: SampledFunction, omega: SphereFunction, radii: np.ndarray | None = None
) -> SampledFunction:
    """M(f)(x) = sup_r r^-n int_{|y|<r} |f(x-y)| Omega(y/|y|) dy over a
    geometric radius grid, windows integrated cell-exactly."""
    if not omega.nonneg:
        raise ValueError("maximal averages need a nonnegative angular density")
    if omega.dim != f.dim:
        raise ValueError("dimension mismatch")
    if radii is None:
        radii = default_radii(f.spec)
    afhat = np.fft.fftn(np.abs(f.values))
    out = np.zeros(f.spec.shape)
    for r in np.asarray(radii, dtype=float):
        if f.dim == 1:
            win = _window_integrals_1d(f.spec, omega, r)
        else:
            win = _window_integrals_2d(f.spec, omega, r)
        conv = np.real(np.fft.ifftn(afhat * np.fft.fftn(win.astype(complex))))
        np.maximum(out, conv / r**f.dim, out=out)
    return SampledFunction(f.spec, out.astype(complex))


# ---------------------------------------------------------------------------
# smooth dyadic decomposition
# ---------------------------------------------------------------------------


def _smooth_cutoff(r: np.ndarray) -> np.ndarray:
    """C^3 polynomial cutoff: 1 on [0, 1], 0 on [2, inf)."""
    r = np.asarray(r, dtype=float)
    u = np.clip(r - 1.0, 0.0, 1.0)
    s = u**4 * (35.0 - 84.0 * u + 70.0 * u**2 - 20.0 * u**3)
    return np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, 1.0 - s))


@dataclass(frozen=True)
class LPDecomposition:
    """Smooth dyadic frequency blocks: the j-th multiplier is
    Psi(2^j xi) with Psi(xi) = phi(|xi|) - phi(2 |xi|), supported in
    {1/2 <= |xi| <= 2}; the blocks telescope to 1 away from 0."""

    j_min: int
    j_max: int

    def __post_init__(self):
        if self.j_max < self.j_min:
            raise ValueError("empty block range")

    @property
    def j_range(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @staticmethod
    def band_profile(r) -> np.ndarray:
        return _smooth_cutoff(r) - _smooth_cutoff(2.0 * np.asarray(r, dtype=float))

    def multiplier(self, j: int, spec: GridSpec) -> np.ndarray:
        return self.band_profile(2.0**j * spec.abs_freq_grid())

    def partition_residual(self, spec: GridSpec) -> float:
        """max over nonzero grid frequencies of |sum_j Psi(2^j xi) - 1|."""
        a = spec.abs_freq_grid()
        acc = np.zeros(spec.shape)
        for j in self.j_range:
            acc += self.band_profile(2.0**j * a)
        mask = a > 0
        return float(np.max(np.abs(acc[mask] - 1.0)))

    @staticmethod
    def covering(spec: GridSpec, margin: int = 1) -> "LPDecomposition":
        """Block range that telescopes to 1 over the whole grid band."""
        xi_min = 1.0 / (2.0 * spec.halfwidth)
        xi_max = spec.max_frequency()
        j_min = -int(math.ceil(math.log2(xi_max))) - margin
        j_max = int(math.ceil(math.log2(1.0 / xi_min))) + margin
        return LPDecomposition(j_min, j_max)


def lp_blocks(f: SampledFunction, dec: LPDecomposition, j: int) -> SampledFunction:
    """The j-th frequency block of f."""
    if j not in dec.j_range:
        raise ValueError(f"block index {j} outside [{dec.j_min}, {dec.j_max}]")
    fhat = np.fft.fftn(f.values)
    out = np.fft.ifftn(fhat * dec.multiplier(j, f.spec))
    return SampledFunction(f.spec, out)


def tj_diagnostic(
    kernel: Kernel,
    f: SampledFunction,
    tg: TimeGrid,
    dec: LPDecomposition | None = None,
    leakage_bound: float = 0.5,
    bank: DilationBank | None = None,
) -> dict:
    """Shifted-block decomposition of the square function.

    For each block shift j, assembles the (x, t) field Delta_{j+k}(psi_t * f)
    on t in [2^k, 2^(k+1)) and returns its L^2(dt/t x dx) norm, together with
    the pointwise check that the square function is dominated by the sum of
    the shifted-block square functions.
    """
    if bank is None:
        bank = DilationBank.build(kernel, tg, f.spec)
    _check_leakage(bank, leakage_bound)
    if dec is None:
        base = LPDecomposition.covering(f.spec)
        dec = LPDecomposition(base.j_min - tg.k_max, base.j_max - tg.k_min)
    fhat = np.fft.fftn(f.values)
    weights = tg.weights
    octaves = tg.octaves
    spec = f.spec
    a = spec.abs_freq_grid()

    band_cache: dict = {}

    def band(m: int) -> np.ndarray:
        if m not in band_cache:
            band_cache[m] = LPDecomposition.band_profile(2.0**m * a)
        return band_cache[m]

    tj_sq = {j: np.zeros(spec.shape) for j in dec.j_range}
    s_sq = np.zeros(spec.shape)
    for i in range(weights.size):
        conv_hat = fhat * bank.multipliers[i]
        conv = np.fft.ifftn(conv_hat)
        s_sq += weights[i] * np.abs(conv) ** 2
        k = int(octaves[i])
        for j in dec.j_range:
            piece = np.fft.ifftn(conv_hat * band(j + k))
            tj_sq[j] += weights[i] * np.abs(piece) ** 2

    tj = {j: np.sqrt(v) for j, v in tj_sq.items()}
    tj_norms = {
        j: float(math.sqrt(np.sum(v) * spec.cell_volume)) for j, v in tj_sq.items()
    }
    s_vals = np.sqrt(s_sq)
    tj_sum = np.sum(np.stack(list(tj.values())), axis=0)
    max_violation = float(np.max(s_vals - tj_sum))
    return {
        "tj_norms": tj_norms,
        "pointwise_sum_margin": max_violation,
        "square_function": SampledFunction(spec, s_vals.astype(complex)),
        "tj_sum": SampledFunction(spec, tj_sum.astype(complex)),
        "decomposition": dec,
    }


def tj_slope(tj_norms: dict, j_abs_range: tuple = (2, 6)) -> float:
    """Fitted log2 slope of the shifted-block norms against |j|, per sign of
    j, returning the slower (larger) of the two decays."""
    lo, hi = j_abs_range
    slopes = []
    for sign in (1, -1):
        pts = [
            (abs(j), v)
            for j, v in tj_norms.items()
            if lo <= abs(j) <= hi and v > 0 and j * sign > 0
        ]
        if len(pts) < 3:
            continue
        xs = np.array([p[0] for p in pts], dtype=float)
        ys = np.log2([p[1] for p in pts])
        slopes.append(float(np.polyfit(xs, ys, 1)[0]))
    if not slopes:
        raise ValueError("not enough nonzero block norms in the fit range")
    return max(slopes)


# ---------------------------------------------------------------------------
# single-octave uniform weighted bound
# ---------------------------------------------------------------------------


def check_15(
    kernel: Kernel,
    f: SampledFunction,
    w: Weight | None,
    k_range: tuple = (-8, 4),
    substeps: int = 16,
    leakage_bound: float = 0.5,
) -> dict:
    """sup over octave shifts k of int int_1^2 |psi_{t 2^k} * f(x)|^2 dt w dx,
    and its ratio to the weighted L^2 norm squared of f."""
    k_lo, k_hi = k_range
    wgrid = w.grid_values(f.spec) if w is not None else None
    fhat = np.fft.fftn(f.values)
    t_nodes = 2.0 ** (np.arange(substeps) / substeps)
    t_weights = t_nodes * math.log(2.0) / substeps  # dt on log-spaced nodes
    per_k = {}
    worst_leak = 0.0
    worst_t = 0.0
    for k in range(k_lo, k_hi + 1):
        total = 0.0
        for t, tw in zip(t_nodes, t_weights):
            td = t * 2.0**k
            leak = kernel.leakage(td, f.halfwidth)
            if leak > worst_leak:
                worst_leak, worst_t = leak, td
            conv = np.fft.ifftn(fhat * kernel.convolution_multiplier(td, f.spec))
            dens = np.abs(conv) ** 2
            if wgrid is not None:
                dens = dens * wgrid
            total += tw * float(np.sum(dens) * f.spec.cell_volume)
        per_k[k] = total
    if worst_leak > leakage_bound:
        raise LeakageError(worst_t, worst_leak, leakage_bound)
    sup_k = max(per_k, key=per_k.get)
    denom = weighted_l2_sq(f, w)
    return {
        "sup_value": per_k[sup_k],
        "sup_at_k": sup_k,
        "ratio": per_k[sup_k] / max(denom, 1e-300),
        "per_k": per_k,
        "weighted_norm_sq": denom,
        "max_leakage": worst_leak,
    }
