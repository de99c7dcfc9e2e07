"""Sampled functions on a periodic box, their discrete Fourier duals, and
the dyadic-logarithmic grids of dilation parameters.

Geometry convention: the box is [-R, R)^dim treated as one period cell,
sampled at N points per axis (N a power of two), grid step h = 2R/N.
Fourier coefficients approximate the continuous transform
f^(xi) = int f(x) exp(-2 pi i <x, xi>) dx at the frequencies k/(2R),
k an integer in (-N/2, N/2].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

_LN2 = float(np.log(2.0))


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the periodic sampling grid.

    Attributes:
        dim: spatial dimension, 1 or 2.
        halfwidth: R > 0; the period cell is [-R, R)^dim.
        samples_per_axis: N, a power of two.
    """

    dim: int
    halfwidth: float
    samples_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.halfwidth <= 0:
            raise ValueError("halfwidth must be positive")
        if not _is_power_of_two(self.samples_per_axis):
            raise ValueError(
                f"samples_per_axis must be a power of two >= 2, got {self.samples_per_axis}"
            )

    @property
    def step(self) -> float:
        return 2.0 * self.halfwidth / self.samples_per_axis

    @property
    def shape(self) -> tuple:
        return (self.samples_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.samples_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.step**self.dim

    def axis_coords(self) -> np.ndarray:
        """Sample coordinates along one axis: -R + j*h, j = 0..N-1."""
        n = self.samples_per_axis
        return -self.halfwidth + self.step * np.arange(n)

    def coords(self) -> np.ndarray:
        """Coordinates of all grid points; shape (N, dim) or (N, N, dim)."""
        x = self.axis_coords()
        if self.dim == 1:
            return x[:, None]
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def displacement_coords(self) -> np.ndarray:
        """Displacement coordinates in FFT layout (0, h, ..., -h); same shape
        convention as coords(). Used for convolution kernels indexed by x - y."""
        n = self.samples_per_axis
        d = np.fft.fftfreq(n, d=1.0) * n * self.step
        if self.dim == 1:
            return d[:, None]
        dx, dy = np.meshgrid(d, d, indexing="ij")
        return np.stack([dx, dy], axis=-1)

    def axis_freqs(self) -> np.ndarray:
        """Frequencies k/(2R) along one axis, FFT layout."""
        return np.fft.fftfreq(self.samples_per_axis, d=self.step)

    def freq_grid(self) -> np.ndarray:
        """|xi|-compatible frequency vectors; shape (N, dim) or (N, N, dim)."""
        f = self.axis_freqs()
        if self.dim == 1:
            return f[:, None]
        fx, fy = np.meshgrid(f, f, indexing="ij")
        return np.stack([fx, fy], axis=-1)

    def abs_freq_grid(self) -> np.ndarray:
        """|xi| at each FFT bin; shape (N,) or (N, N)."""
        g = self.freq_grid()
        return np.sqrt(np.sum(g**2, axis=-1))

    def max_frequency(self) -> float:
        return self.samples_per_axis / (4.0 * self.halfwidth)

    def _alternating_phase(self) -> np.ndarray:
        """(-1)^(k1+...+kdim) over FFT bins; converts FFT output to transform
        coefficients for the box anchored at -R."""
        n = self.samples_per_axis
        k = np.fft.fftfreq(n, d=1.0) * n
        sign = 1.0 - 2.0 * (np.round(k).astype(int) & 1)
        if self.dim == 1:
            return sign
        return np.outer(sign, sign)


def default_grid(dim: int) -> GridSpec:
    """Default geometries: dim 1 -> R=16, N=4096; dim 2 -> R=8, N=512."""
    if dim == 1:
        return GridSpec(1, 16.0, 4096)
    if dim == 2:
        return GridSpec(2, 8.0, 512)
    raise ValueError("dim must be 1 or 2")


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of a function on the periodic grid."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.spec.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.spec.shape}")
        if not np.all(np.isfinite(vals.view(float))):
            raise ValueError("values must be finite (no NaN/Inf)")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def halfwidth(self) -> float:
        return self.spec.halfwidth

    @property
    def samples_per_axis(self) -> int:
        return self.spec.samples_per_axis

    @property
    def step(self) -> float:
        return self.spec.step

    def with_values(self, values: np.ndarray) -> "SampledFunction":
        return SampledFunction(self.spec, values)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same_geometry(self, other)
        return SampledFunction(self.spec, self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same_geometry(self, other)
        return SampledFunction(self.spec, self.values - other.values)

    def __mul__(self, c) -> "SampledFunction":
        return SampledFunction(self.spec, self.values * c)

    __rmul__ = __mul__

    def integral(self) -> complex:
        return complex(np.sum(self.values) * self.spec.cell_volume)

    def to_record(self) -> dict:
        """Flat JSON record {dim, R, N, interleaved re/im values}."""
        flat = self.values.ravel()
        inter = np.empty(2 * flat.size)
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        return {
            "dim": self.spec.dim,
            "R": self.spec.halfwidth,
            "N": self.spec.samples_per_axis,
            "values": inter.tolist(),
        }

    @staticmethod
    def from_record(rec: dict) -> "SampledFunction":
        spec = GridSpec(int(rec["dim"]), float(rec["R"]), int(rec["N"]))
        inter = np.asarray(rec["values"], dtype=float)
        if inter.size != 2 * spec.size:
            raise ValueError("record value count does not match geometry")
        vals = (inter[0::2] + 1j * inter[1::2]).reshape(spec.shape)
        return SampledFunction(spec, vals)

    def to_json(self) -> str:
        return json.dumps(self.to_record())

    @staticmethod
    def from_json(text: str) -> "SampledFunction":
        return SampledFunction.from_record(json.loads(text))

    def export_abs_csv(self, path) -> None:
        """CSV of |values| against coordinates, for plotting."""
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            if self.dim == 1:
                w.writerow(["x", "abs_value"])
                for x, v in zip(self.spec.axis_coords(), np.abs(self.values)):
                    w.writerow([repr(float(x)), repr(float(v))])
            else:
                w.writerow(["x", "y", "abs_value"])
                ax = self.spec.axis_coords()
                a = np.abs(self.values)
                for i, x in enumerate(ax):
                    for j, y in enumerate(ax):
                        w.writerow([repr(float(x)), repr(float(y)), repr(float(a[i, j]))])


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Fourier coefficients on the dual grid, FFT bin layout.

    coefficients[k] approximates f^(xi_k) at xi_k = k/(2R) for integer
    frequency vectors k in (-N/2, N/2]^dim.
    """

    spec: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=complex)
        if coef.shape != self.spec.shape:
            raise ValueError("coefficient shape does not match grid")
        object.__setattr__(self, "coefficients", coef)

    def freqs(self) -> np.ndarray:
        return self.spec.freq_grid()

    def values(self) -> SampledFunction:
        return inverse_transform(self)


def _check_same_geometry(f: SampledFunction, g: SampledFunction) -> None:
    if f.spec != g.spec:
        raise ValueError(f"geometry mismatch: {f.spec} vs {g.spec}")


def fourier_transform(f: SampledFunction) -> SpectralFunction:
    """Periodic-quadrature approximation of the continuous Fourier transform.

    Exact round trip with inverse_transform (both are rescaled FFTs).
    """
    spec = f.spec
    phase = spec._alternating_phase()
    coef = spec.cell_volume * phase * np.fft.fftn(f.values)
    return SpectralFunction(spec, coef)


def inverse_transform(fhat: SpectralFunction) -> SampledFunction:
    spec = fhat.spec
    phase = spec._alternating_phase()
    vals = np.fft.ifftn(fhat.coefficients * phase / spec.cell_volume)
    return SampledFunction(spec, vals)


def convolve(g: SampledFunction, f: SampledFunction) -> SampledFunction:
    """Periodic convolution scaled by the cell volume, approximating
    (g * f)(x) = int g(y) f(x - y) dy on the period cell.

    Both inputs must share the geometry and be essentially supported well
    inside the box; wrap-around mass is the caller's responsibility (the
    kernel-aware operators report it as leakage).
    """
    _check_same_geometry(g, f)
    spec = f.spec
    conv = np.fft.ifftn(np.fft.fftn(g.values) * np.fft.fftn(f.values))
    conv = np.roll(conv, spec.samples_per_axis // 2, axis=tuple(range(spec.dim)))
    return SampledFunction(spec, conv * spec.cell_volume)


def lp_norm(f: SampledFunction, p: float, weight=None) -> float:
    """Riemann-sum L^p norm, optionally against a weight.

    `weight` may be None (Lebesgue), a Weight object from lpsquare.weights,
    or a plain array of nonnegative grid values.
    """
    if not np.isfinite(p) or p < 1:
        raise ValueError(f"p must be a finite real >= 1, got {p}")
    w = _weight_values(weight, f.spec)
    dens = np.abs(f.values) ** p
    if w is not None:
        dens = dens * w
    return float(np.sum(dens) * f.spec.cell_volume) ** (1.0 / p)


def weighted_l2_sq(f: SampledFunction, weight=None) -> float:
    """Convenience: ||f||_{L^2_w}^2 by the same Riemann sum as lp_norm."""
    w = _weight_values(weight, f.spec)
    dens = np.abs(f.values) ** 2
    if w is not None:
        dens = dens * w
    return float(np.sum(dens) * f.spec.cell_volume)


def _weight_values(weight, spec: GridSpec):
    if weight is None:
        return None
    if isinstance(weight, np.ndarray):
        if weight.shape != spec.shape:
            raise ValueError("weight array shape does not match grid")
        return weight
    # Weight objects expose grid_values(spec)
    return weight.grid_values(spec)


@dataclass(frozen=True)
class TimeGrid:
    """Dyadic-logarithmic grid of dilation parameters t with dt/t weights.

    Nodes t = 2^(k + i/m) for k in [k_min, k_max], i in [0, m); every node
    carries the weight ln(2)/m, so summing g(t) * weight approximates
    int g(t) dt/t over [2^k_min, 2^(k_max+1)).
    """

    k_min: int
    k_max: int
    substeps: int = 8

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.k_max < self.k_min:
            raise ValueError("k_max must be >= k_min")

    @property
    def nodes(self) -> np.ndarray:
        ks = np.arange(self.k_min, self.k_max + 1)
        i = np.arange(self.substeps)
        expo = (ks[:, None] + i[None, :] / self.substeps).ravel()
        return 2.0**expo

    @property
    def octaves(self) -> np.ndarray:
        """The octave index k of each node (t in [2^k, 2^(k+1)))."""
        ks = np.arange(self.k_min, self.k_max + 1)
        return np.repeat(ks, self.substeps)

    @property
    def weights(self) -> np.ndarray:
        n = (self.k_max - self.k_min + 1) * self.substeps
        return np.full(n, _LN2 / self.substeps)

    @property
    def t_min(self) -> float:
        return 2.0**self.k_min

    @property
    def t_max(self) -> float:
        # exclusive upper edge of the covered t-range
        return 2.0 ** (self.k_max + 1)

    def restrict(self, lo: float, hi: float) -> tuple:
        """(nodes, weights) with lo <= t <= hi."""
        t = self.nodes
        mask = (t >= lo) & (t <= hi)
        return t[mask], self.weights[mask]

    def to_dict(self) -> dict:
        return {"k_min": self.k_min, "k_max": self.k_max, "substeps": self.substeps}


def default_timegrid() -> TimeGrid:
    """Default truncation [2^-8, 2^4) with 8 substeps per octave."""
    return TimeGrid(-8, 3, 8)
