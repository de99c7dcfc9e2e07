"""Catalog of convolution kernels: pointwise evaluation, dilation, grid
representations for FFT convolution, radial majorants and tail masses.

Every catalog kernel has integral zero (enforced by subtracting a mean on
sampled kernels with compact support; the correction is recorded).  Two grid
representations are used by the operators:

  * kernels with a closed-form Fourier transform (the Poisson-derivative
    family) convolve through exact spectral multipliers, which is exact for
    periodic band-limited data;
  * kernels defined in physical space (Haar, truncated homogeneous, sampled
    profiles) convolve through exact cell averages where a closed-form
    antiderivative exists, pointwise samples otherwise.  Cell averages make
    the convolution agree exactly with piecewise-constant quadrature models
    of the input, which the second-difference Marcinkiewicz route relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .grid import GridSpec, SampledFunction

_SQRT3 = math.sqrt(3.0)


# ---------------------------------------------------------------------------
# sphere functions and radial profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereFunction:
    """Angular density on the unit sphere.

    dim 1: two values (at +1 and -1), surface measure sigma({+1}) =
    sigma({-1}) = 1.  dim 2: M uniformly spaced angular samples, treated as
    piecewise constant on arcs of length 2 pi / M.
    """

    dim: int
    values: np.ndarray
    nonneg: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if self.dim == 1 and vals.shape != (2,):
            raise ValueError("dim-1 sphere function needs exactly two values (+1, -1)")
        if self.dim == 2 and (vals.ndim != 1 or vals.size < 2):
            raise ValueError("dim-2 sphere function needs >= 2 angular samples")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sphere function values must be finite")
        if self.nonneg and np.any(vals < 0):
            raise ValueError("nonneg sphere function has negative samples")
        object.__setattr__(self, "values", vals)

    @property
    def surface_measure(self) -> float:
        return 2.0 if self.dim == 1 else 2.0 * math.pi

    def integral(self) -> float:
        """int Omega d sigma over the sphere."""
        if self.dim == 1:
            return float(self.values[0] + self.values[1])
        return float(np.sum(self.values) * 2.0 * math.pi / self.values.size)

    def is_mean_zero(self, tol: float = 1e-10) -> bool:
        return abs(self.integral()) <= tol

    def abs_integral(self) -> float:
        if self.dim == 1:
            return float(abs(self.values[0]) + abs(self.values[1]))
        return float(np.sum(np.abs(self.values)) * 2.0 * math.pi / self.values.size)

    def power_integral(self, power: float) -> float:
        """int |Omega|^power d sigma."""
        a = np.abs(self.values) ** power
        if self.dim == 1:
            return float(a[0] + a[1])
        return float(np.sum(a) * 2.0 * math.pi / a.size)

    def lq_norm(self, q: float) -> float:
        if math.isinf(q):
            return float(np.max(np.abs(self.values)))
        return self.power_integral(q) ** (1.0 / q)

    def evaluate_signs(self, signs: np.ndarray) -> np.ndarray:
        """dim 1: value by the sign of the coordinate (0 maps to the + side)."""
        if self.dim != 1:
            raise ValueError("evaluate_signs is one-dimensional")
        return np.where(np.asarray(signs) < 0, self.values[1], self.values[0])

    def evaluate_angles(self, theta: np.ndarray) -> np.ndarray:
        """dim 2: nearest-arc lookup for angles in radians."""
        if self.dim != 2:
            raise ValueError("evaluate_angles is two-dimensional")
        m = self.values.size
        idx = np.floor(np.mod(theta, 2.0 * math.pi) / (2.0 * math.pi) * m).astype(int)
        return self.values[np.clip(idx, 0, m - 1)]

    def evaluate_direction(self, x: np.ndarray) -> np.ndarray:
        """Value at x' = x/|x| for points x (shape (..., dim))."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return self.evaluate_signs(x[..., 0])
        return self.evaluate_angles(np.arctan2(x[..., 1], x[..., 0]))

    @staticmethod
    def uniform(dim: int, value: float = 1.0, samples: int = 64) -> "SphereFunction":
        if dim == 1:
            return SphereFunction(1, np.array([value, value]), nonneg=value >= 0)
        return SphereFunction(2, np.full(samples, value), nonneg=value >= 0)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Non-increasing radial samples h(r), used for majorants.

    Lookup is `previous-node`: for r between samples the reported value is the
    sample at the nearest radius <= r, which preserves domination.
    """

    radii: np.ndarray
    values: np.ndarray
    tail_value: float = 0.0  # constant bound used beyond the last radius

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.shape != v.shape or r.ndim != 1:
            raise ValueError("radii/values must be matching 1-D arrays")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    def is_nonincreasing(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.diff(self.values) <= tol))

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.radii, r, side="right") - 1
        out = np.where(
            idx < 0,
            self.values[0],
            self.values[np.clip(idx, 0, self.values.size - 1)],
        )
        out = np.where(r > self.radii[-1], self.tail_value, out)
        return out

    def integral(self, dim: int) -> float:
        """int h(|x|) dx over the sampled range (trapezoid rule), with the
        ball below the first radius bounded by the first sample."""
        surface = 2.0 if dim == 1 else 2.0 * math.pi
        body = surface * np.trapezoid(self.values * self.radii ** (dim - 1), self.radii)
        inner = surface * self.values[0] * self.radii[0] ** dim / dim
        return float(body + inner)


# ---------------------------------------------------------------------------
# kernel catalog
# ---------------------------------------------------------------------------


class Kernel:
    """Common interface for catalog kernels; see subclasses."""

    dim: int = 1
    name: str = "kernel"
    #: radius of the support; np.inf for kernels with unbounded support
    support_radius: float = np.inf

    # -- pointwise -----------------------------------------------------------

    def evaluate(self, x) -> np.ndarray:
        """Pointwise kernel values at x (shape (..., dim); scalars accepted in 1-D)."""
        raise NotImplementedError

    def abs_value(self, x) -> np.ndarray:
        return np.abs(self.evaluate(x))

    def _as_points(self, x) -> np.ndarray:
        """1-D kernels accept scalars or arrays of coordinates; the last axis
        is the point axis only when an explicit (..., 1) shape is passed."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.dim == 1 and (x.ndim == 1 or x.shape[-1] != 1):
            x = x[..., None]
        return x

    # -- Fourier side ---------------------------------------------------------

    has_closed_fourier: bool = False

    def fourier(self, xi) -> np.ndarray:
        """Closed-form transform at frequency vectors xi, when available."""
        raise NotImplementedError(f"{self.name} has no closed-form transform")

    # -- one-dimensional antiderivative (exact cell averages) ----------------

    has_antiderivative: bool = False

    def antiderivative(self, x) -> np.ndarray:
        """Phi(x) = int_0^x psi(s) ds for 1-D kernels with a closed form."""
        raise NotImplementedError

    # -- grid representations -------------------------------------------------

    def grid_profile(self, t: float, spec: GridSpec) -> np.ndarray:
        """Physical samples of the dilation psi_t in FFT displacement layout.

        Exact cell averages (with periodic wrapping) when the kernel has a
        closed-form antiderivative, pointwise samples otherwise.
        """
        if t <= 0:
            raise ValueError("dilation parameter t must be positive")
        d = spec.displacement_coords()
        if self.dim == 1 and self.has_antiderivative:
            c = d[..., 0]
            h = spec.step
            period = 2.0 * spec.halfwidth
            reach = t * min(self.support_radius, 1e9)
            images = int(math.ceil((reach + spec.halfwidth) / period)) + 1
            images = min(images, 64)
            acc = np.zeros_like(c)
            for m in range(-images, images + 1):
                hi = (c + h / 2 + m * period) / t
                lo = (c - h / 2 + m * period) / t
                acc = acc + (self.antiderivative(hi) - self.antiderivative(lo))
            return (acc / h).astype(complex)
        vals = self.evaluate(d / t) / t**self.dim
        return np.asarray(vals, dtype=complex)

    def convolution_multiplier(self, t: float, spec: GridSpec) -> np.ndarray:
        """DFT-domain multiplier realizing convolution with psi_t on the grid."""
        if self.has_closed_fourier:
            return np.asarray(self.fourier(t * spec.freq_grid()), dtype=complex)
        return np.fft.fftn(self.grid_profile(t, spec)) * spec.cell_volume

    # -- mass and tails -------------------------------------------------------

    def abs_tail_mass(self, r: float) -> float:
        """int_{|x| > r} |psi| dx."""
        raise NotImplementedError

    def abs_l1(self) -> float:
        return self.abs_tail_mass(0.0)

    def leakage(self, t: float, halfwidth: float) -> float:
        """Mass of psi_t outside the half-box [-R/2, R/2]^dim."""
        return self.abs_tail_mass((halfwidth / 2.0) / t)

    # -- radial structure for seminorm quadrature ----------------------------

    def angular_abs_moment(self, r: float, power: float = 1.0) -> float:
        """int_{S^{n-1}} |psi(r theta)|^power d sigma(theta)."""
        raise NotImplementedError

    def abs_decreasing_beyond(self) -> float:
        """Radius beyond which |psi| is non-increasing (support radius works)."""
        if math.isfinite(self.support_radius):
            return self.support_radius
        raise NotImplementedError

    def lq_norm(self, q: float) -> float:
        """||psi||_{L^q(R^n)}; inf norm for q = inf; math.inf when the shell
        sums diverge under refinement toward a singularity."""
        if math.isinf(q):
            rs = np.geomspace(1e-8, max(self.abs_decreasing_beyond(), 1.0), 4097)
            if self.dim == 1:
                pts = np.concatenate([-rs[::-1], rs])[:, None]
                return float(np.max(self.abs_value(pts)))
            th = np.linspace(0, 2 * math.pi, 128, endpoint=False)
            sup = 0.0
            for r in rs:
                pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
                sup = max(sup, float(np.max(self.abs_value(pts))))
            return sup

        def integrand(r):
            return self.angular_abs_moment(r, q) * r ** (self.dim - 1)

        upper = self.support_radius if math.isfinite(self.support_radius) else np.inf
        finite_top = min(upper, 1.0)
        total, _ = quad(integrand, 0.5 * finite_top, upper, limit=300)
        prev_v = None
        for i in range(1, 48):
            lo = finite_top * 2.0 ** -(i + 1)
            hi = finite_top * 2.0**-i
            v, _ = quad(integrand, lo, hi, limit=200)
            if prev_v is not None and v >= prev_v > 0 and total > 0 and v >= 0.25 * total:
                return math.inf
            total += v
            if total > 0 and v < 1e-13 * total:
                break
            prev_v = v
        if not math.isfinite(total) or total < 0:
            return math.inf
        return total ** (1.0 / q)

    # -- majorant factorization |psi| <= h(|x|) Omega(x') ----------------------

    def majorant_factorization(self):
        """Default (h, Omega) pair with Omega == 1 and h the radial majorant."""
        prof = radial_majorant(self, np.geomspace(1e-4, max(4.0, self.abs_decreasing_beyond() * 2), 512))
        return prof, SphereFunction.uniform(self.dim)

    # -- descriptors -----------------------------------------------------------

    def descriptor(self) -> dict:
        raise NotImplementedError


class Haar1D(Kernel):
    """chi_[-1,0] - chi_[0,1] on the line; at the jump points x in {-1, 0, 1}
    the pointwise values are 1, 0, -1 (the indicator convention)."""

    dim = 1
    name = "haar"
    support_radius = 1.0
    has_closed_fourier = True
    has_antiderivative = True

    def evaluate(self, x) -> np.ndarray:
        p = self._as_points(x)[..., 0]
        left = (p >= -1.0) & (p <= 0.0)
        right = (p >= 0.0) & (p <= 1.0)
        return left.astype(float) - right.astype(float)

    def fourier(self, xi) -> np.ndarray:
        """psi^(xi) = 2i sin^2(pi xi) / (pi xi), odd and purely imaginary."""
        s = np.atleast_1d(np.asarray(xi, dtype=float))
        if s.ndim > 1 and s.shape[-1] == 1:
            s = s[..., 0]
        out = np.zeros(s.shape, dtype=complex)
        nz = s != 0
        out[nz] = 2j * np.sin(math.pi * s[nz]) ** 2 / (math.pi * s[nz])
        return out

    def antiderivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -np.minimum(np.abs(x), 1.0)

    def convolution_multiplier(self, t: float, spec: GridSpec) -> np.ndarray:
        # convolve through exact cell averages, not the closed transform:
        # the discrete result then equals the exact convolution of the
        # piecewise-constant cell model, matching the second-difference
        # Marcinkiewicz evaluation to rounding error
        return np.fft.fftn(self.grid_profile(t, spec)) * spec.cell_volume

    def abs_tail_mass(self, r: float) -> float:
        return 0.0 if r >= 1.0 else 2.0 * (1.0 - max(r, 0.0))

    def angular_abs_moment(self, r: float, power: float = 1.0) -> float:
        return 2.0 if r <= 1.0 else 0.0

    def majorant_factorization(self):
        prof = RadialProfile(np.array([0.5, 1.0]), np.array([1.0, 1.0]), tail_value=0.0)
        return prof, SphereFunction.uniform(1)

    def descriptor(self) -> dict:
        return {"type": "haar"}


class PoissonDerivative(Kernel):
    """d/dt of the mass-one Poisson kernel at t = 1.

    n = 1: psi(x) = (1/pi) (x^2 - 1) / (x^2 + 1)^2
    n = 2: psi(x) = (1/(2 pi)) (|x|^2 - 2) / (|x|^2 + 1)^(5/2)
    Transform in both dimensions: psi^(xi) = -2 pi |xi| exp(-2 pi |xi|).
    """

    has_closed_fourier = True
    support_radius = np.inf

    def __init__(self, dim: int = 1):
        if dim not in (1, 2):
            raise ValueError("PoissonDerivative supports dim 1 or 2")
        self.dim = dim
        self.name = f"poisson{dim}d"

    def evaluate(self, x) -> np.ndarray:
        p = self._as_points(x)
        r2 = np.sum(p**2, axis=-1)
        if self.dim == 1:
            return (r2 - 1.0) / (math.pi * (r2 + 1.0) ** 2)
        return (r2 - 2.0) / (2.0 * math.pi * (r2 + 1.0) ** 2.5)

    def fourier(self, xi) -> np.ndarray:
        v = np.asarray(xi, dtype=float)
        if v.ndim and v.shape[-1] == self.dim:
            a = np.sqrt(np.sum(v**2, axis=-1))
        else:
            a = np.abs(v)
        return (-2.0 * math.pi * a * np.exp(-2.0 * math.pi * a)).astype(complex)

    def abs_tail_mass(self, r: float) -> float:
        a = max(r, 0.0)
        if self.dim == 1:
            edge = a / (1.0 + a * a)
            if a >= 1.0:
                return (2.0 / math.pi) * edge
            return (2.0 / math.pi) * (1.0 - edge)
        v = a * a + 1.0
        bulge = a * a / v**1.5
        if a * a >= 2.0:
            return bulge
        return 4.0 / (3.0 * _SQRT3) - bulge

    def angular_abs_moment(self, r: float, power: float = 1.0) -> float:
        x = np.array([[r]]) if self.dim == 1 else np.array([[r, 0.0]])
        a = float(self.abs_value(x)[0]) ** power
        return 2.0 * a if self.dim == 1 else 2.0 * math.pi * a

    def abs_decreasing_beyond(self) -> float:
        return _SQRT3 if self.dim == 1 else 2.0

    def descriptor(self) -> dict:
        return {"type": "poisson", "n": self.dim}


class PoissonWindow(Kernel):
    """Mass-one harmonic-extension window P_1 (NOT a cancellative kernel;
    integral 1).  Serves as the size-only smoothing slot of the bilinear
    operators, where only a (1+|x|)^(-n-delta) bound is required.

    n = 1: (1/pi) / (x^2 + 1);  n = 2: (1/(2 pi)) / (|x|^2 + 1)^(3/2).
    Transform: exp(-2 pi |xi|).
    """

    has_closed_fourier = True
    support_radius = np.inf

    def __init__(self, dim: int = 1):
        if dim not in (1, 2):
            raise ValueError("PoissonWindow supports dim 1 or 2")
        self.dim = dim
        self.name = f"poisson_window{dim}d"

    def evaluate(self, x) -> np.ndarray:
        p = self._as_points(x)
        r2 = np.sum(p**2, axis=-1)
        if self.dim == 1:
            return 1.0 / (math.pi * (r2 + 1.0))
        return 1.0 / (2.0 * math.pi * (r2 + 1.0) ** 1.5)

    def fourier(self, xi) -> np.ndarray:
        v = np.asarray(xi, dtype=float)
        if v.ndim and v.shape[-1] == self.dim:
            a = np.sqrt(np.sum(v**2, axis=-1))
        else:
            a = np.abs(v)
        return np.exp(-2.0 * math.pi * a).astype(complex)

    def abs_tail_mass(self, r: float) -> float:
        a = max(r, 0.0)
        if self.dim == 1:
            return 1.0 - (2.0 / math.pi) * math.atan(a)
        return 1.0 / math.sqrt(a * a + 1.0)

    def angular_abs_moment(self, r: float, power: float = 1.0) -> float:
        x = np.array([[r]]) if self.dim == 1 else np.array([[r, 0.0]])
        a = float(self.abs_value(x)[0]) ** power
        return 2.0 * a if self.dim == 1 else 2.0 * math.pi * a

    def abs_decreasing_beyond(self) -> float:
        return 0.0

    def descriptor(self) -> dict:
        return {"type": "poisson_window", "n": self.dim}


class TruncatedHomogeneous(Kernel):
    """|x|^(eps - n) Omega(x/|x|) on 0 < |x| <= 1, zero elsewhere; the value
    at x = 0 is defined as 0 (a null set).  Omega must have sphere mean zero."""

    def __init__(self, dim: int, eps: float, omega: SphereFunction, mean_zero_tol: float = 1e-10):
        if not 0.0 < eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")
        if omega.dim != dim:
            raise ValueError("omega dimension mismatch")
        if not omega.is_mean_zero(mean_zero_tol):
            raise ValueError(
                f"Omega must have sphere mean zero to {mean_zero_tol} (got {omega.integral()})"
            )
        self.dim = dim
        self.eps = float(eps)
        self.omega = omega
        self.name = f"trunc_hom{dim}d"
        self.support_radius = 1.0
        self.has_antiderivative = dim == 1

    def evaluate(self, x) -> np.ndarray:
        p = self._as_points(x)
        r = np.sqrt(np.sum(p**2, axis=-1))
        out = np.zeros_like(r)
        mask = (r > 0) & (r <= 1.0)
        if np.any(mask):
            ang = self.omega.evaluate_direction(p[mask])
            out[mask] = r[mask] ** (self.eps - self.dim) * ang
        return out

    def antiderivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        plus, minus = self.omega.values[0], self.omega.values[1]
        pos = plus * np.minimum(np.abs(x), 1.0) ** self.eps / self.eps
        neg = -minus * np.minimum(np.abs(x), 1.0) ** self.eps / self.eps
        return np.where(x >= 0, pos, neg)

    def grid_profile(self, t: float, spec: GridSpec) -> np.ndarray:
        if self.dim == 1:
            return super().grid_profile(t, spec)
        # 2-D: pointwise samples with sub-cell refinement near the singularity
        d = spec.displacement_coords()
        vals = self.evaluate(d / t) / t**2
        h = spec.step
        r = np.sqrt(np.sum(d**2, axis=-1))
        near = r < 4.0 * h
        if np.any(near):
            sub = 9
            off = (np.arange(sub) + 0.5) / sub - 0.5
            ox, oy = np.meshgrid(off * h, off * h, indexing="ij")
            pts = d[near][:, None, :] + np.stack([ox.ravel(), oy.ravel()], axis=-1)[None, :, :]
            rr = np.sqrt(np.sum(pts**2, axis=-1))
            pv = np.zeros_like(rr)
            good = rr > 0
            pv[good] = self.evaluate((pts / t)[good]) / t**2
            vals[near] = np.mean(pv, axis=1)
        return vals.astype(complex)

    def abs_tail_mass(self, r: float) -> float:
        if r >= 1.0:
            return 0.0
        a = max(r, 0.0)
        return self.omega.abs_integral() * (1.0 - a**self.eps) / self.eps

    def angular_abs_moment(self, r: float, power: float = 1.0) -> float:
        if r <= 0 or r > 1.0:
            return 0.0
        return r ** ((self.eps - self.dim) * power) * self.omega.power_integral(power)

    def lq_norm(self, q: float) -> float:
        if math.isinf(q):
            if self.eps >= self.dim:
                return float(np.max(np.abs(self.omega.values)))
            return math.inf
        expo = (self.eps - self.dim) * q + self.dim
        if expo <= 0:
            return math.inf
        return (self.omega.power_integral(q) / expo) ** (1.0 / q)

    def majorant_factorization(self):
        rs = np.geomspace(1e-6, 1.0, 512)
        prof = RadialProfile(rs, rs ** (self.eps - self.dim), tail_value=0.0)
        omega_abs = SphereFunction(self.dim, np.abs(self.omega.values), nonneg=True)
        return prof, omega_abs

    def descriptor(self) -> dict:
        return {
            "type": "trunc_hom",
            "n": self.dim,
            "eps": self.eps,
            "omega": self.omega.values.tolist(),
        }


class CompactLq(Kernel):
    """Radial kernel from a sampled profile on the unit ball, mean-corrected.

    The profile is linearly interpolated between the sample radii; values
    outside |x| > 1 vanish.  A constant is subtracted on the ball so the
    integral is zero; the enforced correction is recorded.
    """

    def __init__(self, dim: int, q: float, radii, values):
        if q < 2:
            raise ValueError("CompactLq requires q >= 2")
        self.dim = dim
        self.q = float(q)
        r = np.asarray(radii, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape:
            raise ValueError("radii/values must be matching 1-D arrays")
        if np.any(np.diff(r) <= 0) or r[0] < 0 or r[-1] > 1.0:
            raise ValueError("radii must increase within [0, 1]")
        # knots padded to cover [0, 1] exactly (flat inward, zero outward)
        kr, kv = r, v
        if kr[0] > 0.0:
            kr = np.concatenate([[0.0], kr])
            kv = np.concatenate([[kv[0]], kv])
        if kr[-1] < 1.0:
            kr = np.concatenate([kr, [1.0]])
            kv = np.concatenate([kv, [0.0]])
        self.radii = r
        self.profile = v
        self._knot_r = kr
        self._knot_v = kv
        self.name = f"compact_lq{dim}d"
        self.support_radius = 1.0
        self.has_antiderivative = dim == 1
        ball = 2.0 if dim == 1 else math.pi
        surface = 2.0 if dim == 1 else 2.0 * math.pi
        if dim == 1:
            # exact integral of the piecewise-linear profile
            seg = 0.5 * (kv[:-1] + kv[1:]) * np.diff(kr)
            self._cum_w = np.concatenate([[0.0], np.cumsum(seg)])
            raw = surface * self._cum_w[-1]
        else:
            rr = np.linspace(0.0, 1.0, 8193)
            vv = np.interp(rr, kr, kv)
            raw = surface * np.trapezoid(vv * rr, rr)
        self.mean_correction = raw / ball
        self._ball_volume = ball

    def _radial(self, r: np.ndarray) -> np.ndarray:
        vals = np.interp(r, self._knot_r, self._knot_v) - self.mean_correction
        return np.where(r <= 1.0, vals, 0.0)

    def evaluate(self, x) -> np.ndarray:
        p = self._as_points(x)
        r = np.sqrt(np.sum(p**2, axis=-1))
        return self._radial(r)

    def antiderivative(self, x) -> np.ndarray:
        """Phi(x) = int_0^x psi (dim 1): exact segment integrals of the
        piecewise-linear profile minus the mean correction; constant beyond
        the support because the corrected profile integrates to zero."""
        x = np.asarray(x, dtype=float)
        a = np.minimum(np.abs(x), 1.0)
        idx = np.clip(np.searchsorted(self._knot_r, a, side="right") - 1, 0,
                      self._knot_r.size - 2)
        r0 = self._knot_r[idx]
        v0 = self._knot_v[idx]
        dr = self._knot_r[idx + 1] - r0
        slope = np.where(dr > 0, (self._knot_v[idx + 1] - v0) / np.maximum(dr, 1e-300), 0.0)
        local = v0 * (a - r0) + 0.5 * slope * (a - r0) ** 2
        w_of_a = self._cum_w[idx] + local
        return np.sign(x) * (w_of_a - self.mean_correction * a)

    def abs_tail_mass(self, r: float) -> float:
        if r >= 1.0:
            return 0.0
        surface = 2.0 if self.dim == 1 else 2.0 * math.pi
        rr = np.linspace(max(r, 0.0), 1.0, 4097)
        return float(surface * np.trapezoid(np.abs(self._radial(rr)) * rr ** (self.dim - 1), rr))

    def angular_abs_moment(self, r: float, power: float = 1.0) -> float:
        surface = 2.0 if self.dim == 1 else 2.0 * math.pi
        return surface * float(np.abs(self._radial(np.array([r])))[0]) ** power

    def descriptor(self) -> dict:
        return {
            "type": "compact_lq",
            "n": self.dim,
            "q": self.q,
            "radii": self.radii.tolist(),
            "values": self.profile.tolist(),
        }


class CustomKernel(Kernel):
    """Kernel from a user callable.

    `func` maps points (shape (..., dim)) to values.  A finite
    `support_radius` enables mean-zero enforcement (constant subtraction on
    the support) and exact leakage accounting; `support_radius=inf` is allowed
    for decay studies, in which case the caller vouches for cancellation and
    the measured raw integral is recorded instead of corrected.
    """

    def __init__(
        self,
        dim: int,
        func,
        support_radius: float = 1.0,
        name: str = "custom",
        enforce_mean_zero: bool = True,
    ):
        self.dim = dim
        self._func = func
        self.support_radius = float(support_radius)
        self.name = name
        self.enforce_mean_zero = enforce_mean_zero
        self.mean_correction = 0.0
        self.raw_integral = self._integral_raw()
        if enforce_mean_zero and math.isfinite(self.support_radius):
            ball = (
                2.0 * self.support_radius
                if dim == 1
                else math.pi * self.support_radius**2
            )
            self.mean_correction = self.raw_integral / ball

    def _integral_raw(self) -> float:
        upper = self.support_radius if math.isfinite(self.support_radius) else np.inf
        if self.dim == 1:
            val, _ = quad(
                lambda r: float(np.real(self._func(np.array([[r]]))[0] + self._func(np.array([[-r]]))[0])),
                0.0,
                upper,
                limit=400,
            )
            return val
        th = np.linspace(0, 2 * math.pi, 64, endpoint=False)

        def ring(r):
            pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
            return float(np.mean(np.real(self._func(pts)))) * 2 * math.pi * r

        val, _ = quad(ring, 0.0, upper if math.isfinite(upper) else 64.0, limit=400)
        return val

    def evaluate(self, x) -> np.ndarray:
        p = self._as_points(x)
        vals = np.asarray(self._func(p))
        if self.mean_correction:
            r = np.sqrt(np.sum(p**2, axis=-1))
            vals = vals - self.mean_correction * (r <= self.support_radius)
        return vals

    def abs_tail_mass(self, r: float) -> float:
        upper = self.support_radius if math.isfinite(self.support_radius) else np.inf
        if r >= upper:
            return 0.0
        val, _ = quad(
            lambda s: self.angular_abs_moment(s, 1.0) * s ** (self.dim - 1),
            r,
            upper,
            limit=400,
        )
        return val

    def angular_abs_moment(self, r: float, power: float = 1.0) -> float:
        if self.dim == 1:
            pts = np.array([[r], [-r]])
            a = self.abs_value(pts) ** power
            return float(a[0] + a[1])
        th = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        return float(np.mean(self.abs_value(pts) ** power)) * 2.0 * math.pi

    def abs_decreasing_beyond(self) -> float:
        if math.isfinite(self.support_radius):
            return self.support_radius
        return 64.0  # decay kernels are expected monotone well before this

    def descriptor(self) -> dict:
        return {"type": "custom", "n": self.dim, "name": self.name,
                "support_radius": self.support_radius}


# ---------------------------------------------------------------------------
# catalog-level operations
# ---------------------------------------------------------------------------


def dilate_sample(kernel: Kernel, t: float, spec: GridSpec):
    """Pointwise samples of psi_t(x) = t^-n psi(x/t) on the grid.

    Returns (SampledFunction, leakage) where leakage is the kernel mass
    outside the half-box at this dilation; large leakage is flagged by the
    convolution operators, not here.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x = spec.coords()
    vals = kernel.evaluate(x / t) / t**kernel.dim
    f = SampledFunction(spec, np.asarray(vals, dtype=complex))
    return f, kernel.leakage(t, spec.halfwidth)


def radial_majorant(kernel: Kernel, radii) -> RadialProfile:
    """Least non-increasing radial majorant h(r) = sup_{|y| >= r} |psi(y)|,
    computed from dense sampling plus the kernel's monotone-tail radius."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    r_hi = max(kernel.abs_decreasing_beyond(), radii[-1]) * (1.0 + 1e-12)
    r_lo = min(radii[0], 1e-6)
    dense = np.unique(np.concatenate([np.geomspace(max(r_lo, 1e-12), r_hi, 4096), radii]))
    if kernel.dim == 1:
        pts = dense[:, None]
        vals = np.maximum(kernel.abs_value(pts), kernel.abs_value(-pts))
    else:
        th = np.linspace(0, 2 * math.pi, 96, endpoint=False)
        ct, st = np.cos(th), np.sin(th)
        pts = np.stack(
            [dense[:, None] * ct[None, :], dense[:, None] * st[None, :]], axis=-1
        )
        vals = np.max(kernel.abs_value(pts), axis=1)
    # beyond the dense range |psi| is non-increasing, so the running tail-sup
    # seeded with the boundary value is the exact tail supremum there
    if math.isfinite(kernel.support_radius) and r_hi >= kernel.support_radius:
        beyond = 0.0
    else:
        beyond = float(vals[-1])
    tail = np.maximum.accumulate(vals[::-1])[::-1]
    tail = np.maximum(tail, beyond)
    idx = np.searchsorted(dense, radii, side="right") - 1
    idx = np.clip(idx, 0, dense.size - 1)
    return RadialProfile(radii, tail[idx], tail_value=beyond)


def majorant_l1(kernel: Kernel, r_max: float = 512.0) -> float:
    """int H, H(x) = h(|x|): dense-profile quadrature plus the analytic tail."""
    rs = np.geomspace(1e-6, r_max, 8192)
    prof = radial_majorant(kernel, rs)
    surface = 2.0 if kernel.dim == 1 else 2.0 * math.pi
    body = surface * np.trapezoid(prof.values * rs ** (kernel.dim - 1), rs)
    inner = surface * prof.values[0] * rs[0] ** kernel.dim / kernel.dim
    # beyond r_max the majorant equals |psi| (monotone regime), so the tail
    # mass of |psi| bounds the remainder exactly
    tail = kernel.abs_tail_mass(r_max)
    return float(body + inner + tail)


# ---------------------------------------------------------------------------
# JSON descriptors
# ---------------------------------------------------------------------------


def kernel_from_descriptor(desc: dict) -> Kernel:
    """Build a catalog kernel from its JSON descriptor."""
    kind = desc.get("type")
    if kind == "haar":
        return Haar1D()
    if kind == "poisson":
        return PoissonDerivative(int(desc.get("n", 1)))
    if kind == "trunc_hom":
        n = int(desc.get("n", 1))
        omega = SphereFunction(n, np.asarray(desc["omega"], dtype=float))
        return TruncatedHomogeneous(n, float(desc["eps"]), omega)
    if kind == "compact_lq":
        return CompactLq(
            int(desc.get("n", 1)),
            float(desc.get("q", 2.0)),
            np.asarray(desc["radii"], dtype=float),
            np.asarray(desc["values"], dtype=float),
        )
    if kind == "custom":
        raise ValueError("custom kernels are a library-level construct; build them in code")
    raise ValueError(f"unknown kernel type {kind!r}")
