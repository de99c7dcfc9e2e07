"""Kernel seminorms and hypothesis certification.

Quadrature seminorms:
  tail seminorm      B_eps = int_{|x|>1} |psi(x)| |x|^eps dx
  ball seminorm      D_u   = (int_{|x|<1} |psi(x)|^u dx)^(1/u)

Pair seminorms over directions xi on the unit sphere:
  J_eps = sup_xi  iint |psi(x) psi(y)| |<xi, x-y>|^(-eps) dx dy
  L     = sup_xi  iint |psi(x) psi(y)| |log <xi, x-y>|    dx dy

The pair integrals are estimated by Monte Carlo with the separation variable
importance-sampled against the singular factor, which keeps the estimator
variance finite; divergence is reported as a heuristic flag when estimates
keep growing under region/sample doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .kernels import (
    CompactLq,
    Haar1D,
    Kernel,
    SphereFunction,
    TruncatedHomogeneous,
    majorant_l1,
)

_GROWTH_FLAG = 1.5  # consecutive-doubling growth factor treated as divergence


@dataclass(frozen=True)
class SeminormValue:
    value: float
    stderr: float = 0.0
    diverged: bool = False
    settings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": None if self.diverged else self.value,
            "stderr": self.stderr,
            "diverged": self.diverged,
            "settings": self.settings,
        }


# ---------------------------------------------------------------------------
# quadrature seminorms
# ---------------------------------------------------------------------------


def seminorm_B(kernel: Kernel, eps: float) -> SeminormValue:
    """Weighted tail mass int_{|x|>1} |psi| |x|^eps dx."""
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    settings = {"eps": eps, "kernel": kernel.name}
    if kernel.support_radius <= 1.0:
        return SeminormValue(0.0, 0.0, False, settings)

    def integrand(r):
        return kernel.angular_abs_moment(r, 1.0) * r ** (kernel.dim - 1 + eps)

    total = 0.0
    err = 0.0
    strikes = 0
    prev_total = None
    prev_v = None
    converged = False
    v = 0.0
    for i in range(48):
        lo, hi = 2.0**i, 2.0 ** (i + 1)
        if lo >= kernel.support_radius:
            converged = True
            break
        v, e = quad(integrand, lo, min(hi, kernel.support_radius), limit=200)
        total += v
        err += e
        # divergence: the annulus contributions grow and the running total
        # jumps by >= 1.5x under region doubling, twice in a row
        if prev_total is not None and prev_total > 0:
            if total >= _GROWTH_FLAG * prev_total and prev_v is not None and v >= prev_v:
                strikes += 1
                if strikes >= 2:
                    return SeminormValue(math.inf, err, True, settings)
            else:
                strikes = 0
        if total > 0 and v < 1e-12 * total:
            converged = True
            break
        prev_total = total
        prev_v = v
    if not converged:
        err = max(err, abs(v))
    return SeminormValue(float(total), float(err), False, settings)


def seminorm_D(kernel: Kernel, u: float) -> SeminormValue:
    """(int_{|x|<1} |psi|^u dx)^(1/u) with dyadic refinement toward 0."""
    if not u > 1.0:
        raise ValueError("u must exceed 1")
    settings = {"u": u, "kernel": kernel.name}
    if isinstance(kernel, Haar1D):
        return SeminormValue(2.0 ** (1.0 / u), 0.0, False, settings)
    if isinstance(kernel, TruncatedHomogeneous):
        expo = (kernel.eps - kernel.dim) * u + kernel.dim
        if expo <= 0:
            return SeminormValue(math.inf, 0.0, True, settings)
        raw = kernel.omega.power_integral(u) / expo
        return SeminormValue(raw ** (1.0 / u), 0.0, False, settings)

    def integrand(r):
        return kernel.angular_abs_moment(r, u) * r ** (kernel.dim - 1)

    total, err = quad(integrand, 0.5, 1.0, limit=200)
    strikes = 0
    prev_total = total
    prev_v = None
    for i in range(1, 48):
        lo, hi = 2.0 ** -(i + 1), 2.0**-i
        v, e = quad(integrand, lo, hi, limit=200)
        total += v
        err += e
        if (
            prev_total > 0
            and total >= _GROWTH_FLAG * prev_total
            and prev_v is not None
            and v >= prev_v
        ):
            strikes += 1
            if strikes >= 2:
                return SeminormValue(math.inf, err, True, settings)
        elif prev_total > 0 and total < _GROWTH_FLAG * prev_total:
            strikes = 0
        if total > 0 and v < 1e-13 * total:
            break
        prev_total = total
        prev_v = v
    return SeminormValue(float(total ** (1.0 / u)), float(err), False, settings)


# ---------------------------------------------------------------------------
# sampling from |psi| (shell/arc proposal with exactly known density)
# ---------------------------------------------------------------------------


class AbsSampler:
    """Draws points with density q roughly proportional to |psi|, with q known
    exactly (piecewise-uniform over geometric shells and angular arcs), so
    importance ratios |psi(x)| / q(x) stay unbiased regardless of the shell
    approximation quality."""

    def __init__(self, kernel: Kernel, shells: int = 512, tail_rtol: float = 1e-6):
        self.kernel = kernel
        l1 = kernel.abs_l1()
        self.l1 = l1
        if l1 <= 0:
            self.degenerate = True
            return
        self.degenerate = False
        r_hi = kernel.support_radius
        if not math.isfinite(r_hi):
            r_hi = 1.0
            while kernel.abs_tail_mass(r_hi) > tail_rtol * l1 and r_hi < 2.0**20:
                r_hi *= 2.0
        self.r_hi = r_hi
        self.truncated_mass = kernel.abs_tail_mass(r_hi) if not math.isfinite(
            kernel.support_radius
        ) else 0.0
        edges = np.geomspace(r_hi * 1e-7, r_hi, shells + 1)
        mids = np.sqrt(edges[:-1] * edges[1:])
        dens = np.array(
            [kernel.angular_abs_moment(r, 1.0) * r ** (kernel.dim - 1) for r in mids]
        )
        mass = dens * np.diff(edges)
        # the innermost ball gets the first shell's density as a proxy
        mass[0] += dens[0] * edges[0]
        edges = edges.copy()
        edges[0] = 0.0
        if np.sum(mass) <= 0:
            self.degenerate = True
            return
        self.edges = edges
        self.shell_p = mass / np.sum(mass)
        self.mids = mids
        if kernel.dim == 1:
            wplus = np.maximum(kernel.abs_value(mids), 1e-300)
            wminus = np.maximum(kernel.abs_value(-mids), 1e-300)
            tot = wplus + wminus
            self.side_p = np.stack([wplus / tot, wminus / tot], axis=1)
        else:
            arcs = 64
            th = (np.arange(arcs) + 0.5) * 2 * math.pi / arcs
            pts = np.stack(
                [mids[:, None] * np.cos(th)[None, :], mids[:, None] * np.sin(th)[None, :]],
                axis=-1,
            )
            w = np.maximum(kernel.abs_value(pts), 1e-300)
            self.arc_p = w / np.sum(w, axis=1, keepdims=True)
            self.arc_th = th
            self.arcs = arcs

    def draw(self, rng: np.random.Generator, size: int):
        """Returns (points (size, dim), q_density (size,))."""
        k = self.kernel
        s = rng.choice(self.shell_p.size, size=size, p=self.shell_p)
        lo, hi = self.edges[s], self.edges[s + 1]
        r = lo + (hi - lo) * rng.random(size)
        width = hi - lo
        if k.dim == 1:
            pm = rng.random(size) < self.side_p[s, 0]
            sign = np.where(pm, 1.0, -1.0)
            side_prob = np.where(pm, self.side_p[s, 0], self.side_p[s, 1])
            x = (sign * r)[:, None]
            q = self.shell_p[s] * side_prob / width
            return x, q
        a = np.empty(size, dtype=int)
        u = rng.random(size)
        for i in range(size):  # vectorized per-shell choice is not worth the memory
            a[i] = np.searchsorted(np.cumsum(self.arc_p[s[i]]), u[i])
        a = np.clip(a, 0, self.arcs - 1)
        arc_prob = self.arc_p[s, a]
        th = self.arc_th[a] + (rng.random(size) - 0.5) * (2 * math.pi / self.arcs)
        x = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        q = self.shell_p[s] * arc_prob / (width * (2 * math.pi / self.arcs) * np.maximum(r, 1e-300))
        return x, q


def _sphere_directions(dim: int, count: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    th = (np.arange(count) + 0.5) * 2 * math.pi / count
    return np.stack([np.cos(th), np.sin(th)], axis=-1)


def singular_pair_integral(
    kernel: Kernel,
    xi: np.ndarray,
    weight_kind: str,
    eps: float,
    mc_samples: int,
    rng: np.random.Generator,
    signed: bool = False,
):
    """Monte-Carlo estimate of iint f(x) g(y) G(<xi, x-y>) dx dy.

    weight_kind selects G: "power" -> |s|^(-eps); "log" -> |log|s||;
    "log_complex" -> -log|s| - i (pi/2) sgn(s).  With signed=False the pair
    density is |psi(x) psi(y)|; with signed=True it is psi(x) conj(psi(y)).

    Returns (estimate complex, stderr_re, stderr_im).
    """
    sampler = AbsSampler(kernel)
    if sampler.degenerate:
        return 0.0 + 0.0j, 0.0, 0.0
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if kernel.dim == 2:
        xi = xi / np.linalg.norm(xi)
    dim = kernel.dim
    d_full = 2.0 * sampler.r_hi
    # near-singularity band importance-sampled against the singular factor;
    # the (rare, bounded) far band handled by plain pair sampling
    d_near = min(d_full, 8.0)

    def singular_factor(s):
        if weight_kind == "power":
            return np.abs(s) ** (-eps)
        if weight_kind == "log":
            return np.abs(np.log(np.abs(s)))
        if weight_kind == "log_complex":
            return -np.log(np.abs(s)) - 0.5j * math.pi * np.sign(s)
        raise ValueError(f"unknown weight kind {weight_kind!r}")

    def pair_values(x, y):
        if signed:
            return kernel.evaluate(x) * np.conj(kernel.evaluate(y))
        return kernel.abs_value(x) * kernel.abs_value(y)

    beta = eps if weight_kind == "power" else 0.5
    norm_g = 2.0 * d_near ** (1.0 - beta) / (1.0 - beta)

    x, qx = sampler.draw(rng, mc_samples)
    u = rng.random(mc_samples)
    s = np.sign(rng.random(mc_samples) - 0.5) * d_near * u ** (1.0 / (1.0 - beta))
    s = np.where(s == 0.0, 1e-300, s)
    if dim == 1:
        d = (s * xi[0])[:, None]
        perp_norm = 1.0
    else:
        perp = np.array([-xi[1], xi[0]])
        dperp = (rng.random(mc_samples) - 0.5) * 2 * d_full
        d = s[:, None] * xi[None, :] + dperp[:, None] * perp[None, :]
        perp_norm = 2.0 * d_full
    dens_s = np.abs(s) ** (-beta) / norm_g
    contrib = pair_values(x, x - d) * singular_factor(s) / (qx * dens_s) * perp_norm
    est = complex(np.mean(contrib))
    var_re = np.var(np.real(contrib)) / mc_samples
    var_im = np.var(np.imag(contrib)) / mc_samples

    if d_near < d_full:
        xa, qa = sampler.draw(rng, mc_samples)
        xb, qb = sampler.draw(rng, mc_samples)
        sep = (xa - xb) @ xi
        far = np.abs(sep) > d_near
        pairf = pair_values(xa, xb)
        contrib2 = np.where(far, pairf * singular_factor(np.where(far, sep, 1.0)), 0.0) / (
            qa * qb
        )
        est += complex(np.mean(contrib2))
        var_re += np.var(np.real(contrib2)) / mc_samples
        var_im += np.var(np.imag(contrib2)) / mc_samples

    return est, float(math.sqrt(var_re)), float(math.sqrt(var_im))


def _pair_seminorm(
    kernel: Kernel,
    weight_kind: str,
    eps: float,
    xi_samples: int,
    mc_samples: int,
    seed: int,
) -> SeminormValue:
    settings = {
        "kind": weight_kind,
        "eps": eps,
        "xi_samples": xi_samples,
        "mc_samples": mc_samples,
        "seed": seed,
        "kernel": kernel.name,
    }
    if kernel.abs_l1() <= 0:
        return SeminormValue(0.0, 0.0, False, settings)
    dirs = _sphere_directions(kernel.dim, xi_samples)
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(len(dirs))
    best = -math.inf
    best_se = 0.0
    for xi, child in zip(dirs, children):
        rng = np.random.default_rng(child)
        # three growing estimates from one stream for the divergence heuristic
        m0 = max(mc_samples // 4, 1024)
        est0, _, _ = singular_pair_integral(kernel, xi, weight_kind, eps, m0, rng)
        est1, _, _ = singular_pair_integral(kernel, xi, weight_kind, eps, 2 * m0, rng)
        est, se, _ = singular_pair_integral(kernel, xi, weight_kind, eps, mc_samples, rng)
        if (
            abs(est0) > 0
            and abs(est1) >= _GROWTH_FLAG * abs(est0)
            and abs(est) >= _GROWTH_FLAG * abs(est1)
        ):
            return SeminormValue(math.inf, se, True, settings)
        if est.real > best:
            best = est.real
            best_se = se
    return SeminormValue(float(best), best_se, False, settings)


def seminorm_J(
    kernel: Kernel,
    eps: float,
    xi_samples: int = 64,
    mc_samples: int = 200_000,
    seed: int = 0,
) -> SeminormValue:
    """sup over sampled directions of the pair integral with |s|^(-eps)."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return _pair_seminorm(kernel, "power", eps, xi_samples, mc_samples, seed)


def seminorm_L(
    kernel: Kernel,
    xi_samples: int = 64,
    mc_samples: int = 200_000,
    seed: int = 0,
) -> SeminormValue:
    """sup over sampled directions of the pair integral with |log|s||."""
    return _pair_seminorm(kernel, "log", 0.0, xi_samples, mc_samples, seed)


# ---------------------------------------------------------------------------
# report and classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeminormReport:
    eps: float
    u: float
    q: float
    B_eps: SeminormValue
    D_u: SeminormValue
    J_eps: SeminormValue
    L: SeminormValue
    H_l1: float
    settings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "u": self.u,
            "q": self.q,
            "B_eps": self.B_eps.to_dict(),
            "D_u": self.D_u.to_dict(),
            "J_eps": self.J_eps.to_dict(),
            "L": self.L.to_dict(),
            "H_l1": self.H_l1,
            "settings": self.settings,
        }


def seminorm_report(
    kernel: Kernel,
    eps: float = 0.5,
    u: float = 2.0,
    q: float = 2.0,
    xi_samples: int = 64,
    mc_samples: int = 200_000,
    seed: int = 0,
    include_pair_seminorms: bool = True,
) -> SeminormReport:
    settings = {
        "kernel": kernel.descriptor(),
        "eps": eps,
        "u": u,
        "q": q,
        "mc_samples": mc_samples,
        "xi_samples": xi_samples,
        "seed": seed,
    }
    zero = SeminormValue(0.0, 0.0, False, {"skipped": True})
    return SeminormReport(
        eps=eps,
        u=u,
        q=q,
        B_eps=seminorm_B(kernel, eps),
        D_u=seminorm_D(kernel, u),
        J_eps=seminorm_J(kernel, eps if eps < 1 else 0.5, xi_samples, mc_samples, seed)
        if include_pair_seminorms
        else zero,
        L=seminorm_L(kernel, xi_samples, mc_samples, seed + 1)
        if include_pair_seminorms
        else zero,
        H_l1=majorant_l1(kernel),
        settings=settings,
    )


@dataclass(frozen=True)
class ClassifyParams:
    eps_grid: tuple = (0.25, 0.5, 0.75, 1.0)
    u_grid: tuple = (1.25, 1.5, 2.0)
    q_grid: tuple = (2.0, 4.0, math.inf)
    finite_cap: float = 1e12

    def to_dict(self) -> dict:
        return {
            "eps_grid": list(self.eps_grid),
            "u_grid": list(self.u_grid),
            "q_grid": ["inf" if math.isinf(q) else q for q in self.q_grid],
        }


@dataclass(frozen=True)
class TheoremApplicability:
    kernel: str
    routes: dict
    settings: dict

    def to_dict(self) -> dict:
        return {"kernel": self.kernel, "routes": self.routes, "settings": self.settings}


def _finite(v: SeminormValue, cap: float) -> bool:
    return (not v.diverged) and math.isfinite(v.value) and v.value < cap


def classify(kernel: Kernel, params: ClassifyParams = ClassifyParams()) -> TheoremApplicability:
    """Numerically verify, per boundedness route, which hypotheses hold and
    record the claimed (p, weight)-range.  This is a hypothesis check over
    finite search grids, never a proof."""
    routes = {}
    cap = params.finite_cap

    b_vals = {eps: seminorm_B(kernel, eps) for eps in params.eps_grid}
    d_vals = {u: seminorm_D(kernel, u) for u in params.u_grid}
    best_eps = [e for e, v in b_vals.items() if _finite(v, cap)]
    best_u = [u for u, v in d_vals.items() if _finite(v, cap)]
    h_l1 = majorant_l1(kernel)

    routes["full_range"] = {
        "hypotheses": {
            "tail_seminorm_finite": {
                "ok": bool(best_eps),
                "witness_eps": best_eps[:1],
                "values": {str(e): (None if v.diverged else v.value) for e, v in b_vals.items()},
            },
            "ball_seminorm_finite": {
                "ok": bool(best_u),
                "witness_u": best_u[:1],
                "values": {str(u): (None if v.diverged else v.value) for u, v in d_vals.items()},
            },
            "majorant_integrable": {"ok": math.isfinite(h_l1) and h_l1 < cap, "H_l1": h_l1},
        },
    }
    routes["full_range"]["applicable"] = all(
        h["ok"] for h in routes["full_range"]["hypotheses"].values()
    )
    routes["full_range"]["claimed_range"] = (
        "p in (1, inf), w in A_p" if routes["full_range"]["applicable"] else None
    )

    # factorized majorant |psi| <= h(|x|) Omega(x')
    prof, omega = kernel.majorant_factorization()
    q_ok = [q for q in params.q_grid if math.isfinite(omega.lq_norm(min(q, 1e6)))]
    h_int = majorant_l1(kernel)
    fact = {
        "h_nonincreasing": {"ok": prof.is_nonincreasing(1e-9)},
        "H_integrable": {"ok": math.isfinite(h_int) and h_int < cap, "H_l1": h_int},
        "omega_lq": {
            "ok": bool(q_ok),
            "largest_q": "inf" if (q_ok and math.isinf(max(q_ok))) else (max(q_ok) if q_ok else None),
        },
    }
    applicable = all(h["ok"] for h in fact.values())
    qstar = max(q_ok) if q_ok else None
    if applicable and qstar is not None:
        qprime = 1.0 if math.isinf(qstar) else qstar / (qstar - 1.0)
        claimed = f"p > {qprime:g}, w in A_(p/{qprime:g})"
    else:
        claimed = None
    routes["sphere_factorized"] = {
        "hypotheses": fact,
        "applicable": applicable,
        "claimed_range": claimed,
    }

    # compact support plus global L^q
    compact = math.isfinite(kernel.support_radius)
    lq_ok = []
    if compact:
        for q in params.q_grid:
            try:
                n = kernel.lq_norm(q)
            except NotImplementedError:
                continue
            if math.isfinite(n) and n < cap:
                lq_ok.append(q)
    qstar = max(lq_ok) if lq_ok else None
    if compact and qstar is not None:
        qprime = 1.0 if math.isinf(qstar) else qstar / (qstar - 1.0)
        claimed = f"p > {qprime:g}, w in A_(p/{qprime:g})"
    else:
        claimed = None
    routes["compact_lq"] = {
        "hypotheses": {
            "compact_support": {"ok": compact, "radius": kernel.support_radius},
            "global_lq": {"ok": qstar is not None,
                          "largest_q": "inf" if (qstar is not None and math.isinf(qstar)) else qstar},
        },
        "applicable": compact and qstar is not None,
        "claimed_range": claimed,
    }

    # rough homogeneous route
    is_rough = isinstance(kernel, TruncatedHomogeneous)
    routes["rough_homogeneous"] = {
        "hypotheses": {
            "truncated_homogeneous_form": {"ok": is_rough},
            "omega_bounded_mean_zero": {
                "ok": bool(is_rough and kernel.omega.is_mean_zero()),
            },
        },
        "applicable": bool(is_rough and kernel.omega.is_mean_zero()),
        "claimed_range": "p in (1, inf), w in A_p" if is_rough else None,
    }

    # L^2 route through logarithmic integrability (one-dimensional)
    if kernel.dim == 1:
        log_x, _ = quad(
            lambda r: kernel.angular_abs_moment(r, 1.0) * math.log(2.0 + r),
            0.0,
            kernel.support_radius if math.isfinite(kernel.support_radius) else np.inf,
            limit=300,
        )

        def log_psi_integrand(r):
            vals = kernel.abs_value(np.array([r, -r]))
            return float(np.sum(vals * np.log(2.0 + vals)))

        upper = kernel.support_radius if math.isfinite(kernel.support_radius) else np.inf
        log_psi, _ = quad(log_psi_integrand, 0.0, upper, limit=300)
        ok = math.isfinite(log_x) and math.isfinite(log_psi) and max(log_x, log_psi) < cap
        routes["l2_log"] = {
            "hypotheses": {
                "log_moment": {"ok": math.isfinite(log_x), "value": log_x},
                "log_size": {"ok": math.isfinite(log_psi), "value": log_psi},
            },
            "applicable": ok,
            "claimed_range": "p = 2, w = 1" if ok else None,
        }

    return TheoremApplicability(
        kernel=kernel.name,
        routes=routes,
        settings={"params": params.to_dict(), "kernel": kernel.descriptor()},
    )
