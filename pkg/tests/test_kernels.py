import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from lpsquare.grid import GridSpec, default_grid
from lpsquare.kernels import (
    CompactLq,
    CustomKernel,
    Haar1D,
    PoissonDerivative,
    PoissonWindow,
    RadialProfile,
    SphereFunction,
    TruncatedHomogeneous,
    dilate_sample,
    kernel_from_descriptor,
    majorant_l1,
    radial_majorant,
)

SPEC = default_grid(1)


def catalog_1d():
    return [
        Haar1D(),
        PoissonDerivative(1),
        TruncatedHomogeneous(1, 0.5, SphereFunction(1, np.array([1.0, -1.0]))),
        CompactLq(1, 2.0, np.linspace(0, 1, 9),
                  np.array([1.0, 1.0, 0.5, -0.5, -1.0, -0.5, 0.3, 0.1, 0.0])),
    ]


def test_haar_pointwise_values():
    h = Haar1D()
    assert h.evaluate(np.array([-0.5]))[0] == 1.0
    assert h.evaluate(np.array([2.0]))[0] == 0.0
    assert h.evaluate(np.array([0.0]))[0] == 0.0


def test_poisson_derivative_at_zero_and_finite_difference():
    p = PoissonDerivative(1)
    assert abs(p.evaluate(np.array([0.0]))[0] - (-1.0 / math.pi)) < 1e-15
    # finite difference in the dilation parameter of the mass-one kernel
    def P(t, x):
        return t / (math.pi * (x * x + t * t))

    d = 1e-6
    for x in (0.0, 0.7, 2.5):
        fd = (P(1 + d, x) - P(1 - d, x)) / (2 * d)
        assert abs(p.evaluate(np.array([x]))[0] - fd) < 1e-7


def test_poisson_fourier_forms():
    p = PoissonDerivative(1)
    xi = np.array([0.25, 1.0, -2.0])
    got = p.fourier(xi)
    expect = -2 * np.pi * np.abs(xi) * np.exp(-2 * np.pi * np.abs(xi))
    assert np.allclose(got, expect, atol=1e-14)

    w = PoissonWindow(1)
    assert np.allclose(w.fourier(xi), np.exp(-2 * np.pi * np.abs(xi)))
    # mass-one window
    val, _ = quad(lambda x: w.evaluate(np.array([x]))[0], -np.inf, np.inf)
    assert abs(val - 1.0) < 1e-9


def test_catalog_cancellation_on_default_grid():
    # the convolution representation must carry exactly zero mean
    for k in catalog_1d():
        for t in (2.0**-4, 0.5, 1.0, 4.0, 16.0):
            dc = k.convolution_multiplier(t, SPEC).ravel()[0]
            assert abs(dc) <= 1e-8, (k.name, t)
    p2 = PoissonDerivative(2)
    spec2 = GridSpec(2, 8.0, 128)
    assert abs(p2.convolution_multiplier(1.0, spec2).ravel()[0]) <= 1e-12


def test_dilate_sample_reproduces_evaluate_at_t1():
    for k in catalog_1d():
        f, _ = dilate_sample(k, 1.0, SPEC)
        direct = k.evaluate(SPEC.coords())
        assert np.max(np.abs(f.values - direct)) == 0.0, k.name


def test_dilate_sample_haar_mass_and_sup_scaling():
    h = Haar1D()
    base_sup = np.max(np.abs(dilate_sample(h, 1.0, SPEC)[0].values))
    for t in np.geomspace(0.25, 4.0, 9):
        f, leak = dilate_sample(h, t, SPEC)
        assert abs(f.integral()) <= 1e-8
        assert np.max(np.abs(f.values)) == base_sup / t
        assert leak == 0.0


def test_dilate_sample_flags_leakage_without_raising():
    h = Haar1D()
    f, leak = dilate_sample(h, 20.0, SPEC)  # support wider than the half-box
    assert leak > 0.0


def test_abs_tail_mass_matches_quadrature():
    p = PoissonDerivative(1)
    for a in (0.3, 1.0, 2.5):
        num = 2 * quad(lambda s: abs(p.evaluate(np.array([s]))[0]), a, np.inf)[0]
        assert abs(p.abs_tail_mass(a) - num) < 1e-9
    p2 = PoissonDerivative(2)
    for a in (0.0, 1.0, 3.0):
        num = quad(lambda r: p2.angular_abs_moment(r) * r, a, np.inf, limit=300)[0]
        assert abs(p2.abs_tail_mass(a) - num) < 1e-7
    th = TruncatedHomogeneous(1, 0.5, SphereFunction(1, np.array([1.0, -1.0])))
    assert abs(th.abs_tail_mass(0.0) - 2.0 / 0.5) < 1e-12
    assert th.abs_tail_mass(1.0) == 0.0


def test_radial_majorant_haar():
    prof = radial_majorant(Haar1D(), np.array([0.25, 0.5, 0.99, 1.01, 2.0]))
    assert prof.is_nonincreasing()
    assert np.allclose(prof.values[:3], 1.0)
    assert np.allclose(prof.values[3:], 0.0)


def test_radial_majorant_dominates_everywhere():
    radii = np.geomspace(1e-3, 8.0, 400)
    for k in catalog_1d():
        prof = radial_majorant(k, radii)
        assert prof.is_nonincreasing(), k.name
        pts = radii[:, None]
        vals = np.maximum(k.abs_value(pts), k.abs_value(-pts))
        assert np.all(prof(radii) >= vals - 1e-12), k.name


def test_poisson_majorant_l1_within_2pct_of_oracle():
    # oracle: piecewise closed form of the tail-sup, integrated adaptively
    psi = lambda r: (1 - r**2) / (math.pi * (1 + r**2) ** 2)  # |psi| on [0,1]
    psi_out = lambda r: (r**2 - 1) / (math.pi * (1 + r**2) ** 2)
    plateau = 1.0 / (8 * math.pi)
    rstar = brentq(lambda r: psi(r) - plateau, 0, 1)
    oracle = 2 * (
        quad(psi, 0, rstar)[0]
        + (math.sqrt(3) - rstar) * plateau
        + quad(psi_out, math.sqrt(3), np.inf)[0]
    )
    got = majorant_l1(PoissonDerivative(1))
    assert abs(got - oracle) <= 0.02 * oracle


def test_truncated_homogeneous_requires_mean_zero():
    with pytest.raises(ValueError):
        TruncatedHomogeneous(1, 0.5, SphereFunction(1, np.array([1.0, -0.5])))
    with pytest.raises(ValueError):
        TruncatedHomogeneous(1, 1.5, SphereFunction(1, np.array([1.0, -1.0])))


def test_truncated_homogeneous_l1_converges():
    th = TruncatedHomogeneous(1, 0.5, SphereFunction(1, np.array([1.0, -1.0])))
    # analytic: (|O+| + |O-|) / eps
    assert abs(th.abs_l1() - 4.0) < 1e-3 * 4.0


def test_custom_kernel_mean_enforcement_reported():
    ck = CustomKernel(1, lambda p: np.exp(-np.abs(p[..., 0])), support_radius=4.0,
                      name="bump")
    assert ck.mean_correction != 0.0
    val, _ = quad(lambda r: float(ck.evaluate(np.array([r]))[0] + ck.evaluate(np.array([-r]))[0]), 0, 4.0)
    assert abs(val) < 1e-6


def test_sphere_function_checks():
    om = SphereFunction(1, np.array([1.0, -1.0]))
    assert om.is_mean_zero()
    assert om.abs_integral() == 2.0
    assert om.lq_norm(2.0) == pytest.approx(math.sqrt(2.0))
    assert om.lq_norm(math.inf) == 1.0
    with pytest.raises(ValueError):
        SphereFunction(1, np.array([1.0, -1.0]), nonneg=True)
    om2 = SphereFunction(2, np.where(np.arange(64) < 32, 1.0, -1.0))
    assert om2.is_mean_zero()
    th = np.array([0.1, np.pi + 0.1])
    assert np.allclose(om2.evaluate_angles(th), [1.0, -1.0])


def test_radial_profile_lookup_and_integral():
    prof = RadialProfile(np.array([1.0, 2.0, 4.0]), np.array([3.0, 2.0, 1.0]), tail_value=0.5)
    assert prof(np.array([0.5]))[0] == 3.0  # below first radius
    assert prof(np.array([3.0]))[0] == 2.0  # previous-node lookup
    assert prof(np.array([5.0]))[0] == 0.5
    assert prof.integral(1) > 0


def test_descriptor_roundtrip():
    for k in catalog_1d():
        d = k.descriptor()
        if d["type"] == "custom":
            continue
        k2 = kernel_from_descriptor(d)
        x = np.linspace(-2, 2, 101)
        assert np.allclose(k2.evaluate(x), k.evaluate(x))
    with pytest.raises(ValueError):
        kernel_from_descriptor({"type": "nope"})


def test_poisson_2d_evaluate_and_mass():
    p2 = PoissonDerivative(2)
    # mass-one check of the underlying kernel: int psi = d/dt [1] = 0
    val, _ = quad(lambda r: p2.angular_abs_moment(r, 1.0) * r, 0, np.inf, limit=300)
    assert val == pytest.approx(p2.abs_l1(), rel=1e-6)
    got = p2.evaluate(np.array([[0.0, 0.0]]))[0]
    assert got == pytest.approx(-2.0 / (2 * math.pi))
