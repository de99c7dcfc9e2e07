import math

import numpy as np
import pytest

from lpsquare.fourier_checks import (
    check_14,
    decay_profile,
    default_directions,
    lemma1_check,
    prop3_identity,
    transform_values,
)
from lpsquare.grid import TimeGrid
from lpsquare.kernels import (
    CustomKernel,
    Haar1D,
    PoissonDerivative,
    SphereFunction,
    TruncatedHomogeneous,
)

HAAR = Haar1D()
POISSON = PoissonDerivative(1)


def zero_kernel():
    return CustomKernel(1, lambda p: np.zeros(p.shape[:-1]), support_radius=1.0,
                        name="zero", enforce_mean_zero=False)


def broken_kernel():
    # deliberately nonzero mean: the small-frequency side must fail
    return CustomKernel(1, lambda p: np.exp(-np.pi * p[..., 0] ** 2),
                        support_radius=6.0, name="broken", enforce_mean_zero=False)


def test_transform_values_fallback_matches_closed_form():
    # compact custom clone of the two-sided step kernel vs the closed form
    clone = CustomKernel(1, lambda p: HAAR.evaluate(p[..., 0]), support_radius=1.0,
                         name="haar_clone", enforce_mean_zero=False)
    xi = np.linspace(-3, 3, 401)[:, None]
    got = transform_values(clone, xi)
    expect = HAAR.fourier(xi)
    assert np.max(np.abs(got - expect)) < 2e-4


def test_decay_profile_zero_kernel():
    prof = decay_profile(zero_kernel(), radii=np.geomspace(2**-8, 2**8, 17))
    assert np.all(prof.table == 0.0)


def test_decay_profile_haar_slopes():
    prof = decay_profile(HAAR)
    assert 1.8 <= prof.fitted_slope(2**-8, 2**-4) <= 2.2
    assert -2.2 <= prof.fitted_slope(2**4, 2**8) <= -1.8


def test_decay_profile_requires_span():
    with pytest.raises(ValueError):
        decay_profile(HAAR, radii=np.geomspace(0.1, 10.0, 9))
    with pytest.raises(ValueError):
        decay_profile(HAAR, t_substeps=8)


def test_profile_direction_independence_for_radial_kernel():
    p2 = PoissonDerivative(2)
    prof = decay_profile(p2, default_directions(2, 8), np.geomspace(2**-8, 2**8, 17))
    assert np.max(np.abs(prof.table - prof.table[0:1, :])) <= 1e-8


def test_profile_vanishes_toward_zero_frequency():
    # mean-zero catalog kernels: I(xi) -> 0 monotonically over decade endpoints
    radii = np.geomspace(2**-8, 2**8, 17)
    trunc = TruncatedHomogeneous(1, 0.5, SphereFunction(1, np.array([1.0, -1.0])))
    for k in (HAAR, POISSON, trunc):
        prof = decay_profile(k, radii=radii)
        low = prof.table[0][:5]
        assert np.all(np.diff(low) > 0), k.name  # rising away from 0
        assert low[0] < 1e-2 * prof.table[0].max()


def test_check_14_haar_holds_and_stable():
    res = check_14(HAAR, 0.5)
    assert res["holds"]
    assert res["growth"] < 1.10
    assert res["measured_c"] > 0


def test_check_14_zero_kernel():
    res = check_14(zero_kernel(), 0.5)
    assert res["holds"]
    assert res["measured_c"] == 0.0


def test_check_14_broken_kernel_fails():
    res = check_14(broken_kernel(), 0.5)
    assert not res["holds"]


def test_lemma1_haar_bounded_and_stable():
    res = lemma1_check(HAAR, 1.0)
    assert res["stable"]
    # |psi^(xi)|/|xi| -> 2 pi at 0 for the two-sided step kernel
    assert res["measured_sup"] == pytest.approx(2 * math.pi, rel=1e-3)


def test_lemma1_zero_kernel():
    assert lemma1_check(zero_kernel(), 0.5)["measured_sup"] == 0.0


def test_lemma1_scales_linearly():
    doubled = CustomKernel(1, lambda p: 2.0 * HAAR.evaluate(p[..., 0]),
                           support_radius=1.0, name="haar2x", enforce_mean_zero=False)
    a = lemma1_check(HAAR, 1.0)["measured_sup"]
    b = lemma1_check(doubled, 1.0)["measured_sup"]
    assert b == pytest.approx(2.0 * a, rel=1e-6)


def test_prop3_haar():
    res = prop3_identity(HAAR, np.array([1.0]), mc_samples=400_000, seed=3)
    assert res["lhs"] == pytest.approx(4 * math.log(2), rel=1e-4)
    assert res["rel_gap"] <= 0.01
    assert abs(res["rhs_im"]) <= 3.5 * res["stderr_im"]
    assert not res["tail_flag"]


def test_prop3_poisson_lhs_quarter():
    for xi in (np.array([1.0]), np.array([-1.0])):
        res = prop3_identity(POISSON, xi, mc_samples=100_000, seed=4)
        assert res["lhs"] == pytest.approx(0.25, rel=1e-6)


def test_prop3_zero_kernel():
    res = prop3_identity(zero_kernel(), np.array([1.0]), mc_samples=1000, seed=0)
    assert res["lhs"] == 0.0
    assert res["rhs_re"] == 0.0


def test_prop3_lhs_reflection_invariant():
    a = prop3_identity(HAAR, np.array([1.0]), mc_samples=1000, seed=0)["lhs"]
    b = prop3_identity(HAAR, np.array([-1.0]), mc_samples=1000, seed=0)["lhs"]
    assert abs(a - b) <= 1e-10 * max(a, 1.0)
