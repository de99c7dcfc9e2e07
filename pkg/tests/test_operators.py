import math

import numpy as np
import pytest

from lpsquare.grid import GridSpec, SampledFunction, TimeGrid, default_grid, lp_norm
from lpsquare.harness import band_limited_function, gaussian_function, step_function
from lpsquare.kernels import (
    CustomKernel,
    Haar1D,
    PoissonDerivative,
    SphereFunction,
    TruncatedHomogeneous,
)
from lpsquare.operators import (
    DilationBank,
    LeakageError,
    LPDecomposition,
    check_15,
    lp_blocks,
    marcinkiewicz_1d,
    maximal_omega,
    square_function,
    sup_dilation,
    tj_diagnostic,
    tj_slope,
)
from lpsquare.weights import PowerWeight

SPEC = default_grid(1)
HAAR = Haar1D()
POISSON = PoissonDerivative(1)
TG = TimeGrid(-6, 2, 8)


@pytest.fixture(scope="module")
def haar_bank():
    return DilationBank.build(HAAR, TG, SPEC)


def rand_band(seed, band=(0.25, 4.0)):
    return band_limited_function(SPEC, band, np.random.default_rng(seed))


def test_square_function_zero(haar_bank):
    z = SampledFunction(SPEC, np.zeros(SPEC.shape, dtype=complex))
    res = square_function(HAAR, z, TG, bank=haar_bank)
    assert np.all(res.values.values == 0)


def test_haar_matches_marcinkiewicz(haar_bank):
    worst = 0.0
    for seed in range(10):
        f = rand_band(seed)
        s1 = square_function(HAAR, f, TG, bank=haar_bank).values.values
        s2 = marcinkiewicz_1d(f, TG).values
        worst = max(worst, float(np.max(np.abs(s1 - s2))))
    assert worst <= 1e-8


def test_marcinkiewicz_constant_vanishes():
    c = SampledFunction(SPEC, np.full(SPEC.shape, 2.5, dtype=complex))
    assert np.max(np.abs(marcinkiewicz_1d(c, TG).values)) <= 1e-10


def test_marcinkiewicz_zero():
    z = SampledFunction(SPEC, np.zeros(SPEC.shape, dtype=complex))
    assert np.all(marcinkiewicz_1d(z, TG).values == 0)


def test_poisson_plancherel_constant():
    tg = TimeGrid(-8, 3, 8)
    bank = DilationBank.build(POISSON, tg, SPEC)
    for seed in range(5):
        f = rand_band(seed, band=(0.5, 2.0))
        sf = square_function(POISSON, f, tg, bank=bank)
        ratio = (lp_norm(sf.values, 2) / lp_norm(f, 2)) ** 2
        assert 0.2375 <= ratio <= 0.2625


def test_square_function_sublinear(haar_bank):
    f, g = rand_band(1), rand_band(2)
    Sf = square_function(HAAR, f, TG, bank=haar_bank).values.values
    Sg = square_function(HAAR, g, TG, bank=haar_bank).values.values
    Sfg = square_function(HAAR, f + g, TG, bank=haar_bank).values.values
    assert np.max(Sfg - Sf - Sg) <= 1e-9


def test_square_function_translation_equivariance(haar_bank):
    f = rand_band(3)
    shift = 129
    fs = SampledFunction(SPEC, np.roll(f.values, shift))
    a = square_function(HAAR, fs, TG, bank=haar_bank).values.values
    b = np.roll(square_function(HAAR, f, TG, bank=haar_bank).values.values, shift)
    assert np.max(np.abs(a - b)) <= 1e-10


def test_square_function_dilation_covariance():
    # S(f(2.))(x) = S(f)(2x) when the dilation grids shift by one octave
    f = rand_band(4, band=(0.5, 2.0))
    n = SPEC.samples_per_axis
    coef = np.fft.fft(f.values)
    keep = np.abs(coef) > 1e-6 * np.max(np.abs(coef))
    coef2 = np.zeros_like(coef)
    for k in np.nonzero(keep)[0]:
        signed = k if k < n // 2 else k - n
        # alternating phase: the box is anchored at -R, so doubling the
        # frequency index flips the series-coefficient sign convention
        coef2[(2 * signed) % n] = coef[k] * (-1.0) ** signed
    f2 = SampledFunction(SPEC, np.fft.ifft(coef2))
    sA = square_function(POISSON, f, TimeGrid(-5, 2, 8)).values.values
    sB = square_function(POISSON, f2, TimeGrid(-6, 1, 8)).values.values
    x = SPEC.axis_coords()
    idx2 = (np.round((2 * x + SPEC.halfwidth) / SPEC.step).astype(int)) % n
    assert np.max(np.abs(sB - sA[idx2])) <= 1e-8 * max(1.0, np.max(sA))


def test_square_function_leakage_error():
    f = rand_band(5)
    with pytest.raises(LeakageError) as err:
        square_function(HAAR, f, TimeGrid(3, 4, 2))
    assert err.value.t >= 8.0


def test_square_function_tail_report(haar_bank):
    f = rand_band(6)
    res = square_function(HAAR, f, TG, bank=haar_bank)
    assert res.tail_estimate >= 0.0
    assert res.leakage["max_leakage"] == 0.0


def test_maximal_omega_examples():
    z = SampledFunction(SPEC, np.zeros(SPEC.shape, dtype=complex))
    om = SphereFunction.uniform(1)
    assert np.all(maximal_omega(z, om).values == 0)
    f = step_function(SPEC, -1.0, 1.0)
    got = maximal_omega(f, om)
    i0 = SPEC.samples_per_axis // 2
    assert got.values[i0].real == pytest.approx(2.0, abs=1e-12)
    doubled = maximal_omega(2.0 * f, om)
    assert np.allclose(doubled.values, 2.0 * got.values)
    with pytest.raises(ValueError):
        maximal_omega(f, SphereFunction(1, np.array([1.0, -1.0])))


def test_sup_dilation_zero_and_domination(haar_bank):
    z = SampledFunction(SPEC, np.zeros(SPEC.shape, dtype=complex))
    assert np.all(sup_dilation(HAAR, z, TG, bank=haar_bank).values == 0)
    prof, om = HAAR.majorant_factorization()
    ratios = []
    for seed in range(8):
        f = rand_band(seed)
        sd = sup_dilation(HAAR, f, TG, bank=haar_bank).values.real
        m = maximal_omega(f, om).values.real
        ratios.append(float(np.max(sd / np.maximum(m, 1e-300))))
    c = max(ratios)
    assert math.isfinite(c)
    half = len(ratios) // 2
    assert max(ratios[:half]) <= 2.0 * max(ratios[half:])
    assert max(ratios[half:]) <= 2.0 * max(ratios[:half])


def test_sup_dilation_monotone_for_nonnegative_kernel():
    bump = CustomKernel(
        1, lambda p: np.maximum(1.0 - np.abs(p[..., 0]), 0.0),
        support_radius=1.0, name="tent", enforce_mean_zero=False,
    )
    f = rand_band(9)
    fabs = SampledFunction(SPEC, np.abs(f.values).astype(complex))
    a = sup_dilation(bump, f, TG).values.real
    b = sup_dilation(bump, fabs, TG).values.real
    assert np.all(b >= a - 1e-9)


def test_lp_partition_residual_and_blocks():
    dec = LPDecomposition.covering(SPEC)
    assert dec.partition_residual(SPEC) <= 1e-12
    # a pure mode exactly on a block plateau passes through unchanged
    j = -5
    xi_val = 2.0**5
    x = SPEC.axis_coords()
    f = SampledFunction(SPEC, np.exp(2j * np.pi * xi_val * x))
    out = lp_blocks(f, dec, j)
    assert np.max(np.abs(out.values - f.values)) <= 1e-10
    z = SampledFunction(SPEC, np.zeros(SPEC.shape, dtype=complex))
    assert np.all(lp_blocks(z, dec, 0).values == 0)
    with pytest.raises(ValueError):
        lp_blocks(f, dec, dec.j_max + 1)


def test_lp_blocks_sum_to_identity_without_dc():
    dec = LPDecomposition.covering(SPEC)
    f = rand_band(10)  # band-limited, no zero-frequency mass
    total = np.zeros(SPEC.shape, dtype=complex)
    for j in dec.j_range:
        total += lp_blocks(f, dec, j).values
    assert np.max(np.abs(total - f.values)) <= 1e-10 * np.max(np.abs(f.values))


def test_tj_diagnostic(haar_bank):
    z = SampledFunction(SPEC, np.zeros(SPEC.shape, dtype=complex))
    dz = tj_diagnostic(HAAR, z, TG, bank=haar_bank)
    assert all(v == 0.0 for v in dz["tj_norms"].values())

    f = rand_band(11, band=(0.25, 16.0))
    diag = tj_diagnostic(HAAR, f, TG, bank=haar_bank)
    assert diag["pointwise_sum_margin"] <= 1e-8
    slope = tj_slope(diag["tj_norms"], (2, 6))
    assert slope <= -0.125


def test_check_15_zero_and_examples():
    z = SampledFunction(SPEC, np.zeros(SPEC.shape, dtype=complex))
    res = check_15(POISSON, z, None, k_range=(-2, 2))
    assert res["sup_value"] == 0.0

    f = rand_band(12, band=(0.5, 2.0))
    n = SPEC.samples_per_axis
    coef = np.fft.fft(f.values)
    keep = np.abs(coef) > 1e-6 * np.max(np.abs(coef))
    coef2 = np.zeros_like(coef)
    for k in np.nonzero(keep)[0]:
        signed = k if k < n // 2 else k - n
        coef2[(2 * signed) % n] = coef[k] * (-1.0) ** signed
    f2 = SampledFunction(SPEC, np.fft.ifft(coef2))
    a = check_15(POISSON, f, None, k_range=(-4, 2))
    b = check_15(POISSON, f2, None, k_range=(-5, 1))
    for k in range(-3, 2):
        assert b["per_k"][k - 1] == pytest.approx(a["per_k"][k], rel=1e-8)


def test_check_15_weighted_stability():
    w = PowerWeight(0.5)
    f = rand_band(13, band=(0.5, 2.0))
    a = check_15(HAAR, f, w, k_range=(-4, 0))
    b = check_15(HAAR, f, w, k_range=(-6, 2))
    assert abs(b["ratio"] / a["ratio"] - 1.0) < 0.10
    assert b["ratio"] > 0
