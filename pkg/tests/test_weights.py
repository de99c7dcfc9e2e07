import math

import numpy as np
import pytest
from scipy.integrate import quad

from lpsquare.grid import GridSpec, SampledFunction, default_grid
from lpsquare.weights import (
    Constant,
    Cube,
    CubeFamily,
    CustomSampled,
    PowerWeight,
    a1_characteristic,
    ap_characteristic,
    ap_refinement_trend,
    bmo_norm,
    power_weight_in_ap,
    weighted_measure,
)

SPEC = default_grid(1)
FAMILY = CubeFamily.dyadic(1, SPEC.halfwidth, 0, 5)


def test_constant_weight_characteristic_is_one():
    for p in (1.5, 2.0, 3.0):
        assert ap_characteristic(Constant(1.0), p, FAMILY) == pytest.approx(1.0, abs=1e-12)
        assert ap_characteristic(Constant(3.5), p, FAMILY) == pytest.approx(1.0, abs=1e-12)


def test_characteristic_at_least_one():
    for w in (Constant(2.0), PowerWeight(0.5), PowerWeight(-0.5)):
        for p in (1.5, 2.0, 3.0):
            c = ap_characteristic(w, p, FAMILY)
            assert c >= 1.0 - 1e-9


def test_power_half_characteristic_stabilizes_with_levels():
    w = PowerWeight(0.5)
    c6 = ap_characteristic(w, 2.0, CubeFamily.dyadic(1, SPEC.halfwidth, 0, 6))
    c8 = ap_characteristic(w, 2.0, CubeFamily.dyadic(1, SPEC.halfwidth, 0, 8))
    assert math.isfinite(c6) and math.isfinite(c8)
    assert abs(c8 - c6) <= 0.05 * c6
    # fine Riemann-sum oracle on the worst (central) cube
    delta = SPEC.halfwidth / 2**6
    M = 200_000
    xs = -delta + (np.arange(M) + 0.5) * (2 * delta / M)
    avg_w = np.mean(np.abs(xs) ** 0.5)
    avg_d = np.mean(np.abs(xs) ** -0.5)
    assert c8 == pytest.approx(avg_w * avg_d, rel=1e-2)


def test_power_weight_divergence_signals():
    # |x|^-2 at p=2: the weight itself is not locally integrable
    assert not power_weight_in_ap(-2.0, 2.0, 1)
    assert math.isinf(ap_characteristic(PowerWeight(-2.0), 2.0, FAMILY))
    tr = ap_refinement_trend(PowerWeight(-2.0), 2.0, Cube((0.0,), 4.0), 8)
    growth = tr["growth_factors"]
    assert all(g >= 1.2 for g in growth[:5])


def test_refinement_trend_boundary_classification():
    inside = ap_refinement_trend(PowerWeight(0.9), 2.0, Cube((0.0,), 4.0), 16)
    outside = ap_refinement_trend(PowerWeight(1.1), 2.0, Cube((0.0,), 4.0), 16)
    assert inside["expected_in_ap"] and not outside["expected_in_ap"]
    changes = np.diff(inside["values"]) / np.array(inside["values"][:-1])
    assert np.all(np.abs(changes[-3:]) < 0.05)
    assert all(g >= 1.2 for g in outside["growth_factors"][:6])


def test_characteristic_monotone_in_p():
    for a in (0.25, 0.5, 0.75):
        w = PowerWeight(a)
        vals = [ap_characteristic(w, p, FAMILY) for p in (1.5, 2.0, 3.0)]
        assert vals[0] >= vals[1] >= vals[2]


def test_a1_characteristic():
    assert a1_characteristic(Constant(1.0), FAMILY) == pytest.approx(1.0)
    # |x|^a with a > 0 has essinf 0 on central cubes
    assert math.isinf(a1_characteristic(PowerWeight(0.5), FAMILY))
    neg = a1_characteristic(PowerWeight(-0.5), FAMILY)
    assert math.isfinite(neg) and neg >= 1.0


def test_weighted_measure_power_half():
    w = PowerWeight(0.5)
    got = weighted_measure(w, Cube((0.5,), 1.0))
    assert got == pytest.approx(2.0 / 3.0, abs=1e-3)


def test_weighted_measure_volume_and_additivity():
    q = Cube((0.25,), 3.0)
    assert weighted_measure(Constant(1.0), q) == pytest.approx(q.volume(), abs=1e-12)
    w = PowerWeight(0.5)
    left = Cube((0.25 - 0.75,), 1.5)
    right = Cube((0.25 + 0.75,), 1.5)
    assert weighted_measure(w, q) == pytest.approx(
        weighted_measure(w, left) + weighted_measure(w, right), abs=1e-12
    )


def test_power_grid_values_singular_cell_average():
    w = PowerWeight(0.5)
    vals = w.grid_values(SPEC)
    i0 = SPEC.samples_per_axis // 2  # x = 0 lives here
    h = SPEC.step
    assert vals[i0] == pytest.approx((h / 2) ** 0.5 / 1.5, rel=1e-12)
    assert np.all(vals > 0)
    with pytest.raises(ValueError):
        PowerWeight(-1.5).grid_values(SPEC)


def test_bmo_constant_zero_and_affine_invariance():
    b = SampledFunction(SPEC, np.full(SPEC.shape, 4.2, dtype=complex))
    assert bmo_norm(b, FAMILY) <= 1e-12
    rng = np.random.default_rng(0)
    raw = rng.standard_normal(SPEC.shape)
    f = SampledFunction(SPEC, raw.astype(complex))
    g = SampledFunction(SPEC, (raw + 7.5).astype(complex))
    h2 = SampledFunction(SPEC, (2.0 * raw).astype(complex))
    fam = CubeFamily.dyadic(1, SPEC.halfwidth, 0, 3)
    assert bmo_norm(g, fam) == pytest.approx(bmo_norm(f, fam), abs=1e-12)
    assert bmo_norm(h2, fam) == pytest.approx(2.0 * bmo_norm(f, fam), abs=1e-12)


def test_bmo_sign_function():
    x = SPEC.axis_coords()
    b = SampledFunction(SPEC, np.sign(x).astype(complex))
    fam = CubeFamily.centered(1, SPEC.halfwidth, 4)
    got = bmo_norm(b, fam)
    assert got == pytest.approx(1.0, abs=2 * SPEC.step)


def test_bmo_log_stable_under_refinement():
    from lpsquare.harness import log_abs_function

    b = log_abs_function(SPEC)
    v1 = bmo_norm(b, CubeFamily.dyadic(1, SPEC.halfwidth, 0, 6))
    v2 = bmo_norm(b, CubeFamily.dyadic(1, SPEC.halfwidth, 0, 8))
    assert math.isfinite(v2)
    assert abs(v2 - v1) <= 0.10 * v1


def test_bmo_rejects_complex():
    b = SampledFunction(SPEC, 1j * np.ones(SPEC.shape))
    with pytest.raises(ValueError):
        bmo_norm(b, FAMILY)


def test_custom_sampled_weight():
    vals = 1.0 + 0.5 * np.cos(SPEC.axis_coords())
    w = CustomSampled(SPEC, vals)
    c = ap_characteristic(w, 2.0, FAMILY)
    assert 1.0 - 1e-9 <= c < 10.0
    q = Cube((0.0,), 2.0)
    x = SPEC.axis_coords()
    riemann = float(np.sum(vals[(x >= -1.0) & (x < 1.0)]) * SPEC.step)
    assert weighted_measure(w, q) == pytest.approx(riemann, rel=1e-12)


def test_cube_family_constructors():
    fam = CubeFamily.dyadic(2, 8.0, 1, 2)
    assert len(fam) == 4 + 16
    assert fam.min_sidelength() == pytest.approx(4.0)
    cent = CubeFamily.centered(1, 8.0, 3)
    assert [q.sidelength for q in cent] == [16.0, 8.0, 4.0]
    shifted = fam.translate([1.0, 0.0])
    assert shifted.cubes[0].center[0] == fam.cubes[0].center[0] + 1.0
    with pytest.raises(ValueError):
        CubeFamily.dyadic(1, 8.0, 3, 2)
