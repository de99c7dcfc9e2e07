import math

import numpy as np
import pytest
from scipy.integrate import quad

from lpsquare.conditions import (
    ClassifyParams,
    classify,
    seminorm_B,
    seminorm_D,
    seminorm_J,
    seminorm_L,
    seminorm_report,
    singular_pair_integral,
)
from lpsquare.kernels import (
    CompactLq,
    CustomKernel,
    Haar1D,
    PoissonDerivative,
    SphereFunction,
    TruncatedHomogeneous,
)

HAAR = Haar1D()
POISSON = PoissonDerivative(1)
TRUNC = TruncatedHomogeneous(1, 0.5, SphereFunction(1, np.array([1.0, -1.0])))


def zero_kernel():
    return CustomKernel(1, lambda p: np.zeros(p.shape[:-1]), support_radius=1.0,
                        name="zero", enforce_mean_zero=False)


def signed_tail_kernel():
    return CustomKernel(
        1,
        lambda p: np.sign(p[..., 0]) / (1.0 + np.abs(p[..., 0])) ** 2,
        support_radius=np.inf,
        name="signed_tail",
        enforce_mean_zero=False,
    )


# ---------------------------------------------------------------------------
# B and D
# ---------------------------------------------------------------------------


def test_B_haar_is_exactly_zero():
    assert seminorm_B(HAAR, 0.5).value == 0.0


def test_B_custom_matches_quadrature_oracle():
    oracle = 2 * quad(lambda x: np.sqrt(x) / (1 + x) ** 2, 1, np.inf)[0]
    assert oracle == pytest.approx(math.pi / 2 + 1, abs=1e-9)
    got = seminorm_B(signed_tail_kernel(), 0.5)
    assert not got.diverged
    assert got.value == pytest.approx(oracle, rel=5e-3)


def test_B_monotone_in_eps():
    for k in (POISSON, signed_tail_kernel()):
        v1 = seminorm_B(k, 0.1).value
        v2 = seminorm_B(k, 0.5).value
        v3 = seminorm_B(k, 1.0).value
        assert v1 <= v2 <= v3


def test_B_rejects_bad_eps():
    with pytest.raises(ValueError):
        seminorm_B(HAAR, 0.0)
    with pytest.raises(ValueError):
        seminorm_B(HAAR, 1.5)


def test_B_divergence_flag():
    heavy = CustomKernel(
        1,
        lambda p: np.sign(p[..., 0]) / (1.0 + np.abs(p[..., 0])),
        support_radius=np.inf,
        name="heavy_tail",
        enforce_mean_zero=False,
    )
    # |psi| |x|^0.9 ~ |x|^{-0.1} is far from integrable
    assert seminorm_B(heavy, 0.9).diverged


def test_D_haar_analytic():
    assert seminorm_D(HAAR, 2.0).value == pytest.approx(math.sqrt(2.0), abs=1e-15)


def test_D_zero_kernel():
    assert seminorm_D(zero_kernel(), 2.0).value == 0.0


def test_D_truncated_homogeneous_analytic_oracle():
    oracle = (2 * quad(lambda r: r**-0.75, 0, 1)[0]) ** (1 / 1.5)
    got = seminorm_D(TRUNC, 1.5)
    assert got.value == pytest.approx(oracle, rel=1e-2)
    assert got.value == pytest.approx(4.0, rel=1e-12)


def test_D_divergence_flag():
    assert seminorm_D(TRUNC, 4.0).diverged  # (eps-1)u + 1 <= 0


def test_D_holder_comparison():
    # D_u <= |B(0,1)|^(1/u - 1/v) D_v for u <= v (1% slack)
    for k in (POISSON, HAAR):
        du = seminorm_D(k, 1.5).value
        dv = seminorm_D(k, 2.0).value
        assert du <= 2.0 ** (1 / 1.5 - 1 / 2.0) * dv * 1.01


# ---------------------------------------------------------------------------
# J and L against deterministic quadrature oracles
# ---------------------------------------------------------------------------


def haar_J_oracle(eps: float) -> float:
    # pair integral over the unit square via the separation substitution:
    # 2 * int_0^2 u^-eps (2 - u) du
    val = 2 * quad(lambda u: u**-eps * (2 - u), 0, 2)[0]
    return val


def haar_L_oracle() -> float:
    return 2 * quad(lambda u: abs(np.log(u)) * (2 - u), 0, 2, points=[1.0])[0]


def test_haar_oracles_match_closed_forms():
    assert haar_J_oracle(0.5) == pytest.approx(2**2.5 * (2 - 2 / 3), abs=1e-9)
    assert haar_L_oracle() == pytest.approx(1 + 4 * math.log(2), abs=1e-9)


def test_J_haar_within_3se_of_oracle():
    got = seminorm_J(HAAR, 0.5, xi_samples=2, mc_samples=200_000, seed=11)
    assert not got.diverged
    assert abs(got.value - haar_J_oracle(0.5)) <= 3.0 * got.stderr


def test_J_zero_kernel():
    assert seminorm_J(zero_kernel(), 0.5, mc_samples=1000).value == 0.0


def test_J_reflection_invariance():
    flipped = CustomKernel(
        1,
        lambda p: Haar1D().evaluate(-p[..., 0]),
        support_radius=1.0,
        name="haar_flipped",
        enforce_mean_zero=False,
    )
    a = seminorm_J(HAAR, 0.5, xi_samples=2, mc_samples=150_000, seed=5)
    b = seminorm_J(flipped, 0.5, xi_samples=2, mc_samples=150_000, seed=6)
    assert abs(a.value - b.value) <= 3.0 * (a.stderr + b.stderr)


def test_L_haar_within_3se_of_oracle():
    got = seminorm_L(HAAR, xi_samples=2, mc_samples=200_000, seed=12)
    assert abs(got.value - haar_L_oracle()) <= 3.0 * got.stderr


def test_L_zero_kernel():
    assert seminorm_L(zero_kernel(), mc_samples=1000).value == 0.0


def test_L_translation_invariance():
    shifted = CustomKernel(
        1,
        lambda p: Haar1D().evaluate(p[..., 0] - 0.5),
        support_radius=1.5,
        name="haar_shifted",
        enforce_mean_zero=False,
    )
    a = seminorm_L(HAAR, xi_samples=2, mc_samples=150_000, seed=21)
    b = seminorm_L(shifted, xi_samples=2, mc_samples=150_000, seed=22)
    assert abs(a.value - b.value) <= 3.0 * (a.stderr + b.stderr)


def test_estimator_convergence_under_sample_doubling():
    # doubling the sample count moves the estimate by < 3 reported standard
    # errors in >= 95% of trials
    ok = 0
    trials = 20
    for s in range(trials):
        a = seminorm_J(HAAR, 0.5, xi_samples=2, mc_samples=20_000, seed=100 + s)
        b = seminorm_J(HAAR, 0.5, xi_samples=2, mc_samples=40_000, seed=200 + s)
        if abs(a.value - b.value) < 3.0 * max(a.stderr, b.stderr):
            ok += 1
    assert ok >= int(0.95 * trials)


def test_signed_pair_integral_imaginary_part_noise():
    rng = np.random.default_rng(31)
    est, _, se_im = singular_pair_integral(
        HAAR, np.array([1.0]), "log_complex", 0.0, 200_000, rng, signed=True
    )
    assert abs(est.imag) <= 3.5 * se_im


# ---------------------------------------------------------------------------
# report and classification
# ---------------------------------------------------------------------------


def test_seminorm_report_shape():
    rep = seminorm_report(HAAR, mc_samples=20_000, xi_samples=2, seed=0)
    d = rep.to_dict()
    for key in ("B_eps", "D_u", "J_eps", "L"):
        assert set(d[key]) == {"value", "stderr", "diverged", "settings"}
    assert d["H_l1"] == pytest.approx(2.0, rel=5e-3)  # unit-ball indicator majorant


def test_classify_haar_full_range():
    rep = classify(HAAR)
    assert rep.routes["full_range"]["applicable"]
    assert rep.routes["full_range"]["claimed_range"] == "p in (1, inf), w in A_p"
    # bounded with compact support: the global-Lq route claims everything
    assert rep.routes["compact_lq"]["applicable"]
    assert rep.routes["compact_lq"]["claimed_range"] == "p > 1, w in A_(p/1)"
    assert rep.routes["l2_log"]["applicable"]


def test_classify_truncated_homogeneous():
    rep = classify(TRUNC)
    assert rep.routes["rough_homogeneous"]["applicable"]
    assert rep.routes["rough_homogeneous"]["claimed_range"] == "p in (1, inf), w in A_p"
    # not square integrable at eps=0.5: the global-L2 route must not fire at q=2
    assert rep.routes["compact_lq"]["hypotheses"]["global_lq"]["largest_q"] is None or (
        rep.routes["compact_lq"]["hypotheses"]["global_lq"]["largest_q"] not in (2.0, 4.0, "inf")
    )


def test_classify_compact_lq_route():
    ck = CompactLq(1, 2.0, np.linspace(0, 1, 5), np.array([1.0, 0.5, -0.5, -1.0, 0.0]))
    rep = classify(ck)
    assert rep.routes["compact_lq"]["applicable"]
    assert "p > 1" in rep.routes["compact_lq"]["claimed_range"]


def test_classify_deterministic():
    a = classify(POISSON, ClassifyParams()).to_dict()
    b = classify(POISSON, ClassifyParams()).to_dict()
    assert a == b
