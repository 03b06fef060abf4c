import math

import pytest

from isinglab.errors import InvalidInputError, NoNonuniquenessError
from isinglab.thresholds import (
    L_star,
    ThresholdSet,
    beta_u,
    compute_thresholds,
    eta_minus,
    eta_of_fixed_point,
    eta_plus,
    lambda_a_bar,
    lambda_u,
    tree_fixed_points,
)

LN2 = math.log(2)


def test_beta_u_values():
    assert math.isclose(beta_u(3), math.log(3), rel_tol=1e-15)
    assert math.isclose(beta_u(4), LN2, rel_tol=1e-15)  # Fig. 2 anchor, 0.6931
    assert abs(beta_u(4) - 0.6931) < 1e-4


def test_beta_u_monotone_to_zero():
    vals = [beta_u(d) for d in range(3, 40)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert beta_u(1000) < 0.01


def test_beta_u_requires_delta_3():
    with pytest.raises(InvalidInputError):
        beta_u(2)


def test_R_equals_one_at_unit_field():
    for delta, beta in [(3, 0.5), (4, 1.0), (5, 0.2)]:
        fps = tree_fixed_points(delta, beta, 1.0)
        assert any(math.isclose(fp.R, 1.0, abs_tol=1e-9) for fp in fps)


def test_fixed_point_residuals():
    for lam in (0.9, 1.0, 1.01, 1.08, 2.0):
        for fp in tree_fixed_points(4, LN2 + 0.1, lam):
            eb = math.exp(LN2 + 0.1)
            h = lam * ((fp.R * eb + 1) / (fp.R + eb)) ** 3
            assert abs(h - fp.R) <= 1e-10 * max(1.0, fp.R)


def test_three_fixed_points_at_1_01():
    fps = tree_fixed_points(4, LN2 + 0.1, 1.01)
    assert len(fps) == 3
    assert fps[0].stable and fps[2].stable and not fps[1].stable


def test_one_fixed_point_at_1_08():
    fps = tree_fixed_points(4, LN2 + 0.1, 1.08)
    assert len(fps) == 1
    assert fps[0].stable


def test_descartes_count():
    for delta in (3, 4, 5):
        for beta in (0.0, 0.4, LN2 + 0.1, 1.5):
            for lam in (0.5, 0.97, 1.0, 1.03, 2.0, 10.0):
                fps = tree_fixed_points(delta, beta, lam)
                if any(fp.double_root for fp in fps):
                    assert len(fps) == 2
                else:
                    assert len(fps) in (1, 3), (delta, beta, lam)


def test_tangency_detected_at_lambda_u():
    lu = lambda_u(4, LN2 + 0.1)
    fps = tree_fixed_points(4, LN2 + 0.1, lu)
    assert len(fps) == 2
    assert any(fp.double_root or fp.marginal for fp in fps)


def test_L_star_zero_below_beta_u_at_unit_field():
    assert abs(L_star(4, 0.5, 1.0)) < 1e-12
    assert abs(eta_plus(4, 0.5, 1.0)) < 1e-12


def test_symmetric_magnetizations_above_beta_u():
    ep = eta_plus(4, LN2 + 0.1, 1.0)
    em = eta_minus(4, LN2 + 0.1, 1.0)
    assert ep > 0
    assert math.isclose(ep, -em, rel_tol=1e-10)


def test_eta_plus_matches_largest_fixed_point():
    for lam in (1.0, 1.01, 1.05, 1.2):
        fps = tree_fixed_points(4, LN2 + 0.1, lam)
        expected = eta_of_fixed_point(max(fp.R for fp in fps), LN2 + 0.1)
        assert math.isclose(eta_plus(4, LN2 + 0.1, lam), expected, abs_tol=1e-10)


def test_eta_plus_monotone_in_lambda():
    lams = [1.0, 1.02, 1.05, 1.2, 1.5, 3.0]
    vals = [eta_plus(4, LN2 + 0.1, lam) for lam in lams]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_eta_plus_inversion_symmetry():
    for lam in (1.3, 2.0):
        assert math.isclose(
            eta_plus(4, LN2 + 0.1, 1 / lam),
            -eta_minus(4, LN2 + 0.1, lam),
            abs_tol=1e-10,
        )


def test_lambda_u_anchor_interval():
    lu = lambda_u(4, LN2 + 0.1)
    assert 1.01 < lu < 1.08  # Fig. 3: two maxima at 1.01, one at 1.08


def test_lambda_u_to_one_at_beta_u():
    vals = [lambda_u(4, LN2 + eps) for eps in (0.1, 0.01, 0.001)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1.001


def test_lambda_u_bisect_matches_tangency_refinement():
    # value frozen from two independent routes agreeing to 1e-12
    assert math.isclose(lambda_u(4, LN2 + 0.1), 1.067849843028, abs_tol=1e-9)
    assert math.isclose(lambda_u(3, 1.2), 1.031601420385, abs_tol=1e-9)


def test_lambda_u_requires_nonuniqueness():
    with pytest.raises(NoNonuniquenessError):
        lambda_u(4, 0.5)


def test_lambda_a_bar_delta4_beta08():
    # second branch e^{3.2} wins over (2 e^{1.6} - 4) e^{1.6}
    val = lambda_a_bar(4, 0.8)
    first = (2 * math.exp(1.6) - 4) * math.exp(1.6)
    second = math.exp(3.2)
    assert second < first
    assert math.isclose(val, second, rel_tol=1e-12)
    assert math.isclose(val, 24.53, rel_tol=1e-3)


def test_lambda_a_bar_small_beta_second_branch_only():
    # at beta <= beta_u the first branch is nonpositive
    assert math.isclose(lambda_a_bar(4, 0.1), math.exp(0.4), rel_tol=1e-12)


def test_threshold_orderings():
    ts = compute_thresholds(4, LN2 + 0.1)
    assert isinstance(ts, ThresholdSet)
    assert ts.lambda_u > 1
    assert 0 < ts.eta_c < ts.eta_u < ts.eta_a_bar


def test_thresholds_with_field():
    ts = compute_thresholds(4, LN2 + 0.1, lam=1.01)
    assert ts.eta_plus > 0 > ts.eta_minus
    assert math.isclose(ts.eta_plus, eta_plus(4, LN2 + 0.1, 1.01))


def test_eta_c_lt_eta_u():
    for delta, beta in [(3, 1.2), (4, LN2 + 0.1), (5, 0.8)]:
        ts = compute_thresholds(delta, beta)
        assert ts.eta_c < ts.eta_u
