import math

import numpy as np
import pytest

from isinglab.errors import InvalidInputError
from isinglab.graphs import cycle_graph, complete_graph, disjoint_union, random_regular
from isinglab.measures import NEG_INF, exact_partition_table, size_distribution
from isinglab.meanfield import annealed_log_EZ_per_k, f_eta
from isinglab.metastability import (
    ConductanceReport,
    GlauberBandSpec,
    UnionBandSpec,
    annealed_band_weights,
    conductance_lower_bound_report,
    default_band_epsilon,
    exact_band_weights,
    find_union_parameters,
    overlap,
    partition_ratio_bounds,
    run_glauber_trace,
    run_kawasaki_trace,
    trace_bands,
)
from isinglab.rng import make_rng
from isinglab.thresholds import eta_minus, eta_plus, lambda_u

LN2 = math.log(2)


# ---------------------------------------------------------------------------
# Specs and weights
# ---------------------------------------------------------------------------


def test_glauber_band_spec_sets_and_separation():
    spec = GlauberBandSpec(n=100, k1=80, k2=20, inner=5, outer=10)
    s1, s2, s3 = spec.sets()
    assert s1 == {80}
    assert s2 == set(range(15, 26))
    assert s3 == set(range(10, 15)) | set(range(26, 31))
    spec.validate_separation()


def test_glauber_band_spec_rejects_overlap():
    with pytest.raises(InvalidInputError):
        GlauberBandSpec(n=100, k1=28, k2=20, inner=5, outer=10)


def test_union_band_spec_arithmetic():
    spec = UnionBandSpec(base_n=6, m=2, ell=1, k_plus=6, k_minus=0, eps=1)
    assert spec.k_total == 6
    assert spec.k_balanced == 3
    assert spec.plus_band() == (5, 7)
    assert spec.plus_escape() == (4, 4)
    assert spec.minus_escape() == (2, 2)
    spec.validate_separation()


def test_union_band_spec_rejects_window_overlap():
    with pytest.raises(InvalidInputError):
        UnionBandSpec(base_n=6, m=2, ell=1, k_plus=5, k_minus=1, eps=1)


def test_annealed_symmetric_bands_equal_weight():
    # lambda = 1, beta > beta_u: bands at +-eta_c carry equal annealed weight
    n, delta, beta = 64, 4, LN2 + 0.1
    eta_c = eta_plus(delta, beta, 1.0)
    k_hi = int(round(n * (1 + eta_c) / 2))
    k_lo = n - k_hi
    spec = GlauberBandSpec(n=n, k1=k_hi, k2=k_lo, inner=2, outer=4)
    w = annealed_band_weights(n, delta, beta, 1.0, spec)
    spec_mirror = GlauberBandSpec(n=n, k1=k_lo, k2=k_hi, inner=2, outer=4)
    w_m = annealed_band_weights(n, delta, beta, 1.0, spec_mirror)
    assert math.isclose(w["S2"], w_m["S2"], rel_tol=1e-10)
    assert math.isclose(w["S1"], w_m["S1"], rel_tol=1e-10)


def test_annealed_s2_below_s1_with_clear_field_gap():
    # minus-phase band exponentially below the plus band once n log-lam
    # beats the polynomial band-width factor
    n, delta, beta, lam = 192, 4, LN2 + 0.1, 1.05
    ep = eta_plus(delta, beta, lam)
    em = eta_minus(delta, beta, lam)
    k1 = int(round(n * (1 + ep) / 2))
    k2 = int(round(n * (1 + em) / 2))
    spec = GlauberBandSpec(n=n, k1=k1, k2=k2,
                           inner=round(0.05 * n), outer=round(0.10 * n))
    w = annealed_band_weights(n, delta, beta, lam, spec)
    assert w["S2"] < w["S1"]
    assert w["S3"] < w["S2"]
    assert f_eta(em, delta, beta, lam) < f_eta(ep, delta, beta, lam)


def test_annealed_s2_below_s1_beyond_lambda_u():
    # above lambda_u the landscape is single-peaked; a band at the former
    # minus phase is exponentially lighter than the band at eta_plus
    n, delta, beta, lam = 96, 4, LN2 + 0.1, 1.2
    assert lam > lambda_u(delta, beta)
    ep = eta_plus(delta, beta, lam)
    eta2 = -0.75
    k1 = int(round(n * (1 + ep) / 2))
    k2 = int(round(n * (1 + eta2) / 2))
    spec = GlauberBandSpec(n=n, k1=k1, k2=k2, inner=5, outer=10)
    w = annealed_band_weights(n, delta, beta, lam, spec)
    assert w["S2"] < w["S1"]
    assert f_eta(eta2, delta, beta, lam) < f_eta(ep, delta, beta, lam)


def test_annealed_s3_below_both_uses_landscape():
    # the spec's lam = 1.01 metastable-geometry case: the shifted annulus is
    # lighter than both the band it guards and the global-max singleton
    n, delta, beta, lam = 480, 4, LN2 + 0.1, 1.01
    em = eta_minus(delta, beta, lam)
    k2 = int(round(n * (1 + em) / 2))
    k1 = int(round(n * (1 + eta_plus(delta, beta, lam)) / 2))
    spec = GlauberBandSpec(n=n, k1=k1, k2=k2,
                           inner=round(0.05 * n), outer=round(0.10 * n))
    w = annealed_band_weights(n, delta, beta, lam, spec)
    assert w["S3"] < w["S1"] and w["S3"] < w["S2"]


def test_exact_union_masses_sum_below_one():
    base = cycle_graph(6)
    spec = UnionBandSpec(base_n=6, m=2, ell=1, k_plus=6, k_minus=0, eps=1)
    w = exact_band_weights(base, 1.0, spec)
    assert 0 <= w["S3"] and w["S1"] > 0 and w["S2"] > 0
    assert w["S1"] + w["S2"] + w["S3"] <= 1 + 1e-12


def test_exact_vs_annealed_sign_agreement_two_c6():
    # union of two 6-cycles at beta = 1: total-size classes k = 6 (balanced
    # (6,6)-split of spins) vs k = 3 (a (3,9)-split); the exact mass ordering
    # matches the sign of the annealed log-ratio
    u = disjoint_union(cycle_graph(6), 2).graph
    beta, lam = 1.0, 1.0
    table = exact_partition_table(u, beta)
    pmf = size_distribution(table, lam)
    exact_sign = math.copysign(1, math.log(pmf[6] / pmf[3]))
    ann = annealed_log_EZ_per_k(12, 6, 2, beta, lam) - annealed_log_EZ_per_k(
        12, 3, 2, beta, lam
    )
    assert exact_sign == math.copysign(1, ann)


def test_exact_vs_annealed_sign_agreement_union_bands():
    # per-component bands on a pair of C6 copies: high-low split vs balanced
    base = cycle_graph(6)
    beta = 1.0
    spec = UnionBandSpec(base_n=6, m=2, ell=1, k_plus=6, k_minus=0, eps=1)
    exact = exact_band_weights(base, beta, spec)
    ann = annealed_band_weights(6, 2, beta, 1.0, spec)
    # S3 guards S2 in both: exact and annealed agree the annulus is lighter
    assert (exact["S3"] < exact["S2"]) == (ann["S3"] < ann["S2"])


def test_exact_glauber_band_masses_match_pmf():
    g = complete_graph(4)
    beta, lam = 0.7, 1.2
    table = exact_partition_table(g, beta)
    pmf = size_distribution(table, lam)
    spec = GlauberBandSpec(n=4, k1=4, k2=1, inner=1, outer=2)
    w = exact_band_weights(g, beta, spec, lam=lam)
    assert math.isclose(w["S1"], pmf[4], rel_tol=1e-12)
    assert math.isclose(w["S2"], pmf[0] + pmf[1] + pmf[2], rel_tol=1e-12)
    assert math.isclose(w["S3"], pmf[3], rel_tol=1e-12)


def test_conductance_report_disconnected():
    rep = conductance_lower_bound_report({"S2": 0.3, "S3": 0.0})
    assert rep.disconnected
    assert rep.ratio_s3_s2 == 0.0
    assert rep.log_ratio == NEG_INF


def test_conductance_report_ratio():
    rep = conductance_lower_bound_report({"S2": 0.5, "S3": 0.0001})
    assert math.isclose(rep.ratio_s3_s2, 2e-4)
    assert rep.bottleneck_flag
    rep2 = conductance_lower_bound_report({"S2": -3.0, "S3": -30.0}, log_scale=True)
    assert rep2.bottleneck_flag
    with pytest.raises(InvalidInputError):
        conductance_lower_bound_report({"S2": 0.0, "S3": 0.1})


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


def test_glauber_trace_beta0_equilibrates_to_binomial():
    g = random_regular(200, 3, seed=0, simple=True)
    for start in ("all_plus", "all_minus"):
        tr = run_glauber_trace(g, 0.0, 1.0, start, T=20000, seed=5,
                               record_every=100)
        tail = tr.etas[len(tr.etas) // 2:]
        assert abs(np.mean(tail)) < 0.05  # Binomial(n, 1/2) band


def test_glauber_trace_dwell_and_hit():
    g = random_regular(300, 3, seed=2, simple=True)
    beta, lam = 1.2, 1.01
    bp, bm = trace_bands(3, beta, lam)
    tr = run_glauber_trace(g, beta, lam, "all_minus", T=100_000, seed=3,
                           record_every=100, band_plus=bp, band_minus=bm)
    assert tr.hit_minus >= 0  # finds its metastable band quickly
    # n = 300 still fluctuates out of the band; the acceptance suite holds
    # the 0.95 bar at n = 1000
    assert tr.dwell_minus > 0.75
    assert tr.censored_plus  # never crosses at this size/time


def test_glauber_trace_reproducible():
    g = random_regular(50, 3, seed=4, simple=True)
    a = run_glauber_trace(g, 0.5, 1.0, "all_plus", T=5000, seed=9)
    b = run_glauber_trace(g, 0.5, 1.0, "all_plus", T=5000, seed=9)
    assert np.array_equal(a.etas, b.etas)


def test_kawasaki_trace_preserves_counts():
    u = disjoint_union(cycle_graph(6), 2)
    res = run_kawasaki_trace(u.graph, 0.8, 6, "band_sample", T=2000, seed=7,
                             component_of=u.component_of, record_every=50)
    for counts in res["component_counts"]:
        assert sum(counts) == 6
    assert sum(1 for s in res["spins"] if s == 1) == 6


def test_dwell_fractions_sum_below_one_with_coinciding_bands():
    # in the uniqueness regime eta+ = eta-, so both bands coincide; the
    # exclusive dwell counting keeps the invariant sum <= 1
    g = random_regular(100, 3, seed=6, simple=True)
    lam = 1.6  # above lambda_u(3, 1.2) = 1.0316
    bp, bm = trace_bands(3, 1.2, lam)
    assert bp == bm
    tr = run_glauber_trace(g, 1.2, lam, "all_minus", T=50_000, seed=8,
                           record_every=1000, band_plus=bp, band_minus=bm)
    assert tr.dwell_plus + tr.dwell_minus <= 1.0
    assert tr.hit_plus >= 0 and tr.hit_minus >= 0


def test_default_band_epsilon_regimes():
    eps_meta = default_band_epsilon(4, LN2 + 0.1, 1.01)
    assert 0 < eps_meta < 0.5
    eps_unique = default_band_epsilon(4, LN2 + 0.1, 1.5)
    assert 0 < eps_unique <= 0.1


def test_mc_band_occupancy_ratio_decreases_in_n():
    """Censored long-run pi-hat(S3)/pi-hat(S2) decays along the graph family."""
    from isinglab.measures import k_of_eta
    from isinglab.metastability import mc_band_occupancy_ratio

    delta, beta, lam = 4, LN2 + 0.3, 1.005
    em = eta_minus(delta, beta, lam)
    ep = eta_plus(delta, beta, lam)
    ratios = []
    for n in (200, 400, 800):
        inner = round(0.02 * n)
        spec = GlauberBandSpec(
            n=n, k1=k_of_eta(n, ep), k2=k_of_eta(n, em),
            inner=inner, outer=2 * inner,
        )
        g = random_regular(n, delta, seed=1, simple=True)
        res = mc_band_occupancy_ratio(g, beta, lam, spec, T=1000 * n, seed=5)
        assert res["occupancy_s2"] > 0
        ratios.append(res["ratio"])
    assert all(a > b for a, b in zip(ratios, ratios[1:])), ratios


# ---------------------------------------------------------------------------
# Overlap
# ---------------------------------------------------------------------------


def test_overlap_basic():
    s = [1, -1, 1, 1]
    assert overlap(s, s) == 1.0
    assert overlap(s, [-x for x in s]) == -1.0
    with pytest.raises(InvalidInputError):
        overlap([1, -1], [1, -1, 1])


def test_overlap_independent_uniform_concentrates():
    rng = make_rng(11)
    n = 10_000
    hits = 0
    for _ in range(50):
        a = rng.choice([-1, 1], size=n)
        b = rng.choice([-1, 1], size=n)
        if abs(overlap(a, b)) <= 0.05:
            hits += 1
    assert hits >= 49  # |nu| <= 5 sd's of 1/sqrt(n)


# ---------------------------------------------------------------------------
# Partition-ratio bounds
# ---------------------------------------------------------------------------


def test_partition_ratio_tight_at_beta0():
    g = complete_graph(4)
    rep = partition_ratio_bounds(g, 0.0, 1.3, k=0, t=4)
    assert rep.satisfied and rep.tight


def test_partition_ratio_k4():
    g = complete_graph(4)
    rep = partition_ratio_bounds(g, 1.0, 1.0, k=0, t=4)
    assert rep.satisfied


def test_partition_ratio_rings_all_k():
    g = cycle_graph(8)
    for beta in (0.2, 1.0):
        table = exact_partition_table(g, beta)
        for lam in (0.5, 2.0):
            rep = partition_ratio_bounds(g, beta, lam, k=0, t=8, table=table)
            assert rep.satisfied, (beta, lam)


# ---------------------------------------------------------------------------
# Union parameter search
# ---------------------------------------------------------------------------


def test_union_parameters_midpoint():
    # eta = 0 <= eta_c: exact rational combination at lam = 1 with m = 2
    params = find_union_parameters(4, LN2 + 0.1, 0.0)
    assert (params.m, params.ell) == (2, 1)
    assert params.lam_plus == 1.0
    assert params.residual() <= 1e-10


def test_union_parameters_above_eta_c():
    delta, beta = 3, 1.2
    eta_c = eta_plus(delta, beta, 1.0)
    eta_u = eta_plus(delta, beta, lambda_u(delta, beta))
    target = 0.5 * (eta_c + eta_u)
    params = find_union_parameters(delta, beta, target)
    assert 1.0 < params.lam_plus < lambda_u(delta, beta)
    assert params.residual() <= 1e-10
    assert params.eta_minus < target < params.eta_plus


def test_union_parameters_requires_nonuniqueness():
    from isinglab.errors import NoNonuniquenessError

    with pytest.raises(NoNonuniquenessError):
        find_union_parameters(4, 0.3, 0.0)
