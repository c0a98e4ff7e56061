from fractions import Fraction as F

import numpy as np
import pytest

from eightvertex.dynamics import (Custom, Deterministic, EdgeAddress, EdgeWindow,
                                  InvalidProfileError, ParticleWindow, ProductMeasure,
                                  SizeExceededError, check_boundary_bound,
                                  check_zigzag_independence, edge_law, edge_view,
                                  estimate_pair_correlation, exact_particle_distribution,
                                  exact_window_distribution, line_step, marginal,
                                  min_width, particle_step, product_law, sample_edges,
                                  single_site_marginals, validate_profile)
from eightvertex.exact import c8
from eightvertex.params import DegenerateError, KernelParams


def test_pair_rule_by_hand():
    # p = 0, r = 1: nothing ever flips
    w = EdgeWindow([1, 0, 0, 0, 1, 1])
    rng = np.random.default_rng(0)
    assert np.array_equal(line_step(w, KernelParams(0, 1), rng).states, w.states)
    # p = 1, r = 0: every pair flips
    out = line_step(w, KernelParams(1, 0), rng)
    assert np.array_equal(out.states, 1 - w.states) and out.t == 1


def test_odd_line_pairs_shifted():
    # on odd lines the pairs are (2j-1, 2j): with p = 1, r = 1 only unequal pairs flip
    w = EdgeWindow([1, 1, 0, 0], t=1)
    out = line_step(w, KernelParams(1, 1), np.random.default_rng(0))
    assert out.states.tolist() == [0, 0, 1, 1]


def test_window_validation():
    with pytest.raises(ValueError):
        EdgeWindow([0, 1, 1])
    with pytest.raises(ValueError):
        ParticleWindow([0, 1], [0, 1, 1, 0])


def test_particle_identity_case():
    w = ParticleWindow.fresh([0, 1, 1, 0, 1, 0])
    rng = np.random.default_rng(3)
    for _ in range(5):
        w = particle_step(w, KernelParams(0, 1), rng)
    assert w.names.tolist() == list(range(6)) and w.states.tolist() == [0, 1, 1, 0, 1, 0]


def test_particle_names_stay_a_permutation():
    w = ParticleWindow.fresh([0, 1, 0, 0, 1, 1, 0, 1])
    rng = np.random.default_rng(4)
    for _ in range(20):
        w = particle_step(w, KernelParams(0.2, 0.3), rng)
        assert sorted(w.names.tolist()) == list(range(8))
    assert edge_view(w).t == 20


@pytest.mark.parametrize("pr", [(F(1, 5), F(1, 3)), (F(3, 4), F(2, 3)), (F(1, 2), F(1, 2))])
def test_particle_and_line_laws_agree(pr):
    q = KernelParams(*pr)
    init = ProductMeasure(F(1, 3))
    assert exact_particle_distribution(4, 3, init, q) == exact_window_distribution(4, 3, init, q)


def test_particle_sampling_matches_exact_law():
    q = KernelParams(0.2, 0.5)
    rng = np.random.default_rng(9)
    counts = {}
    n = 5000
    for _ in range(n):
        w = ParticleWindow.fresh([1, 0, 0, 0])
        for _ in range(2):
            w = particle_step(w, q, rng)
        key = tuple(w.states.tolist())
        counts[key] = counts.get(key, 0) + 1
    law = marginal(exact_window_distribution(4, 2, Deterministic((1, 0, 0, 0)), q), 2)
    for row, pr in law.items():
        assert counts.get(row, 0) / n == pytest.approx(float(pr), abs=0.03)


def test_exact_law_normalised_and_guarded():
    dist = exact_window_distribution(6, 3, ProductMeasure(F(1, 4)), KernelParams(F(1, 3), F(1, 2)))
    assert sum(dist.values()) == 1
    with pytest.raises(SizeExceededError):
        exact_window_distribution(10, 1, ProductMeasure(), KernelParams(0.2, 0.3))
    with pytest.raises(SizeExceededError):
        exact_window_distribution(4, 5, ProductMeasure(), KernelParams(0.2, 0.3))


def test_uniform_zigzag_is_exactly_uniform():
    q = KernelParams(F(1, 5), F(2, 3))
    profile = [0, 0, 1, 2]
    validate_profile(profile)
    dist = exact_window_distribution(8, 2, ProductMeasure(F(1, 2)), q)
    law = edge_law(dist, list(enumerate(profile)))
    assert len(law) == 16 and set(law.values()) == {F(1, 16)}
    # not every set of edges is independent
    law = edge_law(dist, [(0, 0), (0, 1)])
    assert set(law.values()) != {F(1, 4)}


def test_non_uniform_product_law_moves():
    q = KernelParams(F(1, 5), F(2, 3))
    dist = exact_window_distribution(4, 1, ProductMeasure(F(1, 5)), q)
    assert marginal(dist, 1) != product_law(4, F(1, 5))


def test_profile_validation():
    validate_profile([2, 1, 1, 2, 2, 1])
    with pytest.raises(InvalidProfileError):
        validate_profile([0, 1])
    with pytest.raises(InvalidProfileError):
        validate_profile([0, 0, 2])
    with pytest.raises(InvalidProfileError):
        validate_profile([-1, -1])


def test_zigzag_chi_square():
    pval = check_zigzag_independence([3, 4, 4, 3, 3, 4], None, 40000, 1, KernelParams(0.3, 0.6))
    assert pval > 1e-3


def test_sampling_reproducible_across_threads():
    edges = [EdgeAddress(0, 0), EdgeAddress(1, 3), EdgeAddress(-2, 4)]
    q = KernelParams(0.3, 0.45)
    a = sample_edges(edges, ProductMeasure(0.5), q, 10000, seed=5, threads=1)
    b = sample_edges(edges, ProductMeasure(0.5), q, 10000, seed=5, threads=4)
    c = sample_edges(edges, ProductMeasure(0.5), q, 10000, seed=6, threads=1)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_min_width_and_width_check():
    assert min_width([EdgeAddress(3, 4)]) == 18
    with pytest.raises(ValueError):
        sample_edges([EdgeAddress(3, 4)], ProductMeasure(), KernelParams(0.1, 0.2), 10, width=10)


def test_pair_correlation_estimate():
    q = KernelParams(0.25, 0.4)
    est, se = estimate_pair_correlation(EdgeAddress(0, 0), EdgeAddress(0, 2),
                                        ProductMeasure(0.5), q, 50000, seed=2)
    assert abs(est - c8(0, 2, q)) <= 5 * se
    assert estimate_pair_correlation(EdgeAddress(1, 1), EdgeAddress(1, 1),
                                     ProductMeasure(0.5), q, 100) == (1.0, 0.0)


def test_degenerate_initial_line():
    with pytest.raises(DegenerateError):
        estimate_pair_correlation(EdgeAddress(0, 0), EdgeAddress(0, 2),
                                  Deterministic((1,)), KernelParams(0.2, 0.3), 100)


def test_single_site_marginals_from_constant_line():
    # the first state is 1 forever at r = 1 and flips each step at r = 0, p = 1
    mean, _ = single_site_marginals(Deterministic((1, 1)), KernelParams(0, 1), 4, 200)
    assert mean.tolist() == [1.0] * 5
    mean, _ = single_site_marginals(Deterministic((1, 1)), KernelParams(1, 0), 4, 200)
    assert mean.tolist() == [1.0, 0.0, 1.0, 0.0, 1.0]


def test_custom_initial_law():
    table = {(1, 0, 0, 1): F(1, 2), (0, 1, 1, 0): F(1, 2)}
    init = Custom(table=table)
    assert init.law(4) == table
    rows = init.sample(np.random.default_rng(0), 50, 4)
    assert {tuple(r) for r in rows.tolist()} <= set(table)
    with pytest.raises(ValueError):
        Custom(sampler=lambda rng, n, w: np.zeros((n, w))).law(4)


def test_boundary_bound_product_init():
    res = check_boundary_bound(ProductMeasure(0.3), 1, 3, KernelParams(0.3, 0.4), 40000, seed=1)
    assert res.holds and abs(res.lhs) <= 5 * res.se + 1e-12
