from fractions import Fraction as F

import numpy as np
import pytest

from eightvertex.exact import c8
from eightvertex.oracles import (MAX_PATH_STEPS, RegimeError, SingularError,
                                 brute_force_paths, c8_via_walk, closed_form_F,
                                 f_combination, series_coeffs, walk_dist, walk_table)
from eightvertex.params import KernelParams


def test_walk_conserves_mass():
    for pr in [(F(1, 5), F(1, 3)), (F(3, 4), F(2, 3))]:
        for t, dist in enumerate(walk_table(10, KernelParams(*pr), "rational")):
            assert dist.total() == 1
            assert all(abs(i) <= t for i, _ in dist.probs)


def test_walk_start():
    dist = walk_dist(0, KernelParams(0.3, 0.4))
    assert dist.signed(0) == 1 and dist.signed(1) == 0


@pytest.mark.parametrize("pr", [(F(1, 5), F(1, 3)), (F(7, 10), F(9, 10)), (F(1, 2), F(1, 4))])
def test_walk_series_closed_form(pr):
    q = KernelParams(*pr)
    s = series_coeffs(14, q, "rational")
    for t in range(15):
        for i in range(-t - 1, t + 2):
            v = c8(i, t, q, "rational")
            assert c8_via_walk(i, t, q, "rational") == v
            assert s.at(i, t) == v


def test_series_float():
    q = KernelParams(0.2, 0.35)
    s = series_coeffs(10, q)
    assert s.at(2, 6) == pytest.approx(c8(2, 6, q), abs=1e-14)
    with pytest.raises(ValueError):
        series_coeffs(-1, q)


def test_paths_match():
    q = KernelParams(F(1, 4), F(1, 3))
    for t in range(MAX_PATH_STEPS + 1):
        for i in range(-t, t + 1):
            assert brute_force_paths(i, t, q, "rational") == c8(i, t, q, "rational")


def test_paths_regime_and_depth():
    with pytest.raises(RegimeError):
        brute_force_paths(0, 3, KernelParams(0.8, 0.6))
    with pytest.raises(ValueError):
        brute_force_paths(0, MAX_PATH_STEPS + 1, KernelParams(0.2, 0.3))


def _solve_system(C, K, R, L):
    # unknowns ordered F01, F00, F11, F10
    A = np.array([[1, -L, -K, -C],
                  [-L, 1, -C, -K],
                  [-K, -C, 1, -R],
                  [-C, -K, -R, 1]], dtype=float)
    return np.linalg.solve(A, np.array([1.0, 0, 0, 0]))


@pytest.mark.parametrize("vals", [(0.1, 0.2, 0.05, 0.3), (0.03, -0.2, 0.4, 0.1),
                                  (0.25, 0.15, -0.3, -0.2)])
def test_closed_form_F_solves_linear_system(vals):
    sol = _solve_system(*vals)
    got = [closed_form_F(0, 1, *vals), closed_form_F(0, 0, *vals),
           closed_form_F(1, 1, *vals), closed_form_F(1, 0, *vals)]
    assert np.allclose(got, sol, atol=1e-12)
    f01, f00, f11, f10 = sol
    assert f_combination(*vals) == pytest.approx(f01 - f00 + f11 - f10, abs=1e-12)


def test_closed_form_F_errors():
    with pytest.raises(ValueError):
        closed_form_F(2, 0, 0.1, 0.1, 0.1, 0.1)
    with pytest.raises(SingularError):
        closed_form_F(0, 1, 0.0, 0.0, 0.0, 1.0)


@pytest.mark.parametrize("pr", [(0.2, 0.35), (0.1, 0.6), (0.45, 0.15)])
def test_generating_function_matches_series(pr):
    q = KernelParams(*pr)
    l, x = 0.1, 0.7
    s = series_coeffs(40, q)
    total = sum(v * l ** t * x ** j for t, row in enumerate(s.coeff) for j, v in enumerate(row))
    fc = f_combination(q.p * l * x, q.r * l * x, q.delta * l, q.delta * l * x * x)
    assert fc == pytest.approx(total, abs=1e-9)
