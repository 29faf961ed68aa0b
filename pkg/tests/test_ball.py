import math

import pytest

from reoptdb.ball import (round_half_up, sn_closed_form, sn_monte_carlo, sn_sqrt_profile,
                          sn_underestimate_bound)


def _exact(n):
    # the sum written out with exact fractions
    from fractions import Fraction
    total, survive = Fraction(0), Fraction(1)
    for k in range(1, n + 1):
        total += k * survive * Fraction(k, n)
        survive *= 1 - Fraction(k, n)
    return total


def test_small_values():
    assert sn_closed_form(1) == 1.0
    assert sn_closed_form(2) == pytest.approx(1.5)
    for n in (3, 7, 25):
        assert sn_closed_form(n) == pytest.approx(float(_exact(n)), rel=1e-12)


def test_invalid_n():
    with pytest.raises(ValueError):
        sn_closed_form(0)


def test_rounding():
    assert round_half_up(2.5) == 3 and round_half_up(2.49) == 2


def test_monte_carlo_degenerate():
    r = sn_monte_carlo(1, 50, seed=0)
    assert r.monte_carlo_mean == 1.0 and r.monte_carlo_stderr == 0.0


def test_monte_carlo_small_n():
    r = sn_monte_carlo(5, 20_000, seed=2)
    assert abs(r.z) < 4


def test_monte_carlo_reproducible():
    assert sn_monte_carlo(20, 500, seed=9) == sn_monte_carlo(20, 500, seed=9)


def test_profile():
    prof = sn_sqrt_profile([1, 100])
    assert prof[0] == (1, 1.0, 1.0)
    assert prof[1][2] == pytest.approx(sn_closed_form(100) / 10)


def test_underestimate_bound():
    assert round_half_up(sn_underestimate_bound(1000, 10)) == 12
    assert sn_underestimate_bound(50, 1) == sn_closed_form(50)
    assert sn_underestimate_bound(7, 7) == 1.0
    with pytest.raises(ValueError):
        sn_underestimate_bound(3, 4)


def test_grows_like_sqrt():
    assert sn_closed_form(4000) / math.sqrt(4000) == pytest.approx(math.sqrt(math.pi / 2), rel=0.03)
