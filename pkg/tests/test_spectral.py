import math

import numpy as np
import pytest

from zeckgaps import SequenceTable, validate
from zeckgaps.spectral import (
    binet_a1,
    char_roots,
    dominant_root,
    lekkerkerker_constants,
    spectral_data,
    summand_totals,
)
from zeckgaps.zeck import enumerate_interval

from conftest import table

PHI = (1 + math.sqrt(5)) / 2


@pytest.mark.parametrize(
    "coeffs, expected",
    [([1, 1], [PHI, 1 - PHI]), ([10], [10.0]), ([2, 4], [1 + math.sqrt(5), 1 - math.sqrt(5)])],
)
def test_char_roots(coeffs, expected):
    roots = char_roots(validate(coeffs))
    assert np.allclose(sorted(z.real for z in roots), sorted(expected), atol=1e-12)


@pytest.mark.parametrize("coeffs", [[1, 1], [1, 1, 1], [1, 0, 1], [3, 1, 2], [2, 0, 0, 3]])
def test_roots_rebuild_polynomial_and_dominate(coeffs):
    rec = validate(coeffs)
    roots = char_roots(rec)
    assert np.allclose(np.poly(roots), [1] + [-c for c in coeffs], atol=1e-9)
    lam = float(dominant_root(rec))
    assert lam > 1 and all(abs(z) < lam - 1e-6 for z in roots[1:])


@pytest.mark.parametrize(
    "coeffs, a1",
    [([1, 1], PHI / math.sqrt(5)), ([10], 0.1), ([3], 1 / 3), ([2, 4], (2 + math.sqrt(5)) / (10 + 2 * math.sqrt(5)))],
)
def test_binet_a1(coeffs, a1):
    value, diag = binet_a1(table(coeffs, 200))
    assert value == pytest.approx(a1, abs=1e-12)
    assert diag["successive_difference"] < 1e-12


def test_binet_needs_depth():
    with pytest.raises(Exception):
        binet_a1(table([1, 1], 100))


@pytest.mark.parametrize("coeffs", [[1, 1], [2, 4], [10], [1, 0, 1], [3, 1, 2]])
def test_summand_totals_match_enumeration(coeffs):
    t = table(coeffs)
    totals = summand_totals(t.recurrence, 12)
    for n, (width, s) in enumerate(totals, start=1):
        assert width == t.width(n)
        if width <= 50000:
            assert s == sum(d.k for d in enumerate_interval(t, n))


@pytest.mark.parametrize(
    "coeffs, slope", [([1, 1], 1 / (PHI**2 + 1)), ([10], 4.5), ([3], 1.0), ([2], 0.5)]
)
def test_lekkerkerker(coeffs, slope):
    c, d, diag = lekkerkerker_constants(validate(coeffs))
    assert c == pytest.approx(slope, abs=1e-9)
    assert diag["fit_residual_ok"]
    assert diag["last_slope_change"] < 1e-3


def test_fibonacci_consistency_identity():
    s = spectral_data(validate([1, 1]))
    for k in range(2, 11):
        lhs = (s.lambda1 - 1) ** 2 * (s.a1 / s.c_lek) * s.lambda1 ** (-k)
        assert lhs == pytest.approx(PHI ** (-k), abs=1e-9)


def test_geometric_convergence_of_binet_ratio():
    rec = validate([1, 1, 1])
    t = SequenceTable.build(rec, 90)
    s = spectral_data(rec)
    rate = s.lambda2_abs / s.lambda1
    for n in range(10, 80):
        assert abs(t.G(n) / s.lambda1**n - s.a1) <= 2 * rate**n + 1e-13
