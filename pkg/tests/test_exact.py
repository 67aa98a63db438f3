import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from utils.errors import QpzError
from utils.exact import (
    ExactValue,
    bernoulli,
    binomial,
    is_fundamental,
    kronecker,
    sigma_divisor,
    squarefree_decomposition,
    zeta_even_exact,
)


@pytest.mark.parametrize("n, expected", [
    (0, Fraction(1)),
    (1, Fraction(-1, 2)),
    (2, Fraction(1, 6)),
    (4, Fraction(-1, 30)),
    (6, Fraction(1, 42)),
    (8, Fraction(-1, 30)),
    (10, Fraction(5, 66)),
    (12, Fraction(-691, 2730)),
])
def test_bernoulli_known_values(n, expected):
    assert bernoulli(n) == expected


def test_bernoulli_odd_indices_vanish():
    for n in range(3, 60, 2):
        assert bernoulli(n) == 0


def test_bernoulli_rejects_negative_index():
    with pytest.raises(ValueError):
        bernoulli(-1)


def test_binomial():
    assert binomial(6, 3) == 20
    assert binomial(2, 1) == 2
    assert binomial(5, 7) == 0
    assert binomial(5, -1) == 0


def test_sigma_divisor():
    assert sigma_divisor(1, 12) == 28
    assert sigma_divisor(0, 12) == 6
    assert sigma_divisor(3, 2) == 9
    assert sigma_divisor(1, 1) == 1
    with pytest.raises(QpzError):
        sigma_divisor(1, 0)


def test_sigma_divisor_is_multiplicative():
    for m in range(1, 30):
        for n in range(1, 30):
            if math.gcd(m, n) == 1:
                assert sigma_divisor(1, m * n) == sigma_divisor(1, m) * sigma_divisor(1, n)


@pytest.mark.parametrize("D, n, expected", [
    (17, 2, 1),
    (5, 2, -1),
    (8, 2, 0),
    (13, 3, 1),
    (5, 3, -1),
    (5, 5, 0),
    (17, 1, 1),
    (5, 0, 0),
    (1, 0, 1),
    (12, 5, -1),
])
def test_kronecker_values(D, n, expected):
    assert kronecker(D, n) == expected


@pytest.mark.parametrize("D", [5, 8, 12, 13, 17])
def test_kronecker_is_periodic_mod_discriminant(D):
    for n in range(0, 300):
        assert kronecker(D, n + D) == kronecker(D, n)
        assert kronecker(D, n) in (-1, 0, 1)
        assert (kronecker(D, n) == 0) == (math.gcd(D, n) > 1)


def test_is_fundamental():
    for D in (5, 8, 12, 13, 17, 21, 145):
        assert is_fundamental(D)
    for D in (1, 4, 9, 16, 20, 45):
        assert not is_fundamental(D)


def test_squarefree_decomposition():
    assert squarefree_decomposition(72) == (6, 2)
    assert squarefree_decomposition(17) == (1, 17)
    assert squarefree_decomposition(1) == (1, 1)


def test_exact_value_normalizes_square_factors():
    assert ExactValue(1, 4, 68) == ExactValue(Fraction(1, 2), 4, 17)
    assert ExactValue(0, 4, 17) == ExactValue(0)


def test_exact_value_symbolic():
    assert ExactValue(Fraction(4, 51), 4, 17).symbolic() == "4*pi^4/(51*sqrt(17))"
    assert ExactValue(Fraction(128, 435), 4, 145).symbolic() == "128*pi^4/(435*sqrt(145))"
    assert ExactValue(Fraction(1, 6), 2).symbolic() == "pi^2/6"
    assert ExactValue(Fraction(-3, 2)).symbolic() == "-3/2"
    assert ExactValue(0).symbolic() == "0"


def test_exact_value_record():
    record = ExactValue(Fraction(2, 75), 4, 5).to_record()
    assert record == {"q": "2/75", "pi_power": 4, "sqrt_D": 5, "symbolic": "2*pi^4/(75*sqrt(5))"}


def test_exact_value_arithmetic():
    a = ExactValue(Fraction(1, 3), 2, 5)
    assert a + a == ExactValue(Fraction(2, 3), 2, 5)
    assert -a + a == ExactValue(0)
    assert a * 3 == ExactValue(1, 2, 5)
    assert a * ExactValue(1, 2, 5) == ExactValue(Fraction(1, 15), 4)
    with pytest.raises(QpzError):
        a + ExactValue(1, 4, 5)


def test_zeta_even_exact():
    assert zeta_even_exact(2) == ExactValue(Fraction(1, 6), 2)
    assert zeta_even_exact(4) == ExactValue(Fraction(1, 90), 4)
    with mpmath.workprec(192):
        assert abs(zeta_even_exact(6).to_mpf(192) - mpmath.zeta(6)) < mpmath.mpf(10) ** -50
    with pytest.raises(QpzError):
        zeta_even_exact(3)


def test_fraction_arithmetic_is_exact():
    rng = np.random.default_rng(11)
    for _ in range(500):
        a, c = (int(v) for v in rng.integers(-10 ** 12, 10 ** 12, size=2))
        b, d = (int(v) for v in rng.integers(1, 10 ** 12, size=2))
        x, y = Fraction(a, b), Fraction(c, d)
        assert (x + y) - y == x
        if y:
            assert (x * y) / y == x


def test_exact_value_record_restores_rational():
    for value in (ExactValue(Fraction(4, 51), 4, 17), ExactValue(Fraction(-691, 2730)),
                  ExactValue(Fraction(10 ** 30 + 1, 3 ** 40), 8, 145)):
        record = value.to_record()
        restored = ExactValue(Fraction(record["q"]), record["pi_power"], record["sqrt_D"])
        assert restored == value
