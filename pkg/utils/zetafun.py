"""
Arbitrary-precision zeta functions.

Hurwitz zeta by Euler-Maclaurin summation, Dirichlet L-series of Kronecker
characters, the Dedekind zeta oracle zeta(s) L(s, chi_D) of a real quadratic
field, and the family zeta zeta_{N,D,rho}(k) both from its defining
solution-count series and from the Euler product of that series.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

import mpmath
import numpy as np
from sympy import primefactors

from utils.errors import BadWeight, NotFundamental, PrecisionUnreachable, QpzError, SquareDiscriminant
from utils.exact import bernoulli, is_fundamental, kronecker, zeta_even_exact
from utils.qforms import FormFamily, local_solution_count, solution_count_table, valuation

logger = logging.getLogger(__name__)

DEFAULT_PRECISION_BITS = 192
EULER_MACLAURIN_DEPTH = 12
MIN_SHIFT = 30
MAX_SHIFT = 10 ** 6
GUARD_BITS = 16

Number = Union[int, Fraction, mpmath.mpf]


@dataclass(frozen=True)
class ZetaResult:
    """A truncated family zeta value; value is not tail-corrected."""
    value: mpmath.mpf
    tail_estimate: mpmath.mpf
    c_max: int
    precision_bits: int
    heuristic_tail: bool = True


def _to_mpf(x: Number) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _em_term(j: int, s, a) -> mpmath.mpf:
    """j-th Euler-Maclaurin correction B_{2j}/(2j)! (s)_{2j-1} a^{-s-2j+1}."""
    b = bernoulli(2 * j)
    coeff = mpmath.mpf(b.numerator) / (b.denominator * mpmath.factorial(2 * j))
    return coeff * mpmath.rf(s, 2 * j - 1) * a ** (-s - 2 * j + 1)


def hurwitz_zeta(s: Number, x: Number, prec: int = DEFAULT_PRECISION_BITS,
                 with_error: bool = False):
    """
    Hurwitz zeta sum_{n >= 0} (n + x)^{-s} by Euler-Maclaurin summation.

    The first M terms are summed directly, M chosen with M + x >= 30 and
    large enough that the first omitted correction term is below 2^-prec.

    Args:
        s: Exponent, s >= 2
        x: Shift, 0 < x <= 1
        prec: Working precision in bits
        with_error: Also return the error bound

    Returns:
        mpf, or (mpf, mpf) when with_error is set

    Raises:
        PrecisionUnreachable: If the needed shift exceeds the cap
    """
    if prec < 64:
        raise QpzError(f"precision must be >= 64 bits, got {prec}")
    depth = EULER_MACLAURIN_DEPTH
    with mpmath.workprec(prec + GUARD_BITS):
        s = _to_mpf(s)
        x = _to_mpf(x)
        if s < 2:
            raise QpzError(f"hurwitz_zeta needs s >= 2, got {s}")
        if not 0 < x <= 1:
            raise QpzError(f"hurwitz_zeta needs 0 < x <= 1, got {x}")

        target = mpmath.ldexp(1, -prec)
        # first omitted term, as a function of a = M + x
        b = bernoulli(2 * depth + 2)
        lead = abs(mpmath.mpf(b.numerator) / (b.denominator * mpmath.factorial(2 * depth + 2)))
        lead *= mpmath.rf(s, 2 * depth + 1)
        power = s + 2 * depth + 1
        a_needed = (lead / target) ** (1 / power)
        shift = max(int(mpmath.ceil(MIN_SHIFT - x)), int(mpmath.ceil(a_needed - x)), 0)
        if shift > MAX_SHIFT:
            raise PrecisionUnreachable(
                f"Euler-Maclaurin shift {shift} exceeds {MAX_SHIFT} for {prec} bits")

        head = mpmath.fsum((n + x) ** (-s) for n in range(shift))
        a = shift + x
        tail = a ** (1 - s) / (s - 1) + a ** (-s) / 2
        tail += mpmath.fsum(_em_term(j, s, a) for j in range(1, depth + 1))
        value = head + tail

        error = lead * a ** (-power) + (shift + depth + 2) * mpmath.ldexp(abs(value), -prec)

    with mpmath.workprec(prec):
        value = +value
        error = +error
    if with_error:
        return value, error
    return value


def hurwitz_partial_sum(s: int, x: float, n_terms: int) -> Tuple[float, float]:
    """
    Naive double-precision partial sum of the Hurwitz series and the
    integral bound on its tail.

    Returns:
        Tuple[float, float]: (partial sum, tail bound)
    """
    n = np.arange(n_terms, dtype=np.float64)
    # sum small terms first
    partial = float(np.sum(((n + x) ** (-float(s)))[::-1]))
    tail = (n_terms - 1 + x) ** (1 - s) / (s - 1)
    return partial, tail


def _character_L(s: Number, D: int, prec: int, with_error: bool = False):
    """sum_n (D/n) n^{-s} through Hurwitz values at r/D; D is any discriminant."""
    with mpmath.workprec(prec + GUARD_BITS):
        terms, errors = [], []
        for r in range(1, D + 1):
            chi = kronecker(D, r)
            if chi == 0:
                continue
            value, err = hurwitz_zeta(s, Fraction(r, D), prec + GUARD_BITS, with_error=True)
            terms.append(chi * value)
            errors.append(err)
        scale = _to_mpf(D) ** (-_to_mpf(s))
        total = mpmath.fsum(terms) * scale
        error = mpmath.fsum(errors) * scale
    with mpmath.workprec(prec):
        total = +total
        error = +error
    if with_error:
        return total, error
    return total


def dirichlet_L(s: int, D: int, prec: int = DEFAULT_PRECISION_BITS) -> mpmath.mpf:
    """
    L(s, chi_D) = D^{-s} sum_{r=1}^{D} chi_D(r) zeta(s, r/D).

    D = 1 gives the Riemann zeta function.

    Raises:
        NotFundamental: If D is neither 1 nor a fundamental discriminant
    """
    if s < 2:
        raise QpzError(f"dirichlet_L needs s >= 2, got {s}")
    if D == 1:
        return hurwitz_zeta(s, 1, prec)
    if D < 1 or not is_fundamental(D):
        raise NotFundamental(f"D = {D} is not a fundamental discriminant")
    return _character_L(s, D, prec)


def character_partial_sum(s: int, D: int, n_terms: int) -> Tuple[float, float]:
    """
    Double-precision sum_{n <= n_terms} chi_D(n) n^{-s} and the tail bound
    n_terms^{1-s}/(s-1).
    """
    chi = np.array([kronecker(D, r) for r in range(D)], dtype=np.float64)
    n = np.arange(1, n_terms + 1)
    terms = chi[n % D] * n.astype(np.float64) ** (-float(s))
    return float(np.sum(terms[::-1])), n_terms ** (1 - s) / (s - 1)


def dedekind_zeta_oracle(D: int, s: int, prec: int = DEFAULT_PRECISION_BITS) -> mpmath.mpf:
    """zeta_K(s) = zeta(s) L(s, chi_D) for K = Q(sqrt(D))."""
    zeta_s = hurwitz_zeta(s, 1, prec)
    L = dirichlet_L(s, D, prec)
    with mpmath.workprec(prec):
        return zeta_s * L


def level_factor(N: int, two_k: int) -> Fraction:
    """prod_{p | N} (1 - p^{-2k}) as an exact rational."""
    factor = Fraction(1)
    for p in primefactors(N):
        factor *= 1 - Fraction(1, p ** two_k)
    return factor


def _check_family(fam: FormFamily, k: int) -> None:
    if k < 2:
        raise BadWeight(f"k must be >= 2, got {k}")
    if fam.is_square:
        raise SquareDiscriminant(f"D = {fam.D} is a perfect square")


def zeta_family_direct(fam: FormFamily, k: Optional[int] = None, c_max: int = 100000,
                       prec: int = DEFAULT_PRECISION_BITS) -> ZetaResult:
    """
    Truncated zeta_{N,D,rho}(k) from its solution-count series.

    zeta(2k) prod_{p|N}(1 - p^{-2k}) sum_{c <= c_max} count(c) c^{-k}, where
    count(c) = #{b mod 2Nc : b = rho mod 2N, b^2 = D mod 4Nc}.

    The tail estimate uses the largest count seen over the last decade of c
    together with the integral bound c_max^{1-k}/(k-1). It is a heuristic.

    Args:
        fam: Family (D nonsquare)
        k: Exponent, defaults to fam.k
        c_max: Truncation bound
        prec: Working precision in bits

    Returns:
        ZetaResult: Truncated value and tail estimate

    Raises:
        SquareDiscriminant: If D is a perfect square
    """
    k = fam.k if k is None else k
    _check_family(fam, k)
    if c_max < 1:
        raise QpzError(f"c_max must be >= 1, got {c_max}")

    counts = solution_count_table(fam, c_max)
    factor = level_factor(fam.N, 2 * k)
    last_decade = counts[c_max // 10 + 1:] if c_max >= 10 else counts[1:]
    c_hat = int(last_decade.max()) if last_decade.size else 0

    with mpmath.workprec(prec + GUARD_BITS):
        prefactor = zeta_even_exact(2 * k).to_mpf(prec + GUARD_BITS)
        prefactor *= mpmath.mpf(factor.numerator) / factor.denominator
        series = mpmath.fsum(mpmath.mpf(int(counts[c])) / c ** k
                             for c in np.flatnonzero(counts).tolist())
        value = prefactor * series
        tail = prefactor * c_hat * mpmath.mpf(c_max) ** (1 - k) / (k - 1)
    with mpmath.workprec(prec):
        value = +value
        tail = +tail

    logger.info("zeta_{%d,%d,%d}(%d) truncated at c_max=%d, heuristic tail %s",
                fam.N, fam.D, fam.rho, k, c_max, mpmath.nstr(tail, 5))
    return ZetaResult(value=value, tail_estimate=tail, c_max=c_max, precision_bits=prec)


def _local_series(fam: FormFamily, p: int, k: int, max_level: int = 256) -> mpmath.mpf:
    """
    sum_{e >= 0} local_solution_count(p, e) p^{-ek}.

    The counts are eventually constant in e; once they settle the rest is a
    geometric series.
    """
    settle_from = 2 * valuation(fam.D, p) + 3
    counts = [1]
    e = 1
    while True:
        if e > max_level:
            raise PrecisionUnreachable(f"local counts at p={p} did not settle by level {max_level}")
        counts.append(local_solution_count(fam, p, e))
        if e >= settle_from and counts[-1] == counts[-2] == counts[-3]:
            break
        e += 1

    x = mpmath.mpf(p) ** (-k)
    total = mpmath.fsum(count * x ** i for i, count in enumerate(counts))
    total += counts[-1] * x ** (len(counts)) / (1 - x)
    return total


def zeta_family_euler(fam: FormFamily, k: Optional[int] = None,
                      prec: int = DEFAULT_PRECISION_BITS) -> mpmath.mpf:
    """
    zeta_{N,D,rho}(k) to full working precision through the Euler product of
    the solution-count series.

    Away from 2ND the local factor is (1 - p^{-2k}) / ((1 - p^{-k})(1 - chi(p) p^{-k}))
    with chi = (D/.), so the product over those primes is
    zeta(k) L(k, chi) / zeta(2k) with the factors at p | 2ND removed. The
    primes dividing 2ND use the exact local counts.

    Raises:
        SquareDiscriminant: If D is a perfect square
    """
    k = fam.k if k is None else k
    _check_family(fam, k)
    factor = level_factor(fam.N, 2 * k)

    with mpmath.workprec(prec + GUARD_BITS):
        zeta_k = hurwitz_zeta(k, 1, prec + GUARD_BITS)
        L_k = _character_L(k, fam.D, prec + GUARD_BITS)
        value = zeta_k * L_k * mpmath.mpf(factor.numerator) / factor.denominator
        for p in primefactors(2 * fam.N * fam.D):
            x = mpmath.mpf(p) ** (-k)
            chi = kronecker(fam.D, p)
            value *= _local_series(fam, p, k) * (1 - x) * (1 - chi * x) / (1 - x * x)
    with mpmath.workprec(prec):
        return +value
