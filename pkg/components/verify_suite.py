"""
Verification suite behind `qpz verify`.

Each criterion returns (gap, tolerance, passed); tolerance 0 marks an exact
check. The fast suite skips the quadrature-heavy period criteria.
"""
import logging
import time
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

import mpmath
import numpy as np
import sympy
from sympy.functions.combinatorial.numbers import jacobi_symbol

from utils.config import RunConfig
from utils.errors import QpzError
from utils.exact import ExactValue, bernoulli, kronecker, sigma_divisor
from utils.periods import Poly, period_polynomial_numeric, period_relation_residuals
from utils.qforms import (
    S_MATRIX,
    T_MATRIX,
    act,
    coset_label,
    coset_rep_map,
    count_b_solutions,
    enumerate_ac_negative,
    enumerate_truncated,
    fricke,
    gamma0_index,
    iota,
    random_unimodular,
    solution_count_table,
    validate_family,
)
from utils.theorems import (
    theorem1_identity_report,
    theorem2_difference,
    theorem2_report,
    theorem3_dedekind,
    theorem3_inner_sums,
)
from utils.zetafun import dedekind_zeta_oracle, hurwitz_zeta, zeta_family_direct

logger = logging.getLogger(__name__)

Outcome = Tuple[float, float, bool]

SUITES = ("fast", "full")
FAST_CRITERIA = (1, 2, 3, 4, 5, 9)
FULL_CRITERIA = (1, 2, 3, 4, 5, 6, 7, 8, 9)
RANDOM_MATRIX_SEED = 20240917


def _exact_gap(value: ExactValue, expected: ExactValue) -> float:
    return 0.0 if value == expected else float(abs(value.to_mpf(64) - expected.to_mpf(64))) or 1.0


def check_dedekind_example_17(config: RunConfig) -> Outcome:
    report = theorem3_dedekind(2, 2, 17, prec=config.precision_bits)
    expected = ExactValue(Fraction(4, 51), 4, 17)
    exact_ok = report.exact == expected
    gap = float(report.abs_gap)
    return max(gap, _exact_gap(report.exact, expected)), 1e-10, exact_ok and gap < 1e-10


def check_dedekind_example_145(config: RunConfig) -> Outcome:
    report = theorem3_dedekind(2, 3, 145, prec=config.precision_bits)
    expected = ExactValue(Fraction(128, 435), 4, 145)
    exact_ok = report.exact == expected and report.inner_sums == {1: 64, 3: 640}
    gap = float(report.abs_gap)
    return max(gap, _exact_gap(report.exact, expected)), 1e-10, exact_ok and gap < 1e-10


def check_inner_sums_17(config: RunConfig) -> Outcome:
    sums = theorem3_inner_sums(2, 2, 17)
    gap = abs(sums.get(1, 0) - 4) + abs(sums.get(2, 0) - 20)
    return float(gap), 0.0, gap == 0


def check_decomposition_17(config: RunConfig) -> Outcome:
    prec = config.precision_bits
    c_max = min(config.c_max, 100000)
    level_2 = zeta_family_direct(validate_family(2, 2, 17, 1), 2, c_max, prec)
    level_1 = zeta_family_direct(validate_family(2, 1, 17, 1), 2, c_max, prec)
    oracle = dedekind_zeta_oracle(17, 2, prec)
    with mpmath.workprec(prec):
        gap = abs(oracle - (level_2.value + level_1.value / 4))
        tolerance = level_2.tail_estimate + level_1.tail_estimate / 4 + mpmath.mpf("1e-10")
    return float(gap), float(tolerance), bool(gap <= tolerance)


def check_zeta_difference(config: RunConfig) -> Outcome:
    failures = 0
    for D in (5, 13, 17):
        if not theorem2_difference(3, 1, D, 1).is_zero():
            failures += 1
    for N, D, rho in ((2, 17, 1), (3, 13, 1)):
        neg = (-rho) % (2 * N)
        if theorem2_difference(3, N, D, rho) != -theorem2_difference(3, N, D, neg):
            failures += 1

    worst = 0.0
    tolerance = 0.0
    for N, D in ((2, 17), (3, 13)):
        report = theorem2_report(3, N, D, 1, 20000, config.precision_bits)
        worst = max(worst, float(report.abs_gap))
        tolerance = max(tolerance, float(report.tail_total))
        if report.abs_gap > report.tail_total:
            failures += 1
    return max(worst, float(failures)), tolerance, failures == 0


def _enumeration_oracle(k: int, N: int, D: int, rho: int) -> Poly:
    """Algebraic part by brute-force search over (a, b, c) and sympy expansion."""
    X = sympy.Symbol("X")
    total = sympy.Integer(0)
    for b in range(-D, D + 1):
        if (b - rho) % (2 * N) or b * b >= D:
            continue
        for a in range(-D, D + 1):
            for c in range(-D, D + 1):
                if a * c >= 0 or b * b - 4 * N * a * c != D:
                    continue
                sign = 1 if a > 0 else -1
                total += sign * (N * a * X ** 2 - b * X + c) ** (k - 1)
    coeffs = sympy.Poly(sympy.expand(total), X).all_coeffs()[::-1] if total != 0 else [0]
    coeffs = [int(c) for c in coeffs] + [0] * (2 * k - 1 - len(coeffs))
    return Poly(tuple(coeffs))


class _IdentityCheck:
    """Shares one identity-component run between the closed-form and coefficient checks."""

    def __init__(self):
        self._reports: Dict[Tuple, object] = {}

    def report(self, config: RunConfig):
        key = (config.precision_bits, config.series_settings())
        if key not in self._reports:
            self._reports[key] = theorem1_identity_report(
                2, 2, 17, 1, config.precision_bits, config.c_max, config.series_settings())
        return self._reports[key]


_IDENTITY = _IdentityCheck()


def check_identity_component(config: RunConfig) -> Outcome:
    report = _IDENTITY.report(config)
    oracle = _enumeration_oracle(2, 2, 17, 1)
    algebraic_ok = report.algebraic == oracle == Poly((-8, 0, 16))
    gap = float(report.max_gap)
    return gap, 1e-6, algebraic_ok and gap < 1e-6


def check_coefficient_relation(config: RunConfig) -> Outcome:
    report = _IDENTITY.report(config)
    gap = float(report.coefficient_residuals[0])
    return gap, 1e-6, gap < 1e-6


def check_period_relations(config: RunConfig) -> Outcome:
    fam = validate_family(2, 2, 17, 1, require_nonsquare=True)
    vector = period_polynomial_numeric(fam, "plus", config.precision_bits, config.series_settings())
    residuals = period_relation_residuals(vector, fam.N, 2 * fam.k)
    gap = float(max(residuals.values()))
    return gap, 1e-5, gap < 1e-5


def _invariant_failures(prec: int) -> List[str]:
    failures = []

    for n in range(3, 42, 2):
        if bernoulli(n) != 0:
            failures.append(f"B_{n} != 0")
    if bernoulli(2) != Fraction(1, 6) or bernoulli(4) != Fraction(-1, 30):
        failures.append("B_2 or B_4 wrong")

    for n in range(1, 61):
        for ell in (0, 1, 3):
            if sigma_divisor(ell, n) != sum(d ** ell for d in sympy.divisors(n)):
                failures.append(f"sigma_{ell}({n})")
    for D in (5, 8, 12, 13, 17, 21, 145):
        for n in range(3, 60, 2):
            if kronecker(D, n) != int(jacobi_symbol(D % n, n)):
                failures.append(f"kronecker({D}, {n})")
        for m in range(1, 20):
            for n in range(1, 20):
                if kronecker(D, m * n) != kronecker(D, m) * kronecker(D, n):
                    failures.append(f"kronecker({D}, {m}*{n}) not multiplicative")

    rng = np.random.default_rng(RANDOM_MATRIX_SEED)
    random_movers = [random_unimodular(rng, 50) for _ in range(1000)]
    for N, D, rho in ((1, 5, 1), (2, 17, 1), (2, 17, 3), (3, 13, 1), (5, 21, 1)):
        fam = validate_family(2, N, D, rho, require_nonsquare=True)
        forms = set(enumerate_ac_negative(fam))
        swapped = set(enumerate_ac_negative(fam.negated()))
        if {fricke(Q, N) for Q in forms} != swapped:
            failures.append(f"Fricke bijection at {(N, D, rho)}")
        if {iota(Q, N) for Q in forms} != forms:
            failures.append(f"iota bijection at {(N, D, rho)}")
        movers = list(coset_rep_map(N).values()) + [S_MATRIX, T_MATRIX]
        for Q in enumerate_truncated(fam, 12):
            for M in movers:
                if act(Q, M).discriminant != D:
                    failures.append(f"discriminant of {Q.as_tuple()} moved by {M.as_tuple()}")
            moved = [M for M in random_movers if act(Q, M).discriminant != D]
            if moved:
                failures.append(f"discriminant of {Q.as_tuple()} moved by {moved[0].as_tuple()}")
        table = solution_count_table(fam, 200)
        for c in range(1, 201):
            if int(table[c]) != count_b_solutions(fam, c):
                failures.append(f"solution count at c={c} for {(N, D, rho)}")
                break

    with mpmath.workprec(prec):
        for s in (2, 3, 4, 5):
            for x in (Fraction(1), Fraction(1, 2), Fraction(1, 3), Fraction(3, 4)):
                ours = hurwitz_zeta(s, x, prec)
                reference = mpmath.zeta(s, mpmath.mpf(x.numerator) / x.denominator)
                if abs(ours - reference) > mpmath.mpf(2) ** (10 - prec) * abs(reference):
                    failures.append(f"hurwitz({s}, {x})")

    for N in range(1, 31):
        reps = coset_rep_map(N)
        if len(reps) != gamma0_index(N):
            failures.append(f"coset count at N={N}")
        for label, M in reps.items():
            if coset_label(M, N) != label:
                failures.append(f"coset label at N={N}, {label}")
    return failures


def check_invariants(config: RunConfig) -> Outcome:
    failures = _invariant_failures(config.precision_bits)
    for failure in failures[:10]:
        logger.warning("invariant failed: %s", failure)
    return float(len(failures)), 0.0, not failures


CRITERIA: Dict[int, Tuple[str, Callable[[RunConfig], Outcome]]] = {
    1: ("zeta_K(2), D=17 via level 2", check_dedekind_example_17),
    2: ("zeta_K(2), D=145 via level 3", check_dedekind_example_145),
    3: ("inner divisor sums, D=17", check_inner_sums_17),
    4: ("level decomposition of zeta_K(2), D=17", check_decomposition_17),
    5: ("odd-k zeta difference", check_zeta_difference),
    6: ("identity component closed form", check_identity_component),
    7: ("coefficient relation p_0 + N p_2", check_coefficient_relation),
    8: ("period relations res_S, res_U", check_period_relations),
    9: ("invariant suites", check_invariants),
}


def run_suite(suite: str, config: RunConfig) -> List[Dict[str, object]]:
    """
    Run the criteria of a suite and return one row per criterion.

    A criterion that raises a domain error is reported as failed.

    Raises:
        ValueError: If suite is not fast or full
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    numbers = FAST_CRITERIA if suite == "fast" else FULL_CRITERIA
    rows = []
    for number in numbers:
        description, check = CRITERIA[number]
        start = time.perf_counter()
        try:
            gap, tolerance, passed = check(config)
        except QpzError as e:
            logger.warning("criterion %d raised %s: %s", number, type(e).__name__, e)
            gap, tolerance, passed = float("inf"), 0.0, False
        seconds = time.perf_counter() - start
        logger.info("criterion %d %s in %.2fs", number, "passed" if passed else "FAILED", seconds)
        rows.append({
            "criterion": number,
            "description": description,
            "gap": gap,
            "tolerance": tolerance,
            "passed": passed,
            "seconds": seconds,
        })
    return rows
