from dataclasses import replace

import mpmath
import numpy as np
import pytest

from utils.errors import BadVariant, IncompleteVector, NonPositiveT, SeriesNonConvergent, SquareDiscriminant
from utils.periods import (
    DEFAULT_SETTINGS,
    PeriodVector,
    Poly,
    SeriesSettings,
    algebraic_part,
    bessel_ratio,
    closed_form_identity_component,
    coefficient_relation_residuals,
    completed_classes,
    cusp_width,
    d_coefficient,
    eval_fricke_slashed,
    eval_slashed_form,
    period_coefficients,
    period_polynomial_numeric,
    period_relation_residuals,
    poly_slash,
    slashed_form_completed,
    slashed_form_converged,
)
from utils.qforms import IDENTITY, S_MATRIX, T_MATRIX, U_MATRIX, UnimodularMatrix, coset_rep_map, validate_family
from utils.theorems import theorem1_identity_report
from utils.zetafun import zeta_family_euler

PREC = 192


def family(k=2, N=2, D=17, rho=1):
    return validate_family(k, N, D, rho, require_nonsquare=True)


def test_poly_basics():
    P = Poly((1, 2, 3))
    assert P.evaluate(2) == 1 + 4 + 12
    assert P.even_part() == Poly((1, 0, 3))
    assert P.odd_part() == Poly((0, 2, 0))
    assert P.even_part() + P.odd_part() == P
    assert (P - P).max_abs() == 0
    assert P.max_abs_diff(Poly((1, 2, 0))) == 3


def test_poly_slash_identity_and_inversion():
    P = Poly((1, 2, 3))
    assert poly_slash(P, IDENTITY, 2) == P
    # (X^2 | S)(z) = z^2 (-1/z)^2
    assert poly_slash(Poly((0, 0, 1)), S_MATRIX, 2) == Poly((1, 0, 0))


def test_poly_slash_is_a_right_action():
    P = Poly((1, -2, 3, 0, 5))
    for g, h in [(S_MATRIX, T_MATRIX), (T_MATRIX, U_MATRIX), (U_MATRIX, UnimodularMatrix(2, 1, 1, 1))]:
        assert poly_slash(poly_slash(P, g, 4), h, 4) == poly_slash(P, g @ h, 4)


def test_relation_residuals_vanish_on_coboundary_shape():
    Q = Poly((3, -1, 2))
    P = Q - poly_slash(Q, S_MATRIX, 2)
    vector = PeriodVector(1, 2, {IDENTITY: P})
    assert period_relation_residuals(vector, 1, 4)["res_S"] == 0


def test_relation_residuals_need_every_coset():
    vector = PeriodVector(2, 2, {IDENTITY: Poly((1, 0, 0))})
    with pytest.raises(IncompleteVector):
        period_relation_residuals(vector, 2, 4)
    zero = PeriodVector.zero(2, 2)
    residuals = period_relation_residuals(zero, 2, 4)
    assert residuals == {"res_S": 0, "res_U": 0}


def test_period_vector_lookup_by_coset():
    reps = coset_rep_map(3)
    vector = PeriodVector(3, 2, {M: Poly((i, 0, 0)) for i, M in enumerate(reps.values())})
    shifted = UnimodularMatrix(1, 0, 3, 1) @ reps[(1, 0)]
    assert vector.entry_for(shifted) == vector.entry_for(reps[(1, 0)])


@pytest.mark.parametrize("k, n, coeffs, expected", [
    (2, 0, (5, 7, 11), 11),
    (2, 1, (5, 7, 11), 7),
    (2, 2, (5, 7, 11), 5),
    (3, 2, (1, 2, 3), 10),
    (3, 4, (1, 2, 3), 1),
])
def test_d_coefficient(k, n, coeffs, expected):
    assert d_coefficient(k, n, *coeffs) == expected


def test_algebraic_part_examples():
    assert algebraic_part(family(2, 2, 17, 1)) == Poly((-8, 0, 16))
    assert algebraic_part(family(2, 1, 5, 1)) == Poly((-4, 0, 4))


def test_algebraic_part_satisfies_coefficient_relation():
    residuals = coefficient_relation_residuals(algebraic_part(family(2, 2, 17, 1)), 2, 2)
    assert all(r == 0 for r in residuals)


@pytest.mark.parametrize("k, N, D, rho", [(2, 2, 17, 1), (2, 1, 5, 1), (2, 1, 13, 1)])
def test_closed_form_vanishes_without_cusp_forms(k, N, D, rho):
    fam = family(k, N, D, rho)
    zeta_rho = zeta_family_euler(fam, prec=PREC)
    zeta_neg = zeta_family_euler(fam.negated(), prec=PREC)
    closed = closed_form_identity_component(fam, zeta_rho, zeta_neg, PREC)
    assert closed.max_abs() < mpmath.mpf(10) ** -30


def test_cusp_width():
    assert cusp_width(IDENTITY, 1) == 1
    assert cusp_width(IDENTITY, 2) == 1
    assert cusp_width(S_MATRIX, 2) == 2
    assert cusp_width(UnimodularMatrix(1, 0, 2, 1), 4) == 1
    assert cusp_width(UnimodularMatrix(1, 0, 2, 1), 8) == 2


def test_slashed_form_argument_checks():
    fam = family()
    with pytest.raises(NonPositiveT):
        eval_slashed_form(fam, "plain", IDENTITY, 0.0, 16)
    with pytest.raises(BadVariant):
        eval_slashed_form(fam, "sideways", IDENTITY, 1.0, 16)
    with pytest.raises(SquareDiscriminant):
        eval_slashed_form(validate_family(2, 1, 9, 1), "plain", IDENTITY, 1.0, 16)


def test_slashed_form_variants_combine():
    fam = family()
    plain = eval_slashed_form(fam, "plain", S_MATRIX, 1.3, 64)
    primed = eval_slashed_form(fam, "primed", S_MATRIX, 1.3, 64)
    plus = eval_slashed_form(fam, "plus", S_MATRIX, 1.3, 64)
    minus = eval_slashed_form(fam, "minus", S_MATRIX, 1.3, 64)
    assert abs(plus - (plain + primed)) < 1e-12
    assert abs(minus - 1j * (plain - primed)) < 1e-12


def test_fricke_slash_is_the_negated_family():
    for fam in (family(), family(3, 2, 17, 3), family(2, 3, 13, 1)):
        for t in (0.4, 0.8, 1.7):
            fricke = eval_fricke_slashed(fam, t, 64)
            swapped = eval_slashed_form(fam.negated(), "plain", IDENTITY, t, 64)
            assert abs(fricke - swapped) <= 1e-10 * max(1.0, abs(swapped))


@pytest.mark.parametrize("k, N, D, rho", [(2, 2, 17, 1), (3, 1, 5, 1), (6, 1, 5, 1)])
def test_s_slash_inverts_the_point(k, N, D, rho):
    fam = family(k, N, D, rho)
    for t in (0.5, 1.0, 2.5):
        slashed = eval_slashed_form(fam, "plain", S_MATRIX, t, 128)
        inverted = eval_slashed_form(fam, "plain", IDENTITY, 1 / t, 128) * mpmath.mpc(0, t) ** (-2 * k)
        assert abs(slashed - inverted) <= 1e-10 * max(1.0, abs(inverted))


def test_truncated_series_settles_under_b_doubling():
    fam = family(6, 1, 5, 1)
    for t in (0.8, 1.0, 1.5):
        coarse = eval_slashed_form(fam, "plain", IDENTITY, t, 512)
        fine = eval_slashed_form(fam, "plain", IDENTITY, t, 1024)
        assert abs(coarse - fine) < 1e-9


def test_completed_classes_belong_to_the_family():
    fam = family()
    a2, b2 = completed_classes(fam, IDENTITY, 200)
    assert a2.size
    assert np.all(np.diff(np.abs(a2)) >= 0)
    for a, b in zip(a2.tolist(), b2.tolist()):
        assert 0 < abs(a) <= 200
        assert 0 <= b < 2 * abs(a)
        assert (b * b - 17) % (4 * a) == 0
        assert a % 2 == 0
        assert (b - 1) % 4 == 0


def test_bessel_ratio_closed_forms():
    theta = np.array([0.0, 0.1, 1.0, 4.0, 5.5, 12.0, 40.0])
    assert np.allclose(bessel_ratio(1, theta), np.sinc(theta / np.pi), rtol=0, atol=1e-13)
    theta = np.array([0.5, 3.0, 7.0, 25.0])
    expected = (np.sin(theta) - theta * np.cos(theta)) / (2 * theta ** 3)
    assert np.allclose(bessel_ratio(2, theta), expected, rtol=0, atol=1e-13)


@pytest.mark.parametrize("k, N, D, rho, A, t", [
    (6, 1, 5, 1, IDENTITY, 1.0),
    (6, 1, 5, 1, IDENTITY, 1.6),
    (6, 1, 5, 1, IDENTITY, 0.7),
    (6, 2, 17, 1, S_MATRIX, 1.1),
])
def test_completed_series_matches_truncated_series(k, N, D, rho, A, t):
    fam = family(k, N, D, rho)
    completed, completed_err = slashed_form_completed(fam, "plain", A, t)
    truncated, _ = slashed_form_converged(fam, "plain", A, t)
    assert completed_err < 1e-9
    assert abs(completed - truncated) < 1e-6


def test_completed_series_strict_mode_raises():
    settings = SeriesSettings(a_bound_initial=2, a_bound_cap=8, series_tol=1e-30, strict=True)
    with pytest.raises(SeriesNonConvergent):
        slashed_form_completed(family(), "plain", S_MATRIX, 1.0, settings)


def test_series_strict_mode_raises():
    settings = SeriesSettings(b_bound_initial=2, b_bound_cap=16, series_tol=1e-30, strict=True)
    with pytest.raises(SeriesNonConvergent):
        slashed_form_converged(family(), "plain", IDENTITY, 1.0, settings)


def test_series_lenient_mode_returns_estimate():
    settings = SeriesSettings(b_bound_initial=2, b_bound_cap=16, series_tol=1e-30)
    value, error = slashed_form_converged(family(), "plain", IDENTITY, 1.0, settings)
    assert np.isfinite(complex(value).real)
    assert 0 < error < np.inf


def test_single_cancelling_shell_is_not_convergence():
    # at t = 1 the |b| = 3 shell of (2, 2, 17, 1) sums to zero
    fam = family()
    shell = eval_slashed_form(fam, "plain", IDENTITY, 1.0, 4) - eval_slashed_form(fam, "plain", IDENTITY, 1.0, 2)
    assert abs(shell) < 1e-12
    settings = SeriesSettings(b_bound_initial=2, b_bound_cap=4, series_tol=1e-9, strict=True)
    with pytest.raises(SeriesNonConvergent):
        slashed_form_converged(fam, "plain", IDENTITY, 1.0, settings)
    value, error = slashed_form_converged(fam, "plain", IDENTITY, 1.0, replace(settings, strict=False))
    assert error == np.inf


def test_default_settings():
    assert DEFAULT_SETTINGS.b_bound_initial == 64
    assert DEFAULT_SETTINGS.b_bound_cap == 32768
    assert DEFAULT_SETTINGS.a_bound_initial == 256
    assert DEFAULT_SETTINGS.a_bound_cap == 65536
    assert DEFAULT_SETTINGS.series_tol == 1e-9


def test_algebraic_part_weight_twelve():
    assert algebraic_part(family(6, 1, 5, 1)) == Poly((-4, 0, -20, 0, 60, 0, -60, 0, 20, 0, 4))


def test_closed_form_with_cusp_form_carries_unit_on_even_powers():
    fam = family(6, 1, 5, 1)
    zeta = zeta_family_euler(fam, prec=PREC)
    closed = closed_form_identity_component(fam, zeta, zeta_family_euler(fam.negated(), prec=PREC), PREC)
    expected_middle = {2: -20, 4: 60, 6: -60, 8: 20}
    for m in range(11):
        c = mpmath.mpc(closed.coefficient(m))
        if m % 2:
            assert c == 0
        else:
            assert c.real == 0
        if m in expected_middle:
            assert c.imag == expected_middle[m]
    assert abs(mpmath.mpc(closed.coefficient(0)) - mpmath.mpc(0, 1.041968162)) < 1e-8
    assert abs(mpmath.mpc(closed.coefficient(10)) + mpmath.mpc(0, 1.041968162)) < 1e-8
    assert max(coefficient_relation_residuals(closed, 1, 6)) < mpmath.mpf(10) ** -30


@pytest.mark.slow
def test_identity_component_matches_closed_form():
    report = theorem1_identity_report(2, 2, 17, 1, PREC, c_max=20000)
    assert report.algebraic == Poly((-8, 0, 16))
    assert report.max_gap < 1e-6
    assert report.coefficient_residuals[0] < 1e-6


@pytest.mark.slow
def test_numeric_period_vector_satisfies_relations():
    vector = period_polynomial_numeric(family(), "plus", PREC)
    residuals = period_relation_residuals(vector, 2, 4)
    assert residuals["res_S"] < 1e-5
    assert residuals["res_U"] < 1e-5


@pytest.mark.slow
def test_identity_component_with_cusp_form_matches_closed_form():
    settings = SeriesSettings(quadrature_tol=1e-10, series_tol=1e-11)
    report = theorem1_identity_report(6, 1, 5, 1, PREC, c_max=2000, settings=settings)
    assert report.algebraic == Poly((-4, 0, -20, 0, 60, 0, -60, 0, 20, 0, 4))
    assert abs(mpmath.mpc(report.numeric.coefficient(6)) - mpmath.mpc(0, -60)) < 1e-6
    assert report.max_gap < 1e-6
    assert report.middle_gap < 1e-6
    assert max(report.coefficient_residuals) < 1e-6
    assert report.error_budget["definition_gap"] < 1e-6


@pytest.mark.slow
def test_period_coefficients_stable_when_tolerance_halves():
    fam = family(6, 1, 5, 1)
    coarse = period_coefficients(fam, "plain", IDENTITY, SeriesSettings(quadrature_tol=1e-8))
    fine = period_coefficients(fam, "plain", IDENTITY, SeriesSettings(quadrature_tol=5e-9))
    assert max(abs(a - b) for a, b in zip(coarse, fine)) < 3e-8
