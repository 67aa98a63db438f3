import math

import numpy as np
import pytest

from utils.errors import BadWeight, CongruenceViolation, LevelMismatch, NotUnimodular, SquareDiscriminant
from utils.exact import kronecker
from utils.qforms import (
    IDENTITY,
    S_MATRIX,
    T_MATRIX,
    U_MATRIX,
    P1Line,
    QuadForm,
    UnimodularMatrix,
    act,
    coset_label,
    coset_rep_map,
    coset_reps,
    count_b_solutions,
    enumerate_ac_negative,
    enumerate_truncated,
    fricke,
    gamma0_index,
    gcdex,
    iota,
    local_solution_count,
    random_unimodular,
    smallest_prime_factors,
    solution_count_table,
    validate_family,
)

FAMILIES = [(2, 1, 5, 1), (2, 2, 17, 1), (2, 2, 17, 3), (2, 3, 13, 1), (2, 3, 145, 1), (3, 5, 21, 1)]


def test_validate_family_reduces_rho():
    assert validate_family(2, 2, 17, -1).rho == 3
    assert validate_family(2, 2, 17, 5).rho == 1


def test_validate_family_errors():
    with pytest.raises(BadWeight):
        validate_family(1, 2, 17, 1)
    with pytest.raises(CongruenceViolation):
        validate_family(2, 2, 17, 2)
    with pytest.raises(SquareDiscriminant):
        validate_family(2, 1, 9, 1, require_nonsquare=True)
    assert validate_family(2, 1, 9, 1).is_square


def test_gcdex():
    for a, b in [(12, 18), (17, 5), (0, 7), (7, 0), (-4, 6)]:
        x, y, g = gcdex(a, b)
        assert g == math.gcd(a, b)
        assert a * x + b * y == g


def test_matrix_relations():
    with pytest.raises(NotUnimodular):
        UnimodularMatrix(1, 1, 1, 1)
    assert S_MATRIX @ S_MATRIX == -IDENTITY
    assert U_MATRIX @ U_MATRIX @ U_MATRIX == -IDENTITY
    assert T_MATRIX @ T_MATRIX.inverse() == IDENTITY


def test_enumerate_ac_negative_level_two():
    fam = validate_family(2, 2, 17, 1, require_nonsquare=True)
    forms = [Q.as_tuple() for Q in enumerate_ac_negative(fam)]
    assert forms == [(-2, -3, 1), (2, -3, -1), (-4, 1, 1), (-2, 1, 2), (2, 1, -2), (4, 1, -1)]


@pytest.mark.parametrize("k, N, D, rho", FAMILIES)
def test_enumerated_forms_belong_to_family(k, N, D, rho):
    fam = validate_family(k, N, D, rho, require_nonsquare=True)
    for Q in enumerate_ac_negative(fam):
        assert fam.contains(Q)
        assert Q.A * Q.C < 0
    truncated = enumerate_truncated(fam, 20)
    assert all(fam.contains(Q) and abs(Q.B) <= 20 for Q in truncated)
    assert set(enumerate_ac_negative(fam)) <= set(truncated)


@pytest.mark.parametrize("k, N, D, rho", FAMILIES)
def test_fricke_and_iota_permute_families(k, N, D, rho):
    fam = validate_family(k, N, D, rho, require_nonsquare=True)
    forms = set(enumerate_ac_negative(fam))
    assert {fricke(Q, N) for Q in forms} == set(enumerate_ac_negative(fam.negated()))
    assert {iota(Q, N) for Q in forms} == forms
    for Q in forms:
        assert fricke(fricke(Q, N), N) == Q
        assert iota(iota(Q, N), N) == Q


def test_fricke_needs_level_divisibility():
    with pytest.raises(LevelMismatch):
        fricke(QuadForm(3, 1, 1), 2)


def test_action_preserves_discriminant():
    fam = validate_family(2, 3, 13, 1, require_nonsquare=True)
    movers = coset_reps(3) + [S_MATRIX, T_MATRIX, U_MATRIX]
    for Q in enumerate_truncated(fam, 15):
        for M in movers:
            assert act(Q, M).discriminant == Q.discriminant
        assert act(Q, IDENTITY) == Q


def test_random_matrices_are_bounded_and_unimodular():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        M = random_unimodular(rng, 50)
        assert max(abs(v) for v in M.as_tuple()) <= 50
        assert M.alpha * M.delta - M.beta * M.gamma == 1


@pytest.mark.parametrize("k, N, D, rho", FAMILIES)
def test_random_matrices_preserve_discriminant(k, N, D, rho):
    fam = validate_family(k, N, D, rho)
    rng = np.random.default_rng(N * 1000 + D)
    movers = [random_unimodular(rng, 50) for _ in range(1000)]
    forms = enumerate_truncated(fam, 8)
    assert forms
    for M in movers:
        for Q in forms:
            assert act(Q, M).discriminant == D
        assert act(act(forms[0], M), M.inverse()) == forms[0]


def test_action_is_a_right_action():
    Q = QuadForm(2, 1, -2)
    assert act(act(Q, S_MATRIX), T_MATRIX) == act(Q, S_MATRIX @ T_MATRIX)


@pytest.mark.parametrize("k, N, D, rho", FAMILIES)
def test_solution_count_table_matches_direct_count(k, N, D, rho):
    fam = validate_family(k, N, D, rho)
    table = solution_count_table(fam, 400)
    for c in range(1, 401):
        assert int(table[c]) == count_b_solutions(fam, c)


def test_local_count_away_from_level_and_discriminant():
    fam = validate_family(2, 2, 17, 1)
    for p in (3, 5, 7, 11, 13, 19, 23):
        assert local_solution_count(fam, p, 1) == 1 + kronecker(17, p)
        assert local_solution_count(fam, p, 0) == 1


def test_smallest_prime_factors():
    spf = smallest_prime_factors(30)
    assert spf[2] == 2 and spf[9] == 3 and spf[29] == 29 and spf[25] == 5 and spf[30] == 2


@pytest.mark.parametrize("N, index", [(1, 1), (2, 3), (3, 4), (4, 6), (6, 12), (12, 24)])
def test_gamma0_index(N, index):
    assert gamma0_index(N) == index
    assert len(P1Line(N)) == index


@pytest.mark.parametrize("N", range(1, 21))
def test_coset_representatives(N):
    reps = coset_rep_map(N)
    assert len(reps) == gamma0_index(N)
    assert next(iter(reps.values())) == IDENTITY
    for label, M in reps.items():
        assert coset_label(M, N) == label
    matrices = list(reps.values())
    for i, A in enumerate(matrices):
        for j, B in enumerate(matrices):
            assert (A @ B.inverse()).in_gamma0(N) == (i == j)


def test_coset_label_is_gamma0_invariant():
    N = 6
    g = UnimodularMatrix(1, 0, 6, 1)
    for M in coset_reps(N):
        assert coset_label(g @ M, N) == coset_label(M, N)
