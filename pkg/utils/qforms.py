"""
Binary quadratic forms and the families Q_{N,D,rho}.

Covers the SL2(Z) right action on forms, the Fricke and iota maps, finite
enumerations, residue solution counts and coset representatives of
Gamma0(N) in SL2(Z).
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np
from sympy import divisors, primefactors

from utils.errors import (
    BadWeight,
    CongruenceViolation,
    LevelMismatch,
    NotUnimodular,
    QpzError,
    SquareDiscriminant,
)
from utils.exact import kronecker

logger = logging.getLogger(__name__)


def gcdex(a: int, b: int) -> Tuple[int, int, int]:
    """Return (x, y, g) with g = gcd(a, b) >= 0 and a*x + b*y == g."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -x0, -y0, -a
    return x0, y0, a


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def valuation(n: int, p: int) -> int:
    """Exponent of the prime p in n (n != 0)."""
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


@dataclass(frozen=True)
class UnimodularMatrix:
    """The matrix ((alpha, beta), (gamma, delta)) of determinant 1."""
    alpha: int
    beta: int
    gamma: int
    delta: int

    def __post_init__(self):
        det = self.alpha * self.delta - self.beta * self.gamma
        if det != 1:
            raise NotUnimodular(f"determinant is {det}, expected 1")

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        return UnimodularMatrix(
            self.alpha * other.alpha + self.beta * other.gamma,
            self.alpha * other.beta + self.beta * other.delta,
            self.gamma * other.alpha + self.delta * other.gamma,
            self.gamma * other.beta + self.delta * other.delta,
        )

    def __neg__(self) -> "UnimodularMatrix":
        return UnimodularMatrix(-self.alpha, -self.beta, -self.gamma, -self.delta)

    def inverse(self) -> "UnimodularMatrix":
        return UnimodularMatrix(self.delta, -self.beta, -self.gamma, self.alpha)

    def in_gamma0(self, N: int) -> bool:
        return self.gamma % N == 0

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.alpha, self.beta, self.gamma, self.delta)


IDENTITY = UnimodularMatrix(1, 0, 0, 1)
S_MATRIX = UnimodularMatrix(0, -1, 1, 0)
T_MATRIX = UnimodularMatrix(1, 1, 0, 1)
U_MATRIX = T_MATRIX @ S_MATRIX


def random_unimodular(rng: np.random.Generator, bound: int) -> UnimodularMatrix:
    """
    Draw a matrix of SL2(Z) with every entry in [-bound, bound].

    The first column is drawn uniformly among coprime pairs; the second is the
    solution of alpha*delta - beta*gamma = 1 shifted by multiples of the first
    column to the smallest delta.
    """
    if bound < 1:
        raise ValueError(f"bound must be >= 1, got {bound}")
    while True:
        alpha, gamma = (int(v) for v in rng.integers(-bound, bound + 1, size=2))
        x, y, g = gcdex(alpha, gamma)
        if g != 1:
            continue
        beta, delta = -y, x
        if gamma:
            t = -round(delta / gamma)
            beta, delta = beta + t * alpha, delta + t * gamma
        else:
            beta = int(rng.integers(-bound, bound + 1)) * alpha
        if max(abs(beta), abs(delta)) <= bound:
            return UnimodularMatrix(alpha, beta, gamma, delta)


@dataclass(frozen=True)
class QuadForm:
    """The form A x^2 + B x y + C y^2."""
    A: int
    B: int
    C: int

    @property
    def discriminant(self) -> int:
        return self.B * self.B - 4 * self.A * self.C

    def __call__(self, x, y):
        return self.A * x * x + self.B * x * y + self.C * y * y

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.A, self.B, self.C)


@dataclass(frozen=True)
class FormFamily:
    """Parameters (k, N, D, rho) of Q_{N,D,rho} and the weight-2k forms built on it."""
    k: int
    N: int
    D: int
    rho: int

    def negated(self) -> "FormFamily":
        """The family for -rho, reduced into [0, 2N)."""
        return FormFamily(self.k, self.N, self.D, (-self.rho) % (2 * self.N))

    def contains(self, Q: QuadForm) -> bool:
        return (Q.A % self.N == 0
                and Q.discriminant == self.D
                and (Q.B - self.rho) % (2 * self.N) == 0)

    @property
    def is_square(self) -> bool:
        return is_square(self.D)


def validate_family(k: int, N: int, D: int, rho: int,
                    require_nonsquare: bool = False) -> FormFamily:
    """
    Check the parameters of Q_{N,D,rho} and build a FormFamily.

    rho is stored reduced modulo 2N.

    Args:
        k: Weight parameter (forms have weight 2k), k >= 2
        N: Level, N >= 1
        D: Discriminant, D > 0
        rho: Residue with rho^2 = D mod 4N
        require_nonsquare: Reject perfect-square D

    Returns:
        FormFamily: The validated family

    Raises:
        BadWeight: If k < 2
        CongruenceViolation: If rho^2 is not D modulo 4N
        SquareDiscriminant: If require_nonsquare and D is a square
    """
    if k < 2:
        raise BadWeight(f"k must be >= 2, got {k}")
    if N < 1:
        raise QpzError(f"N must be >= 1, got {N}")
    if D < 1:
        raise QpzError(f"D must be positive, got {D}")
    if (rho * rho - D) % (4 * N) != 0:
        raise CongruenceViolation(f"rho^2 = {rho * rho} is not congruent to D = {D} mod {4 * N}")
    if require_nonsquare and is_square(D):
        raise SquareDiscriminant(f"D = {D} is a perfect square")
    return FormFamily(k, N, D, rho % (2 * N))


def _require_nonsquare(fam: FormFamily) -> None:
    if fam.is_square:
        raise SquareDiscriminant(f"D = {fam.D} is a perfect square")


def act(Q: QuadForm, M: UnimodularMatrix) -> QuadForm:
    """Right action (Q o M)(x, y) = Q(alpha x + beta y, gamma x + delta y)."""
    al, be, ga, de = M.as_tuple()
    return QuadForm(
        Q.A * al * al + Q.B * al * ga + Q.C * ga * ga,
        2 * Q.A * al * be + Q.B * (al * de + be * ga) + 2 * Q.C * ga * de,
        Q.A * be * be + Q.B * be * de + Q.C * de * de,
    )


def _split_leading(Q: QuadForm, N: int) -> int:
    if Q.A % N != 0:
        raise LevelMismatch(f"N = {N} does not divide A = {Q.A}")
    return Q.A // N


def fricke(Q: QuadForm, N: int) -> QuadForm:
    """Fricke involution [Na, b, c] -> [Nc, -b, a]."""
    a = _split_leading(Q, N)
    return QuadForm(N * Q.C, -Q.B, a)


def iota(Q: QuadForm, N: int) -> QuadForm:
    """The involution [Na, b, c] -> [-Nc, b, -a]."""
    a = _split_leading(Q, N)
    return QuadForm(-N * Q.C, Q.B, -a)


def _forms_with_b(fam: FormFamily, b: int) -> List[QuadForm]:
    m = (b * b - fam.D) // (4 * fam.N)
    forms = []
    for a in divisors(abs(m)):
        c = m // a
        forms.append(QuadForm(fam.N * a, b, c))
        forms.append(QuadForm(-fam.N * a, b, -c))
    return forms


def _residue_b_values(fam: FormFamily, bound: int, strict: bool) -> List[int]:
    step = 2 * fam.N
    start = -bound + ((fam.rho + bound) % step)
    values = list(range(start, bound + 1, step))
    if strict:
        values = [b for b in values if b * b < fam.D]
    return values


def enumerate_ac_negative(fam: FormFamily) -> List[QuadForm]:
    """
    All forms [Na, b, c] of the family with a*c < 0, sorted by (b, a).

    b^2 = D + 4Nac < D makes the set finite.

    Raises:
        SquareDiscriminant: If D is a perfect square
    """
    _require_nonsquare(fam)
    forms = []
    for b in _residue_b_values(fam, math.isqrt(fam.D), strict=True):
        forms.extend(_forms_with_b(fam, b))
    return sorted(forms, key=lambda Q: (Q.B, Q.A // fam.N))


def enumerate_truncated(fam: FormFamily, b_bound: int) -> List[QuadForm]:
    """
    All forms of the (infinite) family with |b| <= b_bound, sorted by (|b|, b, a).

    Raises:
        SquareDiscriminant: If D is a perfect square
    """
    _require_nonsquare(fam)
    forms = []
    for b in _residue_b_values(fam, b_bound, strict=False):
        forms.extend(_forms_with_b(fam, b))
    return sorted(forms, key=lambda Q: (abs(Q.B), Q.B, Q.A // fam.N))


def count_b_solutions(fam: FormFamily, c: int) -> int:
    """
    Number of b mod 2Nc with b = rho mod 2N and b^2 = D mod 4Nc.

    Direct stride-2N loop; solution_count_table is the fast path.
    """
    if c < 1:
        raise QpzError(f"c must be >= 1, got {c}")
    step = 2 * fam.N
    modulus = 4 * fam.N * c
    return sum(1 for b in range(fam.rho % step, step * c, step) if (b * b - fam.D) % modulus == 0)


@lru_cache(maxsize=4096)
def _local_solutions(fam: FormFamily, p: int, e: int) -> Tuple[int, ...]:
    """
    Residues b mod p^(v+e) with b = rho mod p^v and b^2 = D mod p^(w+e),
    where p^v || 2N and p^w || 4N. Level e lifts from level e - 1.
    """
    v = valuation(2 * fam.N, p)
    w = valuation(4 * fam.N, p)
    if e == 0:
        return (fam.rho % p ** v,)
    step = p ** (v + e - 1)
    modulus = p ** (w + e)
    return tuple(sorted(
        b + t * step
        for b in _local_solutions(fam, p, e - 1)
        for t in range(p)
        if ((b + t * step) ** 2 - fam.D) % modulus == 0
    ))


def local_solution_count(fam: FormFamily, p: int, e: int) -> int:
    """
    The p-part of count_b_solutions at c = p^e.

    count_b_solutions(fam, c) is the product of these over the prime powers
    exactly dividing c.
    """
    if e == 0:
        return 1
    if (2 * fam.N * fam.D) % p != 0:
        return 1 + kronecker(fam.D, p)
    return len(_local_solutions(fam, p, e))


def smallest_prime_factors(n_max: int) -> np.ndarray:
    """Sieve of smallest prime factors for 0..n_max (entries 0 and 1 are 0)."""
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for i in range(2, math.isqrt(n_max) + 1):
        if spf[i] == 0:
            block = spf[i * i::i]
            block[block == 0] = i
    idx = np.arange(n_max + 1)
    unset = (spf == 0) & (idx >= 2)
    spf[unset] = idx[unset]
    return spf


def solution_count_table(fam: FormFamily, c_max: int) -> np.ndarray:
    """
    count_b_solutions(fam, c) for every c in 0..c_max (entry 0 unused).

    Built multiplicatively from local_solution_count over a prime sieve.
    """
    spf = smallest_prime_factors(c_max).tolist()
    counts = [0] * (c_max + 1)
    if c_max >= 1:
        counts[1] = 1
    for c in range(2, c_max + 1):
        p = spf[c]
        rest, e = c // p, 1
        while rest % p == 0:
            rest //= p
            e += 1
        counts[c] = counts[rest] * local_solution_count(fam, p, e)
    return np.asarray(counts, dtype=np.int64)


def gamma0_index(N: int) -> int:
    """[SL2(Z) : Gamma0(N)] = N * prod_{p | N} (1 + 1/p)."""
    index = N
    for p in primefactors(N):
        index = index // p * (p + 1)
    return index


class P1Line:
    """
    Projective line over Z/N, labelling right cosets Gamma0(N) M by the
    bottom row of M.
    """

    def __init__(self, N: int):
        if N < 1:
            raise QpzError(f"N must be >= 1, got {N}")
        self.N = N
        self._units = [u for u in range(N) if math.gcd(u, N) == 1] or [0]
        points = set()
        for c in range(N):
            for d in range(N):
                if math.gcd(math.gcd(c, d), N) == 1:
                    points.add(self.reduce(c, d))
        if N == 1:
            points = {(0, 0)}
        self._points = sorted(points)
        self._index = {pt: i for i, pt in enumerate(self._points)}

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self):
        return iter(self._points)

    def reduce(self, c: int, d: int) -> Tuple[int, int]:
        """Canonical label of (c : d): the least pair in its orbit under units."""
        N = self.N
        if N == 1:
            return (0, 0)
        if math.gcd(math.gcd(c, d), N) != 1:
            raise QpzError(f"({c} : {d}) is not a point of P^1(Z/{N})")
        return min(((u * c) % N, (u * d) % N) for u in self._units)

    def index(self, c: int, d: int) -> int:
        return self._index[self.reduce(c, d)]

    def lift(self, label: Tuple[int, int]) -> UnimodularMatrix:
        """Smallest non-negative completion of (c, d + jN) to a unimodular matrix."""
        c, d = label
        j = 0
        while math.gcd(c, d + j * self.N) != 1:
            j += 1
        d += j * self.N
        x, y, _ = gcdex(d, c)
        alpha, beta = x, -y
        if c > 0:
            shift = alpha // c
            alpha -= shift * c
            beta -= shift * d
        return UnimodularMatrix(alpha, beta, c, d)


@lru_cache(maxsize=64)
def _p1(N: int) -> P1Line:
    return P1Line(N)


def coset_label(M: UnimodularMatrix, N: int) -> Tuple[int, int]:
    """P^1(Z/N) label of the coset Gamma0(N) M."""
    return _p1(N).reduce(M.gamma, M.delta)


def coset_reps(N: int) -> List[UnimodularMatrix]:
    """
    Right coset representatives of Gamma0(N) in SL2(Z), ordered by label.

    The label (0, 1) (or (0, 0) when N = 1) lifts to the identity.
    """
    line = _p1(N)
    reps = [line.lift(label) for label in line]
    logger.debug("built %d coset representatives for N=%d", len(reps), N)
    return reps


def coset_rep_map(N: int) -> Dict[Tuple[int, int], UnimodularMatrix]:
    """Label -> representative, in label order."""
    line = _p1(N)
    return {label: line.lift(label) for label in line}
