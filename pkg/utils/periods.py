"""
Period polynomials of the weight-2k cusp forms attached to Q_{N,D,rho}.

The form f = f_{k,N,D,rho} has two evaluators. The |b|-truncated series
follows the definition: forms with |b| <= B, B doubled until the values
settle. The quadrature uses the translation-completed series, in which each
class of transformed forms under the cusp translation is summed in closed
form and only the leading coefficient is truncated; its truncation error
decays like the form itself as t grows.

Period coefficients r_n(A) = int_0^oo (f|A)(it) t^n dt are computed by
splitting at t = 1 and folding [0, 1] onto [1, oo) with the matrix S.
"""
import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from sympy import divisors
from sympy.ntheory import sqrt_mod

from utils.errors import (
    BadVariant,
    IncompleteVector,
    NonPositiveT,
    QpzError,
    QuadratureNonConvergent,
    SeriesNonConvergent,
    SquareDiscriminant,
)
from utils.exact import binomial, zeta_even_exact
from utils.qforms import (
    IDENTITY,
    S_MATRIX,
    U_MATRIX,
    FormFamily,
    UnimodularMatrix,
    coset_label,
    coset_rep_map,
    enumerate_ac_negative,
)
from utils.quadrature import integrate_panels
from utils.zetafun import DEFAULT_PRECISION_BITS, level_factor

logger = logging.getLogger(__name__)

VARIANTS = ("plain", "primed", "plus", "minus")
_CHUNK = 16384


@dataclass(frozen=True)
class SeriesSettings:
    """
    Truncation and tolerance knobs for the series and the quadrature.

    b_bound_* drive the |b|-truncated series; a_bound_* bound the leading
    coefficient of the transformed forms in the translation-completed series
    that feeds the quadrature.
    """
    b_bound_initial: int = 64
    b_bound_cap: int = 32768
    a_bound_initial: int = 256
    a_bound_cap: int = 65536
    series_tol: float = 1e-9
    quadrature_tol: float = 1e-8
    gauss_order: int = 20
    max_panels: int = 400
    strict: bool = False


DEFAULT_SETTINGS = SeriesSettings()


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

def _poly_mul(p: Sequence, q: Sequence) -> List:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly_pow(p: Sequence, e: int) -> List:
    out = [1]
    for _ in range(e):
        out = _poly_mul(out, p)
    return out


@dataclass(frozen=True)
class Poly:
    """Polynomial in X; coeffs[m] is the coefficient of X^m."""
    coeffs: Tuple

    @classmethod
    def zero(cls, degree: int) -> "Poly":
        return cls(tuple([0] * (degree + 1)))

    @property
    def degree_bound(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, m: int):
        return self.coeffs[m] if 0 <= m < len(self.coeffs) else 0

    def _zip(self, other: "Poly", op) -> "Poly":
        size = max(len(self.coeffs), len(other.coeffs))
        return Poly(tuple(op(self.coefficient(i), other.coefficient(i)) for i in range(size)))

    def __add__(self, other: "Poly") -> "Poly":
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other: "Poly") -> "Poly":
        return self._zip(other, lambda a, b: a - b)

    def __neg__(self) -> "Poly":
        return Poly(tuple(-c for c in self.coeffs))

    def scale(self, factor) -> "Poly":
        return Poly(tuple(factor * c for c in self.coeffs))

    def evaluate(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def even_part(self) -> "Poly":
        """(P(X) + P(-X)) / 2."""
        return Poly(tuple(c if i % 2 == 0 else 0 for i, c in enumerate(self.coeffs)))

    def odd_part(self) -> "Poly":
        """(P(X) - P(-X)) / 2."""
        return Poly(tuple(c if i % 2 == 1 else 0 for i, c in enumerate(self.coeffs)))

    def max_abs(self):
        return max((abs(c) for c in self.coeffs), default=0)

    def max_abs_diff(self, other: "Poly"):
        return (self - other).max_abs()


def poly_slash(P: Poly, g: UnimodularMatrix, two_k_minus_2: int) -> Poly:
    """
    Weight 2-2k slash (P|g)(z) = (cz + d)^{2k-2} P((az + b)/(cz + d)).

    Exact on coefficients: integer inputs give integer outputs.
    """
    w = two_k_minus_2
    if any(c != 0 for c in P.coeffs[w + 1:]):
        raise QpzError(f"polynomial degree exceeds {w}")
    numerator = [g.beta, g.alpha]
    denominator = [g.delta, g.gamma]
    out = [0] * (w + 1)
    for j in range(w + 1):
        p_j = P.coefficient(j)
        if p_j == 0:
            continue
        term = _poly_mul(_poly_pow(numerator, j), _poly_pow(denominator, w - j))
        for i, t in enumerate(term):
            out[i] += p_j * t
    return Poly(tuple(out))


@dataclass
class PeriodVector:
    """One polynomial per right coset of Gamma0(N) in SL2(Z)."""
    N: int
    weight: int
    entries: Dict[UnimodularMatrix, Poly]
    _by_label: Dict[Tuple[int, int], Poly] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_label = {coset_label(M, self.N): P for M, P in self.entries.items()}

    @classmethod
    def zero(cls, N: int, weight: int) -> "PeriodVector":
        return cls(N, weight, {M: Poly.zero(weight) for M in coset_rep_map(N).values()})

    def entry_for(self, M: UnimodularMatrix) -> Poly:
        """The entry of the coset containing M."""
        try:
            return self._by_label[coset_label(M, self.N)]
        except KeyError:
            raise IncompleteVector(f"no entry for the coset of {M.as_tuple()}")

    def even_part(self) -> "PeriodVector":
        return PeriodVector(self.N, self.weight, {M: P.even_part() for M, P in self.entries.items()})

    def odd_part(self) -> "PeriodVector":
        return PeriodVector(self.N, self.weight, {M: P.odd_part() for M, P in self.entries.items()})


def period_relation_residuals(pv: PeriodVector, N: int, two_k: int) -> Dict[str, mpmath.mpf]:
    """
    Largest coefficient of P + P|S and of P + P|U + P|U^2 over all cosets,
    where (P|g)(A) = P(A g^{-1})|_{2-2k} g.

    Raises:
        IncompleteVector: If pv does not cover every coset exactly once
    """
    w = two_k - 2
    reps = coset_rep_map(N)
    if pv.N != N or len(pv.entries) != len(reps) or set(pv._by_label) != set(reps):
        raise IncompleteVector(f"period vector has {len(pv.entries)} entries, expected {len(reps)} cosets")

    def slashed(g: UnimodularMatrix) -> Dict[Tuple[int, int], Poly]:
        g_inv = g.inverse()
        return {label: poly_slash(pv.entry_for(rep @ g_inv), g, w) for label, rep in reps.items()}

    base = {label: pv.entry_for(rep) for label, rep in reps.items()}
    by_s = slashed(S_MATRIX)
    by_u = slashed(U_MATRIX)
    by_u2 = slashed(U_MATRIX @ U_MATRIX)

    res_s = max(mpmath.mpf((base[l] + by_s[l]).max_abs()) for l in reps)
    res_u = max(mpmath.mpf((base[l] + by_u[l] + by_u2[l]).max_abs()) for l in reps)
    return {"res_S": res_s, "res_U": res_u}


# ---------------------------------------------------------------------------
# Truncated series
# ---------------------------------------------------------------------------

class _FamilyShells:
    """Forms of one family sorted by (|b|, b, a), grown as larger bounds are asked for."""

    def __init__(self, N: int, D: int, rho: int):
        self.N, self.D, self.rho = N, D, rho
        self.bound = -1
        self.A = np.empty(0, dtype=np.int64)
        self.B = np.empty(0, dtype=np.int64)
        self.C = np.empty(0, dtype=np.int64)
        self.abs_b = np.empty(0, dtype=np.int64)
        self._lock = threading.Lock()

    def count_upto(self, bound: int) -> int:
        with self._lock:
            if bound > self.bound:
                self._extend(bound)
        return int(np.searchsorted(self.abs_b, bound, side="right"))

    def _extend(self, bound: int) -> None:
        N, D, rho = self.N, self.D, self.rho
        rows = []
        for size in range(self.bound + 1, bound + 1):
            for b in sorted({-size, size}):
                if (b - rho) % (2 * N):
                    continue
                m = (b * b - D) // (4 * N)
                positive = divisors(abs(m))
                for a in [-d for d in reversed(positive)] + positive:
                    rows.append((N * a, b, m // a))
        if rows:
            new = np.asarray(rows, dtype=np.int64)
            self.A = np.concatenate([self.A, new[:, 0]])
            self.B = np.concatenate([self.B, new[:, 1]])
            self.C = np.concatenate([self.C, new[:, 2]])
            self.abs_b = np.abs(self.B)
        logger.debug("family (%d,%d,%d) enumerated to |b| <= %d: %d forms", N, D, rho, bound, self.A.size)
        self.bound = bound


@lru_cache(maxsize=16)
def _shells_by_key(N: int, D: int, rho: int) -> _FamilyShells:
    return _FamilyShells(N, D, rho)


def _shells_for(fam: FormFamily) -> _FamilyShells:
    return _shells_by_key(fam.N, fam.D, fam.rho)


def _require_nonsquare(fam: FormFamily) -> None:
    if fam.is_square:
        raise SquareDiscriminant(f"D = {fam.D} is a perfect square")


def form_prefactor(fam: FormFamily, prec: int = DEFAULT_PRECISION_BITS) -> mpmath.mpf:
    """D^{k-1/2} / (2 pi binom(2k-2, k-1))."""
    k = fam.k
    with mpmath.workprec(prec):
        return mpmath.mpf(fam.D) ** (k - mpmath.mpf(1) / 2) / (2 * mpmath.pi * binomial(2 * k - 2, k - 1))


def _shell_sum(shells: _FamilyShells, M: UnimodularMatrix, t: np.ndarray, k: int,
               lo: int, hi: int) -> np.ndarray:
    """sum over forms lo..hi-1 of (Q o M)(it, 1)^{-k} at each t."""
    al, be, ga, de = M.as_tuple()
    t2 = t * t
    total = np.zeros(t.shape, dtype=np.complex128)
    for start in range(lo, hi, _CHUNK):
        stop = min(start + _CHUNK, hi)
        A = shells.A[start:stop]
        B = shells.B[start:stop]
        C = shells.C[start:stop]
        A2 = (A * al * al + B * al * ga + C * ga * ga).astype(np.float64)
        B2 = (2 * A * al * be + B * (al * de + be * ga) + 2 * C * ga * de).astype(np.float64)
        C2 = (A * be * be + B * be * de + C * de * de).astype(np.float64)
        q = (C2[None, :] - A2[None, :] * t2[:, None]) + 1j * (B2[None, :] * t[:, None])
        total += np.sum(q ** (-k), axis=1)
    return total


def _doubling_levels(start: int, cap: int) -> List[int]:
    if start <= 0 or start >= cap:
        return [max(start, cap, 0)]
    levels = [start]
    while levels[-1] < cap:
        levels.append(min(2 * levels[-1], cap))
    return levels


def _last_two(steps: List[np.ndarray]) -> Optional[np.ndarray]:
    """Elementwise max of the last two steps, or None before there are two."""
    if len(steps) < 2:
        return None
    return np.maximum(steps[-1], steps[-2])


def _unsettled(message: str, strict: bool) -> None:
    if strict:
        raise SeriesNonConvergent(message)
    logger.warning(message)


def _truncated_values(fam: FormFamily, M: UnimodularMatrix, t: np.ndarray,
                      b_bound: int) -> Tuple[np.ndarray, np.ndarray]:
    shells = _shells_for(fam)
    scale = float(form_prefactor(fam, 64))
    values = scale * _shell_sum(shells, M, t, fam.k, 0, shells.count_upto(b_bound))
    return values, np.zeros(t.shape)


def _series_values(fam: FormFamily, M: UnimodularMatrix, t: np.ndarray,
                   settings: SeriesSettings) -> Tuple[np.ndarray, np.ndarray]:
    """
    (f|M)(it) from the |b|-truncated series, with per-node error estimates.

    Partial sums S_j over |b| <= B_j for doubling B_j, and their
    extrapolations E_j = (2^{k-1} S_j - S_{j-1}) / (2^{k-1} - 1). Either
    sequence is accepted once two consecutive steps stay within
    series_tol / 4 at every node. One small step is not enough: a whole
    shell can cancel at a given t.
    """
    shells = _shells_for(fam)
    scale = float(form_prefactor(fam, 64))
    levels = _doubling_levels(settings.b_bound_initial, settings.b_bound_cap)
    tol = settings.series_tol / 4
    ratio = 2.0 ** (fam.k - 1)

    sums: List[np.ndarray] = []
    extrapolated: List[np.ndarray] = []
    raw_steps: List[np.ndarray] = []
    extrapolated_steps: List[np.ndarray] = []
    total = np.zeros(t.shape, dtype=np.complex128)
    done = 0
    for bound in levels:
        upto = shells.count_upto(bound)
        total = total + scale * _shell_sum(shells, M, t, fam.k, done, upto)
        done = upto
        if sums:
            raw_steps.append(np.abs(total - sums[-1]))
            extrapolated.append((ratio * total - sums[-1]) / (ratio - 1))
            if len(extrapolated) > 1:
                extrapolated_steps.append(np.abs(extrapolated[-1] - extrapolated[-2]))
        sums.append(total)
        for values, steps in ((sums, raw_steps), (extrapolated, extrapolated_steps)):
            error = _last_two(steps)
            if error is not None and error.max() <= tol:
                return values[-1], error

    candidates = []
    for values, steps in ((sums, raw_steps), (extrapolated, extrapolated_steps)):
        error = _last_two(steps)
        if error is not None:
            candidates.append((float(error.max()), values[-1], error))
    if candidates:
        _, best, best_err = min(candidates, key=lambda c: c[0])
    else:
        best, best_err = sums[-1], np.full(t.shape, np.inf)
    _unsettled(f"series for ({fam.N},{fam.D},{fam.rho}) unsettled at |b| <= {levels[-1]}: "
               f"error estimate {best_err.max():.3g} > {tol:.3g}", settings.strict)
    return best, best_err


# ---------------------------------------------------------------------------
# Translation-completed series
# ---------------------------------------------------------------------------
#
# For Q' = [a', b', c'] in the transformed family, Q' o T^w = [a', b' + 2a'w, .]
# stays in it (w the cusp width), so the sum over each class b' mod 2|a'|w is
#   (a' w^2)^{-k} sum_j ((v + j)^2 - delta^2)^{-k},
#   v = (z + b'/2a') / w,  delta = sqrt(D) / (2|a'| w),
# which the Lipschitz formula turns into sum_{r>=1} g_r(delta) e^{2 pi i r v}
# with g_r = (-1)^k (2 pi)^{2k} r^{2k-1} G_k(2 pi r delta). Only |a'| is
# truncated; each class is summed exactly.

_G_TERMS = 48
_BESSEL_PREC = 128


def cusp_width(M: UnimodularMatrix, N: int) -> int:
    """Width of the cusp M(oo) for Gamma0(N)."""
    return N // math.gcd(M.gamma * M.gamma, N)


@lru_cache(maxsize=8)
def _root_table(D: int, bound: int) -> Tuple[np.ndarray, np.ndarray]:
    """(a, beta) with 1 <= a <= bound, 0 <= beta < 2a and beta^2 = D mod 4a, sorted by a."""
    a_values, betas = [], []
    for a in range(1, bound + 1):
        roots = sqrt_mod(D, 4 * a, all_roots=True) or ()
        for beta in sorted({r % (2 * a) for r in roots}):
            a_values.append(a)
            betas.append(beta)
    logger.debug("square roots of %d modulo 4a, a <= %d: %d classes", D, bound, len(betas))
    return np.asarray(a_values, dtype=np.int64), np.asarray(betas, dtype=np.int64)


def completed_classes(fam: FormFamily, M: UnimodularMatrix, a_bound: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    One representative [a', b', .] of Q o M per class b' mod 2|a'|w, over the
    family forms Q with 0 < |a'| <= a_bound; sorted by |a'|.

    Returns:
        Tuple[np.ndarray, np.ndarray]: a' and b' (0 <= b' < 2|a'|w)
    """
    width = cusp_width(M, fam.N)
    a_pos, beta = _root_table(fam.D, a_bound)
    al, be, ga, de = M.as_tuple()
    a_parts, b_parts = [], []
    for sign in (1, -1):
        for lift in range(width):
            a2 = sign * a_pos
            b2 = beta + 2 * a_pos * lift
            c2 = (b2 * b2 - fam.D) // (4 * a2)
            # Q = Q' o M^{-1}
            A = a2 * de * de - b2 * de * ga + c2 * ga * ga
            B = -2 * a2 * de * be + b2 * (al * de + be * ga) - 2 * c2 * ga * al
            keep = (A % fam.N == 0) & ((B - fam.rho) % (2 * fam.N) == 0)
            a_parts.append(a2[keep])
            b_parts.append(b2[keep])
    a2 = np.concatenate(a_parts)
    b2 = np.concatenate(b_parts)
    order = np.argsort(np.abs(a2), kind="stable")
    return a2[order], b2[order]


def bessel_ratio(k: int, theta: np.ndarray) -> np.ndarray:
    """
    G_k(theta) = sum_j (-1)^j C(k+j-1, j) theta^{2j} / (2k+2j-1)!
               = sqrt(pi) / ((k-1)! 2^{2k-1}) (2/theta)^{k-1/2} J_{k-1/2}(theta).

    The power series is used up to theta = k + 4, mpmath's Bessel function above.
    """
    theta = np.asarray(theta, dtype=np.float64)
    coeffs = [(-1) ** j * math.comb(k + j - 1, j) / math.factorial(2 * k + 2 * j - 1) for j in range(_G_TERMS)]
    out = np.zeros(theta.shape)
    small = theta <= k + 4
    x = theta[small] ** 2
    acc = np.zeros(x.shape)
    for c in reversed(coeffs):
        acc = acc * x + c
    out[small] = acc
    large = np.argwhere(~small)
    if large.size:
        with mpmath.workprec(_BESSEL_PREC):
            nu = k - mpmath.mpf(1) / 2
            scale = mpmath.sqrt(mpmath.pi) / (math.factorial(k - 1) * mpmath.mpf(2) ** (2 * k - 1))
            for idx in map(tuple, large):
                th = mpmath.mpf(float(theta[idx]))
                out[idx] = float(scale * (2 / th) ** nu * mpmath.besselj(nu, th))
    return out


def _mode_count(k: int, width: int, scale: float) -> int:
    """Modes needed for the r-sum to fall below 1e-20 at t = 1."""
    floor = math.log(1e-20) - math.log(max(scale, 1.0)) - math.log(8.0)
    base = 2 * k * math.log(2 * math.pi) - math.lgamma(2 * k) - 2 * k * math.log(width)
    r = 1
    while base + (2 * k - 1) * math.log(r) - 2 * math.pi * r / width > floor:
        r += 1
    return r


@dataclass(frozen=True)
class _ModeTable:
    """(f|M)(it) = sum_r coeffs[r-1] e^{-2 pi r t / width}, with per-mode error estimates."""
    width: int
    a_bound: int
    coeffs: np.ndarray
    deltas: np.ndarray
    settled: bool

    def values(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        r = np.arange(1, self.coeffs.size + 1)
        decay = np.exp(-2 * np.pi * np.outer(t, r) / self.width)
        return decay @ self.coeffs, decay @ self.deltas


@lru_cache(maxsize=128)
def _mode_table(fam: FormFamily, M: UnimodularMatrix, a_bound_initial: int, a_bound_cap: int,
                series_tol: float, strict: bool) -> _ModeTable:
    k = fam.k
    width = cusp_width(M, fam.N)
    levels = _doubling_levels(a_bound_initial, a_bound_cap)
    a2, b2 = completed_classes(fam, M, levels[-1])
    prefactor = float(form_prefactor(fam, 64))
    modes = _mode_count(k, width, prefactor)

    size = np.abs(a2)
    unique, inverse = np.unique(size, return_inverse=True)
    r = np.arange(1, modes + 1)
    theta = math.pi * math.sqrt(fam.D) * r[None, :] / (unique[:, None].astype(np.float64) * width)
    G = bessel_ratio(k, theta)
    weight = np.sign(a2) ** k / size.astype(np.float64) ** k
    scale = prefactor * (-1) ** k * (2 * math.pi) ** (2 * k) / width ** (2 * k)
    period = 2 * size * width
    ends = np.searchsorted(size, levels, side="right")

    partial = np.zeros((len(levels), modes), dtype=np.complex128)
    for j, rr in enumerate(r):
        phase = np.pi * np.sign(a2) * ((int(rr) * b2) % period) / (size * width)
        terms = weight * G[inverse, j] * np.exp(1j * phase)
        # correctly rounded per-level segments
        real = np.cumsum([math.fsum(terms.real[lo:hi].tolist()) for lo, hi in zip(np.r_[0, ends[:-1]], ends)])
        imag = np.cumsum([math.fsum(terms.imag[lo:hi].tolist()) for lo, hi in zip(np.r_[0, ends[:-1]], ends)])
        partial[:, j] = (real + 1j * imag) * scale * float(rr) ** (2 * k - 1)

    at_one = np.exp(-2 * np.pi * r / width)
    steps = [np.abs(partial[i] - partial[i - 1]) for i in range(1, len(levels))]
    tol = series_tol / 4
    for i in range(2, len(levels)):
        if (steps[i - 1] @ at_one) <= tol and (steps[i - 2] @ at_one) <= tol:
            logger.debug("completed series (%d,%d,%d) M=%s settled at |a'| <= %d with %d modes",
                         fam.N, fam.D, fam.rho, M.as_tuple(), levels[i], modes)
            return _ModeTable(width, levels[i], partial[i], np.maximum(steps[i - 1], steps[i - 2]), True)

    error = _last_two(steps)
    deltas = error if error is not None else np.full(modes, np.inf)
    _unsettled(f"completed series for ({fam.N},{fam.D},{fam.rho}) M={M.as_tuple()} unsettled at "
               f"|a'| <= {levels[-1]}: error estimate {float(deltas @ at_one):.3g} > {tol:.3g} at t = 1",
               strict)
    return _ModeTable(width, levels[-1], partial[-1], deltas, False)


def _completed_values(fam: FormFamily, M: UnimodularMatrix, t: np.ndarray,
                      settings: SeriesSettings) -> Tuple[np.ndarray, np.ndarray]:
    """(f|M)(it) with error estimates; nodes with t < 1 go through (f|M)(it) = (-1)^k t^{-2k} (f|MS)(i/t)."""
    def table(g: UnimodularMatrix) -> _ModeTable:
        return _mode_table(fam, g, settings.a_bound_initial, settings.a_bound_cap,
                           settings.series_tol, settings.strict)

    values = np.zeros(t.shape, dtype=np.complex128)
    errors = np.zeros(t.shape)
    high = t >= 1
    if high.any():
        values[high], errors[high] = table(M).values(t[high])
    low = ~high
    if low.any():
        inner, inner_err = table(M @ S_MATRIX).values(1 / t[low])
        factor = (-1) ** fam.k * t[low] ** (-2 * fam.k)
        values[low] = factor * inner
        errors[low] = np.abs(factor) * inner_err
    return values, errors


# ---------------------------------------------------------------------------
# Slashed forms
# ---------------------------------------------------------------------------

Evaluator = Callable[[FormFamily], Tuple[np.ndarray, np.ndarray]]


def _variant_values(fam: FormFamily, variant: str, evaluate: Evaluator) -> Tuple[np.ndarray, np.ndarray]:
    if variant not in VARIANTS:
        raise BadVariant(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    if variant == "plain":
        return evaluate(fam)
    primed, primed_err = evaluate(fam.negated())
    if variant == "primed":
        return primed, primed_err
    plain, plain_err = evaluate(fam)
    if variant == "plus":
        return plain + primed, plain_err + primed_err
    return 1j * (plain - primed), plain_err + primed_err


def _check_point(fam: FormFamily, t: float) -> None:
    _require_nonsquare(fam)
    if not t > 0:
        raise NonPositiveT(f"t must be positive, got {t}")


def eval_slashed_form(fam: FormFamily, variant: str, A: UnimodularMatrix, t: float,
                      b_bound: int, prec: int = DEFAULT_PRECISION_BITS) -> mpmath.mpc:
    """
    Truncated (f|_{2k} A)(it) summed over family forms with |b| <= b_bound.

    Args:
        fam: Family (D nonsquare)
        variant: plain (f), primed (f'), plus (f + f') or minus (i(f - f'))
        A: Slash matrix
        t: Point on the imaginary axis, t > 0
        b_bound: Truncation bound on |b|, applied before A
        prec: Precision of the returned value

    Returns:
        mpc: The truncated series value
    """
    _check_point(fam, t)
    nodes = np.array([float(t)])
    values, _ = _variant_values(fam, variant, lambda g: _truncated_values(g, A, nodes, b_bound))
    with mpmath.workprec(prec):
        return mpmath.mpc(complex(values[0]))


def slashed_form_converged(fam: FormFamily, variant: str, A: UnimodularMatrix, t: float,
                           settings: SeriesSettings = DEFAULT_SETTINGS,
                           prec: int = DEFAULT_PRECISION_BITS) -> Tuple[mpmath.mpc, float]:
    """(f|A)(it) with the |b| bound doubled until it settles; returns (value, error estimate)."""
    _check_point(fam, t)
    nodes = np.array([float(t)])
    values, errors = _variant_values(fam, variant, lambda g: _series_values(g, A, nodes, settings))
    with mpmath.workprec(prec):
        return mpmath.mpc(complex(values[0])), float(errors[0])


def slashed_form_completed(fam: FormFamily, variant: str, A: UnimodularMatrix, t: float,
                           settings: SeriesSettings = DEFAULT_SETTINGS,
                           prec: int = DEFAULT_PRECISION_BITS) -> Tuple[mpmath.mpc, float]:
    """
    (f|A)(it) from the translation-completed series, the evaluator behind the
    period quadrature.

    Returns:
        Tuple[mpc, float]: Value and error estimate

    Raises:
        SeriesNonConvergent: In strict mode, if the |a'| doubling does not settle
    """
    _check_point(fam, t)
    nodes = np.array([float(t)])
    values, errors = _variant_values(fam, variant, lambda g: _completed_values(g, A, nodes, settings))
    with mpmath.workprec(prec):
        return mpmath.mpc(complex(values[0])), float(errors[0])


def eval_fricke_slashed(fam: FormFamily, t: float, b_bound: int,
                        prec: int = DEFAULT_PRECISION_BITS) -> mpmath.mpc:
    """(f|W_N)(it) = N^{-k} (it)^{-2k} f(i/(Nt)), truncated at |b| <= b_bound."""
    _check_point(fam, t)
    inner = eval_slashed_form(fam, "plain", IDENTITY, 1.0 / (fam.N * t), b_bound, prec)
    with mpmath.workprec(prec):
        return inner * mpmath.mpf(fam.N) ** (-fam.k) * mpmath.mpc(0, t) ** (-2 * fam.k)


# ---------------------------------------------------------------------------
# Period coefficients
# ---------------------------------------------------------------------------

class _BranchIntegrand:
    """t -> [(f|M)(it) t^n, (f'|M)(it) t^n] for n = 0..2k-2, tracking series errors."""

    def __init__(self, fam: FormFamily, M: UnimodularMatrix, settings: SeriesSettings):
        self.fam = fam
        self.primed = fam.negated()
        self.M = M
        self.settings = settings
        self.powers = np.arange(2 * fam.k - 1)
        self.max_series_error = 0.0
        self.last_error = np.zeros(0)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        plain, plain_err = _completed_values(self.fam, self.M, t, self.settings)
        primed, primed_err = _completed_values(self.primed, self.M, t, self.settings)
        self.last_error = np.maximum(plain_err, primed_err)
        self.max_series_error = max(self.max_series_error, float(self.last_error.max()))
        weights = t[:, None] ** self.powers[None, :]
        return np.concatenate([plain[:, None] * weights, primed[:, None] * weights], axis=1)


@dataclass(frozen=True)
class BranchIntegral:
    """int_1^T (g|M)(it) t^n dt for g = f (row 0) and g = f' (row 1)."""
    values: np.ndarray
    quadrature_error: float
    series_error: float
    upper: float
    panels: int


def _upper_cutoff(integrand: _BranchIntegrand, width: int, settings: SeriesSettings) -> float:
    tol = settings.quadrature_tol
    step = width * math.log(10.0) / (2 * math.pi)
    upper = 1.0 + max(1.0, width * math.log(1.0 / tol) / (2 * math.pi))
    limit = upper + 40 * step
    top_power = 2 * integrand.fam.k - 2
    while True:
        magnitude = float(np.abs(integrand(np.array([upper]))).max())
        noise = 10 * float(integrand.last_error.max()) * upper ** top_power
        if magnitude * width / (2 * math.pi) < tol / 10 or magnitude <= noise:
            return upper
        upper += step
        if upper > limit:
            raise QuadratureNonConvergent(
                f"integrand still {magnitude:.3g} at t = {upper:.3g}; no usable cutoff")


@lru_cache(maxsize=256)
def branch_integral(fam: FormFamily, M: UnimodularMatrix,
                    settings: SeriesSettings = DEFAULT_SETTINGS) -> BranchIntegral:
    """Quadrature of (f|M)(it) t^n and (f'|M)(it) t^n over [1, T]."""
    _require_nonsquare(fam)
    integrand = _BranchIntegrand(fam, M, settings)
    width = cusp_width(M, fam.N)
    upper = _upper_cutoff(integrand, width, settings)
    values, error, panels = integrate_panels(
        integrand, 1.0, upper, settings.quadrature_tol, settings.gauss_order, settings.max_panels)
    w = 2 * fam.k - 2
    logger.info("branch (%d,%d,%d) M=%s: T=%.2f, %d panels, quadrature error %.2g, series error %.2g",
                fam.N, fam.D, fam.rho, M.as_tuple(), upper, panels, error, integrand.max_series_error)
    return BranchIntegral(values.reshape(2, w + 1), error, integrand.max_series_error, upper, panels)


def _combine_variant(variant: str, plain, primed):
    if variant == "plain":
        return plain
    if variant == "primed":
        return primed
    if variant == "plus":
        return plain + primed
    if variant == "minus":
        return 1j * (plain - primed)
    raise BadVariant(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")


def period_coefficients(fam: FormFamily, variant: str, A: UnimodularMatrix,
                        settings: SeriesSettings = DEFAULT_SETTINGS,
                        prec: int = DEFAULT_PRECISION_BITS) -> List[mpmath.mpc]:
    """
    r_n(A) for n = 0..2k-2.

    r_n(A) = int_1^oo (f|A)(it) t^n dt + (-1)^k int_1^oo (f|AS)(it) t^{2k-2-n} dt,
    using (f|A)(it) = (-1)^k t^{-2k} (f|AS)(i/t) on [0, 1].
    """
    if variant not in VARIANTS:
        raise BadVariant(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    w = 2 * fam.k - 2
    sign = -1 if fam.k % 2 else 1
    direct = branch_integral(fam, A, settings)
    folded = branch_integral(fam, A @ S_MATRIX, settings)
    plain = direct.values[0] + sign * folded.values[0][::-1]
    primed = direct.values[1] + sign * folded.values[1][::-1]
    combined = _combine_variant(variant, plain, primed)
    with mpmath.workprec(prec):
        return [mpmath.mpc(complex(combined[n])) for n in range(w + 1)]


def period_coeff_numeric(fam: FormFamily, variant: str, A: UnimodularMatrix, n: int,
                         prec: int = DEFAULT_PRECISION_BITS,
                         settings: SeriesSettings = DEFAULT_SETTINGS) -> mpmath.mpc:
    """
    The period integral r_{n,f}(A) = int_0^oo (f|A)(it) t^n dt.

    Raises:
        QpzError: If n is outside [0, 2k-2]
        QuadratureNonConvergent: If adaptive refinement stalls
    """
    if not 0 <= n <= 2 * fam.k - 2:
        raise QpzError(f"n must lie in [0, {2 * fam.k - 2}], got {n}")
    return period_coefficients(fam, variant, A, settings, prec)[n]


def period_error_budget(fam: FormFamily, A: UnimodularMatrix,
                        settings: SeriesSettings = DEFAULT_SETTINGS) -> Dict[str, float]:
    """
    Quadrature and series error estimates behind period_coefficients(fam, ., A).

    definition_gap compares the |b|-truncated series with the completed series
    that feeds the quadrature, at t = 1.
    """
    direct = branch_integral(fam, A, settings)
    folded = branch_integral(fam, A @ S_MATRIX, settings)
    w = 2 * fam.k - 2
    reach = max(direct.upper, folded.upper) ** (w + 1)
    truncated, _ = slashed_form_converged(fam, "plain", A, 1.0, settings)
    completed, _ = slashed_form_completed(fam, "plain", A, 1.0, settings)
    return {
        "quadrature_error": direct.quadrature_error + folded.quadrature_error,
        "series_error": max(direct.series_error, folded.series_error) * reach,
        "upper_cutoff": max(direct.upper, folded.upper),
        "definition_gap": float(abs(truncated - completed)),
    }


def period_polynomial_component(fam: FormFamily, variant: str, A: UnimodularMatrix,
                                settings: SeriesSettings = DEFAULT_SETTINGS,
                                prec: int = DEFAULT_PRECISION_BITS) -> Poly:
    """r_f(A)(X) = sum_n i^{-n+1} binom(2k-2, n) r_n(A) X^{2k-2-n}."""
    w = 2 * fam.k - 2
    coefficients = period_coefficients(fam, variant, A, settings, prec)
    out = [0] * (w + 1)
    with mpmath.workprec(prec):
        for n, r_n in enumerate(coefficients):
            unit = mpmath.mpc(1j ** ((1 - n) % 4))
            out[w - n] = unit * binomial(w, n) * r_n
    return Poly(tuple(out))


def period_polynomial_numeric(fam: FormFamily, variant: str,
                              prec: int = DEFAULT_PRECISION_BITS,
                              settings: SeriesSettings = DEFAULT_SETTINGS) -> PeriodVector:
    """Numeric period polynomial for every coset representative, in label order."""
    _require_nonsquare(fam)
    entries = {}
    for A in coset_rep_map(fam.N).values():
        entries[A] = period_polynomial_component(fam, variant, A, settings, prec)
    return PeriodVector(fam.N, 2 * fam.k - 2, entries)


def coefficient_relation_residuals(poly: Poly, N: int, k: int) -> List[mpmath.mpf]:
    """
    |p_n - (-1)^{n+1} N^{k-1-n} p_{2k-2-n}| for n = 0..k-1, where p_n is the
    coefficient of X^{2k-2-n} in the identity component of a Fricke-invariant
    form's period polynomial.
    """
    w = 2 * k - 2
    p = [poly.coefficient(w - n) for n in range(w + 1)]
    residuals = []
    for n in range(k):
        sign = -1 if n % 2 == 0 else 1
        residuals.append(mpmath.mpf(abs(p[n] - sign * N ** (k - 1 - n) * p[w - n])))
    return residuals


# ---------------------------------------------------------------------------
# Closed form at the identity
# ---------------------------------------------------------------------------

def d_coefficient(k: int, n: int, alpha: int, beta: int, gamma: int) -> int:
    """Coefficient of X^n in (alpha X^2 + beta X + gamma)^{k-1}."""
    e = k - 1
    total = 0
    for i in range(n // 2 + 1):
        j = n - 2 * i
        rest = e - i - j
        if rest < 0:
            continue
        multinomial = math.factorial(e) // (math.factorial(i) * math.factorial(j) * math.factorial(rest))
        total += multinomial * alpha ** i * beta ** j * gamma ** rest
    return total


def algebraic_part(fam: FormFamily) -> Poly:
    """
    sum_{a>0>c} (NaX^2 - bX + c)^{k-1} - sum_{a<0<c} (NaX^2 - bX + c)^{k-1}
    as an integer polynomial.
    """
    k, w = fam.k, 2 * fam.k - 2
    out = [0] * (w + 1)
    for Q in enumerate_ac_negative(fam):
        sign = 1 if Q.A > 0 else -1
        for n in range(w + 1):
            out[w - n] += sign * d_coefficient(k, n, Q.C, -Q.B, Q.A)
    return Poly(tuple(out))


def closed_form_identity_component(fam: FormFamily, zeta_rho, zeta_neg_rho,
                                   prec: int = DEFAULT_PRECISION_BITS) -> Poly:
    """
    Closed form of r^+_{f+}(I)(X) + r^-_{f-}(I)(X).

    The real part R(X) is the algebraic part plus zeta terms on X^{2k-2} and X^0:
      - D^{k-1/2} / (binom N (2k-1)) (zeta_rho + (-1)^k zeta_-rho) / Z  on X^{2k-2}
      + D^{k-1/2} / (binom N^k (2k-1)) (zeta_-rho + (-1)^k zeta_rho) / Z  on X^0
    with Z = zeta(2k) prod_{p|N}(1 - p^{-2k}).

    With r_n = int_0^oo (f|A)(it) t^n dt and the unit i^{1-n} on X^{2k-2-n},
    the even powers of X carry i R(X) and the odd powers carry R(X) itself,
    so the returned polynomial is i R_even(X) + R_odd(X).
    """
    _require_nonsquare(fam)
    k, N, w = fam.k, fam.N, 2 * fam.k - 2
    algebraic = algebraic_part(fam)
    sign = 1 if k % 2 == 0 else -1
    factor = level_factor(N, 2 * k)
    with mpmath.workprec(prec):
        Z = zeta_even_exact(2 * k).to_mpf(prec) * mpmath.mpf(factor.numerator) / factor.denominator
        base = mpmath.mpf(fam.D) ** (k - mpmath.mpf(1) / 2) / (binomial(w, k - 1) * (2 * k - 1))
        lead = -base / N * (zeta_rho + sign * zeta_neg_rho) / Z
        constant = base / mpmath.mpf(N) ** k * (zeta_neg_rho + sign * zeta_rho) / Z
        coeffs = list(algebraic.coeffs)
        coeffs[w] = coeffs[w] + lead
        coeffs[0] = coeffs[0] + constant
        unit = mpmath.mpc(0, 1)
        coeffs = [unit * c if m % 2 == 0 else c for m, c in enumerate(coeffs)]
    return Poly(tuple(coeffs))
