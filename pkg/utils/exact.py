"""
Exact integer and rational arithmetic: Bernoulli numbers, binomials,
divisor sums, the Kronecker symbol and exact values of zeta at even integers.
"""
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple

import mpmath
from sympy import factorint
from sympy.functions.combinatorial.numbers import jacobi_symbol

from utils.errors import QpzError

__all__ = [
    "BigRational",
    "ExactValue",
    "bernoulli",
    "binomial",
    "sigma_divisor",
    "kronecker",
    "is_fundamental",
    "squarefree_decomposition",
    "zeta_even_exact",
]

BigRational = Fraction

# B_1 = -1/2 convention
_BERNOULLI_MEMO: Dict[int, Fraction] = {0: Fraction(1), 1: Fraction(-1, 2)}
_BERNOULLI_LOCK = threading.Lock()


def bernoulli(n: int) -> Fraction:
    """
    Return the Bernoulli number B_n as an exact rational.

    Uses the recurrence sum_{j=0}^{m} C(m+1, j) B_j = 0 and memoizes every
    value computed along the way.

    Args:
        n: Index, n >= 0

    Returns:
        Fraction: B_n

    Raises:
        ValueError: If n is negative
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    cached = _BERNOULLI_MEMO.get(n)
    if cached is not None:
        return cached

    with _BERNOULLI_LOCK:
        for m in range(2, n + 1):
            if m in _BERNOULLI_MEMO:
                continue
            acc = Fraction(0)
            for j in range(m):
                acc += math.comb(m + 1, j) * _BERNOULLI_MEMO[j]
            _BERNOULLI_MEMO[m] = -acc / (m + 1)
        return _BERNOULLI_MEMO[n]


def binomial(n: int, r: int) -> int:
    """Exact binomial coefficient, zero outside 0 <= r <= n."""
    if r < 0 or n < 0 or r > n:
        return 0
    return math.comb(n, r)


def sigma_divisor(ell: int, n: int) -> int:
    """
    Sum of the ell-th powers of the positive divisors of n.

    Args:
        ell: Non-negative exponent
        n: Positive integer

    Returns:
        int: sigma_ell(n)

    Raises:
        QpzError: If n < 1 or ell < 0
    """
    if n < 1:
        raise QpzError(f"sigma_divisor needs n >= 1, got {n}")
    if ell < 0:
        raise QpzError(f"sigma_divisor needs ell >= 0, got {ell}")

    total = 1
    for p, e in factorint(n).items():
        if ell == 0:
            total *= e + 1
        else:
            q = p ** ell
            total *= (q ** (e + 1) - 1) // (q - 1)
    return total


def kronecker(D: int, n: int) -> int:
    """
    Kronecker symbol (D/n).

    Args:
        D: Discriminant (D = 0 or 1 mod 4 for the character interpretation)
        n: Any integer

    Returns:
        int: -1, 0 or 1
    """
    if n == 0:
        return 1 if abs(D) == 1 else 0

    result = 1
    if n < 0:
        n = -n
        if D < 0:
            result = -result

    twos = 0
    while n % 2 == 0:
        n //= 2
        twos += 1
    if twos:
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5) and twos % 2 == 1:
            result = -result

    if n == 1:
        return result
    return result * int(jacobi_symbol(D % n, n))


def squarefree_decomposition(d: int) -> Tuple[int, int]:
    """
    Split a positive integer as d = s^2 * f with f squarefree.

    Returns:
        Tuple[int, int]: (s, f)
    """
    if d < 1:
        raise QpzError(f"squarefree_decomposition needs d >= 1, got {d}")
    s, f = 1, 1
    for p, e in factorint(d).items():
        s *= p ** (e // 2)
        if e % 2:
            f *= p
    return s, f


def is_fundamental(D: int) -> bool:
    """True when D is the discriminant of a quadratic field (D = 1 excluded)."""
    if D in (0, 1):
        return False
    if D % 4 == 1:
        return squarefree_decomposition(abs(D))[0] == 1
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and squarefree_decomposition(abs(m))[0] == 1
    return False


@dataclass(frozen=True)
class ExactValue:
    """
    The number q * pi^pi_power / sqrt(d_sqrt).

    d_sqrt is kept squarefree: square factors move into q on construction,
    so equal numbers have equal fields.
    """
    q: Fraction
    pi_power: int = 0
    d_sqrt: int = 1

    def __post_init__(self):
        q = Fraction(self.q)
        if self.pi_power < 0:
            raise QpzError(f"pi_power must be >= 0, got {self.pi_power}")
        if self.d_sqrt < 1:
            raise QpzError(f"d_sqrt must be >= 1, got {self.d_sqrt}")
        s, f = squarefree_decomposition(self.d_sqrt)
        q = q / s
        if q == 0:
            object.__setattr__(self, "pi_power", 0)
            f = 1
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "d_sqrt", f)

    def __mul__(self, other: "ExactValue") -> "ExactValue":
        if isinstance(other, (int, Fraction)):
            return ExactValue(self.q * other, self.pi_power, self.d_sqrt)
        if not isinstance(other, ExactValue):
            return NotImplemented
        # 1/sqrt(a) * 1/sqrt(b) = 1/sqrt(ab)
        return ExactValue(self.q * other.q, self.pi_power + other.pi_power,
                          self.d_sqrt * other.d_sqrt)

    __rmul__ = __mul__

    def __neg__(self) -> "ExactValue":
        return ExactValue(-self.q, self.pi_power, self.d_sqrt)

    def __add__(self, other: "ExactValue") -> "ExactValue":
        if not isinstance(other, ExactValue):
            return NotImplemented
        if self.q == 0:
            return other
        if other.q == 0:
            return self
        if (self.pi_power, self.d_sqrt) != (other.pi_power, other.d_sqrt):
            raise QpzError(f"cannot add unlike exact values {self.symbolic()} and {other.symbolic()}")
        return ExactValue(self.q + other.q, self.pi_power, self.d_sqrt)

    def is_zero(self) -> bool:
        return self.q == 0

    def to_mpf(self, prec: int) -> mpmath.mpf:
        """Evaluate at the given binary precision."""
        with mpmath.workprec(prec):
            value = mpmath.mpf(self.q.numerator) / self.q.denominator
            if self.pi_power:
                value *= mpmath.pi ** self.pi_power
            if self.d_sqrt != 1:
                value /= mpmath.sqrt(self.d_sqrt)
            return +value

    def symbolic(self) -> str:
        """Render as e.g. '4*pi^4/(51*sqrt(17))'."""
        if self.q == 0:
            return "0"
        sign = "-" if self.q < 0 else ""
        num, den = abs(self.q.numerator), self.q.denominator

        top = []
        if num != 1 or self.pi_power == 0:
            top.append(str(num))
        if self.pi_power == 1:
            top.append("pi")
        elif self.pi_power > 1:
            top.append(f"pi^{self.pi_power}")

        bottom = []
        if den != 1:
            bottom.append(str(den))
        if self.d_sqrt != 1:
            bottom.append(f"sqrt({self.d_sqrt})")

        text = sign + "*".join(top)
        if len(bottom) == 1:
            text += "/" + bottom[0]
        elif bottom:
            text += "/(" + "*".join(bottom) + ")"
        return text

    def to_record(self) -> Dict[str, object]:
        return {
            "q": str(self.q),
            "pi_power": self.pi_power,
            "sqrt_D": self.d_sqrt,
            "symbolic": self.symbolic(),
        }


def zeta_even_exact(two_k: int) -> ExactValue:
    """
    Exact value of zeta(two_k) for even two_k >= 2.

    zeta(2n) = (-1)^(n+1) B_{2n} (2 pi)^{2n} / (2 (2n)!)

    Raises:
        QpzError: If two_k is odd or below 2
    """
    if two_k < 2 or two_k % 2:
        raise QpzError(f"zeta_even_exact needs an even argument >= 2, got {two_k}")
    n = two_k // 2
    sign = 1 if n % 2 == 1 else -1
    q = sign * bernoulli(two_k) * Fraction(2 ** two_k, 2 * math.factorial(two_k))
    return ExactValue(q, two_k, 1)
