"""
Adaptive Gauss-Legendre quadrature for vector-valued integrands.
"""
import logging
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from utils.errors import QuadratureNonConvergent

logger = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def _gauss_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return leggauss(order)


def _map_nodes(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo)


def integrate_panels(
    fn: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float,
    order: int = 20,
    max_panels: int = 400,
) -> Tuple[np.ndarray, float, int]:
    """
    Integrate a vector-valued function over [a, b] by adaptive bisection.

    Each panel is compared against the sum over its two halves; the coarse
    panel and both halves are evaluated in one call to fn so they share any
    state fn keeps between nodes. Panels are processed left to right.

    Args:
        fn: Maps a 1-d array of nodes to an array of shape (len(nodes), m)
        a: Lower bound
        b: Upper bound, b > a
        tol: Absolute tolerance on the largest component
        order: Gauss-Legendre nodes per panel
        max_panels: Refinement budget

    Returns:
        Tuple of (integral vector, error estimate, panels used)

    Raises:
        QuadratureNonConvergent: If the refinement budget is exhausted
    """
    if b <= a:
        raise ValueError(f"integration interval [{a}, {b}] is empty")
    x, w = _gauss_rule(order)
    length = b - a

    total = None
    error = 0.0
    panels = 0
    stack = [(a, b)]
    while stack:
        lo, hi = stack.pop()
        mid = 0.5 * (lo + hi)
        nodes = np.concatenate([_map_nodes(x, lo, hi), _map_nodes(x, lo, mid), _map_nodes(x, mid, hi)])
        values = np.asarray(fn(nodes))
        coarse = 0.5 * (hi - lo) * (w @ values[:order])
        fine = 0.5 * (mid - lo) * (w @ values[order:2 * order]) + 0.5 * (hi - mid) * (w @ values[2 * order:])
        panels += 1

        diff = float(np.max(np.abs(coarse - fine))) if coarse.size else 0.0
        if diff <= tol * (hi - lo) / length:
            total = fine if total is None else total + fine
            error += diff
            continue
        if panels >= max_panels:
            raise QuadratureNonConvergent(
                f"no convergence on [{a:g}, {b:g}] after {panels} panels (last panel [{lo:g}, {hi:g}], gap {diff:.3g})")
        stack.append((mid, hi))
        stack.append((lo, mid))

    logger.debug("integrated [%g, %g] with %d panels, error %.3g", a, b, panels, error)
    return total, error, panels
