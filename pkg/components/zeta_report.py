"""
Record for `qpz zeta`: the truncated family zeta zeta_{N,D,rho}(k).
"""
from typing import Any, Dict, Optional

import mpmath

from components.output import decimal_string
from utils.config import RunConfig
from utils.qforms import validate_family
from utils.zetafun import zeta_family_direct, zeta_family_euler


def build_zeta_record(k: int, N: int, D: int, rho: int, c_max: Optional[int],
                      config: RunConfig) -> Dict[str, Any]:
    """
    Direct truncated sum with its heuristic tail, next to the Euler-product value.
    """
    prec = config.precision_bits
    c_max = c_max or config.c_max
    fam = validate_family(k, N, D, rho, require_nonsquare=True)
    direct = zeta_family_direct(fam, k, c_max, prec)
    euler = zeta_family_euler(fam, k, prec)
    with mpmath.workprec(prec):
        gap = abs(direct.value - euler)
    return {
        "subcommand": "zeta",
        "params": {"k": k, "N": N, "D": D, "rho": fam.rho, "c_max": c_max},
        "value": decimal_string(direct.value, prec),
        "tail_estimate": decimal_string(direct.tail_estimate, prec),
        "heuristic_tail": direct.heuristic_tail,
        "euler_value": decimal_string(euler, prec),
        "abs_gap_to_euler": decimal_string(gap, prec),
        "precision_bits": prec,
    }
