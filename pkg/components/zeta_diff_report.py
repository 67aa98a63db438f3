"""
Record for `qpz zeta-diff`: exact zeta_{N,D,rho}(k) - zeta_{N,D,-rho}(k) for
odd k against the truncated solution-count sums.
"""
from typing import Any, Dict, Optional

from components.output import decimal_string
from utils.config import RunConfig
from utils.theorems import theorem2_report


def build_zeta_diff_record(k: int, N: int, D: int, rho: int, c_max: Optional[int],
                           config: RunConfig) -> Dict[str, Any]:
    prec = config.precision_bits
    c_max = c_max or config.c_max
    report = theorem2_report(k, N, D, rho, c_max, prec)
    return {
        "subcommand": "zeta-diff",
        "params": {"k": k, "N": N, "D": D, "rho": rho, "c_max": c_max},
        "exact": report.exact.to_record(),
        "c_power_sum": report.c_power_sum,
        "direct_difference": decimal_string(report.direct_difference, prec),
        "tail_estimate": decimal_string(report.tail_total, prec),
        "heuristic_tail": True,
        "abs_gap": decimal_string(report.abs_gap, prec),
        "within_tail": bool(report.abs_gap <= report.tail_total),
        "precision_bits": prec,
    }
