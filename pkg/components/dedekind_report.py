"""
Record for `qpz dedekind`: the divisor-sum value of zeta_K(k) and its oracle.
"""
from typing import Any, Dict

from components.output import decimal_string
from utils.config import RunConfig
from utils.theorems import theorem3_dedekind


def build_dedekind_record(k: int, N: int, D: int, assume_plus_space_vanishes: bool,
                          config: RunConfig) -> Dict[str, Any]:
    """
    Evaluate zeta_K(k) for K = Q(sqrt(D)) and compare with zeta(k) L(k, chi_D).

    Args:
        k: Even weight parameter
        N: Level with D = 1 mod 4N
        D: Fundamental discriminant
        assume_plus_space_vanishes: Override for levels outside the vanishing table
        config: Run configuration

    Returns:
        Dict[str, Any]: The JSON record
    """
    prec = config.precision_bits
    report = theorem3_dedekind(k, N, D, assume_plus_space_vanishes, prec)
    return {
        "subcommand": "dedekind",
        "params": {"k": k, "N": N, "D": D, "assume_plus_space_vanishes": assume_plus_space_vanishes},
        "exact": report.exact.to_record(),
        "numeric": decimal_string(report.numeric, prec),
        "oracle": decimal_string(report.oracle, prec),
        "abs_gap": decimal_string(report.abs_gap, prec),
        "inner_sums": {str(d): total for d, total in report.inner_sums.items()},
        "assumptions": [list(entry) for entry in report.assumptions],
        "hypothesis_source": report.hypothesis_source,
        "precision_bits": prec,
    }
