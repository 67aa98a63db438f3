"""
Record for `qpz period`: closed form of the identity component of the
period polynomial against the quadrature pipeline.
"""
from typing import Any, Dict

from components.output import decimal_string, poly_record
from utils.config import RunConfig
from utils.theorems import theorem1_identity_report


def build_period_record(k: int, N: int, D: int, rho: int, config: RunConfig) -> Dict[str, Any]:
    """
    Run the identity-component comparison and collect coefficients, gaps and
    error estimates.

    Args:
        k: Weight parameter
        N: Level
        D: Nonsquare discriminant
        rho: Residue with rho^2 = D mod 4N
        config: Run configuration (precision, truncation and tolerances)

    Returns:
        Dict[str, Any]: The JSON record
    """
    prec = config.precision_bits
    settings = config.series_settings()
    report = theorem1_identity_report(k, N, D, rho, prec, config.c_max, settings)
    return {
        "subcommand": "period",
        "params": {"k": k, "N": N, "D": D, "rho": report.family.rho},
        "closed_form": poly_record(report.closed_form, prec),
        "algebraic_part": {f"X^{m}": str(c) for m, c in enumerate(report.algebraic.coeffs)},
        "numeric": poly_record(report.numeric, prec),
        "max_gap": decimal_string(report.max_gap, prec),
        "middle_gap": decimal_string(report.middle_gap, prec),
        "coefficient_residuals": [decimal_string(r, prec) for r in report.coefficient_residuals],
        "zeta_rho": decimal_string(report.zeta_rho, prec),
        "zeta_neg_rho": decimal_string(report.zeta_neg_rho, prec),
        "direct_zeta": [
            {
                "value": decimal_string(z.value, prec),
                "tail_estimate": decimal_string(z.tail_estimate, prec),
                "c_max": z.c_max,
            }
            for z in report.direct_zeta
        ],
        "error_budget": {name: decimal_string(value, 53) for name, value in sorted(report.error_budget.items())},
        "settings": {
            "b_bound_initial": settings.b_bound_initial,
            "b_bound_cap": settings.b_bound_cap,
            "a_bound_initial": settings.a_bound_initial,
            "a_bound_cap": settings.a_bound_cap,
            "quadrature_tol": repr(settings.quadrature_tol),
            "series_tol": repr(settings.series_tol),
        },
        "precision_bits": prec,
    }
