"""
Tabular summaries of verification results.
"""
from typing import Any, Dict, Iterable, Mapping

import pandas as pd

REPORT_COLUMNS = ["criterion", "description", "gap", "tolerance", "passed", "seconds"]


def build_report_frame(rows: Iterable[Mapping[str, Any]]) -> pd.DataFrame:
    """
    One row per verification criterion.

    Args:
        rows: Mappings with the REPORT_COLUMNS keys; gap and tolerance are floats

    Returns:
        pd.DataFrame: Rows ordered by criterion number
    """
    df = pd.DataFrame(list(rows), columns=REPORT_COLUMNS)
    if df.empty:
        return df
    df["passed"] = df["passed"].astype(bool)
    # tolerance 0 marks exact checks; margin = gap / tolerance otherwise
    df["margin"] = df.apply(
        lambda row: row["gap"] / row["tolerance"] if row["tolerance"] > 0 else (0.0 if row["gap"] == 0 else float("inf")),
        axis=1,
    )
    return df.sort_values("criterion").reset_index(drop=True)


def get_gap_metrics(df: pd.DataFrame) -> Dict[str, Any]:
    """
    Totals over a report frame.

    Returns:
        Dictionary with total, passed, failed, failed_criteria, worst_margin and seconds
    """
    if df.empty:
        return {
            "total": 0,
            "passed": 0,
            "failed": 0,
            "failed_criteria": [],
            "worst_margin": 0.0,
            "seconds": 0.0,
        }
    failed = df[~df["passed"]]
    return {
        "total": len(df),
        "passed": int(df["passed"].sum()),
        "failed": len(failed),
        "failed_criteria": [int(c) for c in failed["criterion"]],
        "worst_margin": float(df["margin"].max()),
        "seconds": float(df["seconds"].sum()),
    }


def format_report_table(df: pd.DataFrame) -> str:
    """Fixed-width text table of a report frame."""
    if df.empty:
        return "(no criteria run)"
    shown = df[REPORT_COLUMNS].copy()
    shown["gap"] = shown["gap"].map(lambda x: f"{x:.3e}")
    shown["tolerance"] = shown["tolerance"].map(lambda x: f"{x:.1e}" if x > 0 else "exact")
    shown["passed"] = shown["passed"].map(lambda x: "PASS" if x else "FAIL")
    shown["seconds"] = shown["seconds"].map(lambda x: f"{x:.2f}")
    return shown.to_string(index=False)
