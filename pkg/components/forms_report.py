"""
Record for `qpz forms`: the finite set of forms [Na, b, c] with ac < 0.
"""
from typing import Any, Dict

import pandas as pd

from utils.periods import algebraic_part
from utils.qforms import enumerate_ac_negative, validate_family
from utils.theorems import ac_negative_c_power_sum


def forms_frame(forms, N: int) -> pd.DataFrame:
    """Table of forms with columns a, b, c, A (= Na) and the sign of a."""
    df = pd.DataFrame(
        [{"a": Q.A // N, "b": Q.B, "c": Q.C, "A": Q.A} for Q in forms],
        columns=["a", "b", "c", "A"],
    )
    df["side"] = df["a"].map(lambda a: "a>0>c" if a > 0 else "a<0<c")
    return df


def build_forms_record(k: int, N: int, D: int, rho: int) -> Dict[str, Any]:
    fam = validate_family(k, N, D, rho, require_nonsquare=True)
    forms = enumerate_ac_negative(fam)
    df = forms_frame(forms, N)
    counts = df.groupby("side").size().to_dict() if not df.empty else {}
    algebraic = algebraic_part(fam)
    return {
        "subcommand": "forms",
        "params": {"k": k, "N": N, "D": D, "rho": fam.rho},
        "forms": [{"A": Q.A, "B": Q.B, "C": Q.C} for Q in forms],
        "count": len(forms),
        "count_by_side": {side: int(n) for side, n in sorted(counts.items())},
        "c_power_sum": ac_negative_c_power_sum(fam),
        "algebraic_part": {f"X^{m}": str(c) for m, c in enumerate(algebraic.coeffs)},
    }


def forms_table_text(record: Dict[str, Any]) -> str:
    """Fixed-width table of the forms in a forms record."""
    N = record["params"]["N"]
    if not record["forms"]:
        return "(no forms)"
    rows = [{"a": f["A"] // N, "b": f["B"], "c": f["C"]} for f in record["forms"]]
    return pd.DataFrame(rows, columns=["a", "b", "c"]).to_string(index=False)
