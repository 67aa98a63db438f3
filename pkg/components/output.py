"""
Serialization of result records: JSON with decimal-string numbers, and
text rendered through the jinja2 templates.
"""
import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping, TextIO

import jinja2
import mpmath

TEMPLATE_DIR = Path(__file__).parent.parent / "templates"


def decimal_digits(prec: int) -> int:
    """Significant decimal digits carried by prec bits."""
    return max(15, int(prec * math.log10(2)))


def decimal_string(x, prec: int) -> str:
    """Real number as a decimal string at the precision of prec bits; ints stay exact."""
    if isinstance(x, int):
        return str(x)
    with mpmath.workprec(prec):
        return mpmath.nstr(mpmath.mpf(x), decimal_digits(prec), min_fixed=-5, max_fixed=12)


def number_record(x, prec: int):
    """Decimal string for real values, {"re", "im"} for complex ones."""
    if isinstance(x, (mpmath.mpc, complex)):
        return {"re": decimal_string(x.real, prec), "im": decimal_string(x.imag, prec)}
    return decimal_string(x, prec)


def poly_record(poly, prec: int) -> Dict[str, Any]:
    """
    Coefficients of a Poly keyed by degree, as "X^m". If any coefficient is
    complex, every coefficient is written as {"re", "im"}.
    """
    if any(isinstance(c, (mpmath.mpc, complex)) for c in poly.coeffs):
        return {f"X^{m}": number_record(mpmath.mpc(c), prec) for m, c in enumerate(poly.coeffs)}
    return {f"X^{m}": number_record(c, prec) for m, c in enumerate(poly.coeffs)}


def to_json(record: Mapping[str, Any]) -> str:
    return json.dumps(record, indent=2, sort_keys=True, ensure_ascii=True)


def short(value: str, digits: int = 20) -> str:
    """Trim a decimal string for text output."""
    if not isinstance(value, str) or len(value) <= digits + 8:
        return value
    with mpmath.workdps(digits + 8):
        return mpmath.nstr(mpmath.mpf(value), digits)


def _environment() -> jinja2.Environment:
    env = jinja2.Environment(
        loader=jinja2.FileSystemLoader(TEMPLATE_DIR),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
        undefined=jinja2.StrictUndefined,
    )
    env.filters["short"] = short
    return env


def render_text(template_name: str, record: Mapping[str, Any], **extra) -> str:
    """Render a record through templates/<template_name>."""
    template = _environment().get_template(template_name)
    return template.render(record=record, **extra)


def emit(record: Mapping[str, Any], template_name: str, output_format: str, stream: TextIO, **extra) -> None:
    """Write a record as JSON or as rendered text."""
    if output_format == "json":
        stream.write(to_json(record) + "\n")
    else:
        stream.write(render_text(template_name, record, **extra))
