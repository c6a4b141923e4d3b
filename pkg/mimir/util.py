import re
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal

__all__ = [
    "parse_timestamp",
    "format_timestamp",
    "compile_glob",
    "format_percent",
]


def parse_timestamp(text: str) -> datetime:
    """Parses an ISO-8601 instant carrying a UTC offset.

    The result is an aware UTC datetime truncated to milliseconds.
    Raises ValueError for naive or unparseable values.
    """
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    # fromisoformat before 3.11 only takes 3 or 6 fractional digits
    match = re.match(r"^(.*T\d\d:\d\d:\d\d)\.(\d+)(.*)$", text)
    if match:
        head, frac, tail = match.groups()
        text = f"{head}.{frac[:6].ljust(6, '0')}{tail}"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None or ts.utcoffset() is None:
        raise ValueError(f"timestamp has no UTC offset: {text!r}")
    ts = ts.astimezone(timezone.utc)
    return ts.replace(microsecond=ts.microsecond // 1000 * 1000)


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


def compile_glob(pattern: str):
    """Compiles a glob supporting only `*` and `?`, case-insensitive."""
    parts = []
    for ch in pattern:
        if ch == "*":
            parts.append(".*")
        elif ch == "?":
            parts.append(".")
        else:
            parts.append(re.escape(ch))
    return re.compile("".join(parts), re.IGNORECASE | re.DOTALL)


def format_percent(fraction) -> str:
    """Renders a fraction as a one-decimal percentage, rounding half up.

    >>> format_percent(37 / 194)
    '19.1%'
    """
    value = (Decimal(fraction) * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return f"{value}%"
