"""Small shared helpers: deterministic number formatting, week arithmetic."""

from __future__ import annotations

from datetime import date, datetime, timedelta, timezone

from .errors import DataError


def fmt_num(x) -> str:
    """Format a number for text output.

    Integral values print without a decimal point; everything else uses
    ``repr``, which emits the shortest string that round-trips exactly.
    Output is therefore deterministic and parse(fmt(x)) == x.
    """
    f = float(x)
    if f.is_integer():
        return str(int(f))
    return repr(f)


def week_start_of(d: date) -> date:
    """Monday of the ISO week containing ``d``."""
    return d - timedelta(days=d.weekday())


def is_monday(d: date) -> bool:
    return d.weekday() == 0


def parse_utc_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 timestamp into a timezone-aware UTC datetime.

    Accepts a trailing ``Z`` (which datetime.fromisoformat rejects on
    Python 3.10), an explicit offset, or no offset at all; naive values
    are taken to already be UTC.
    """
    s = raw.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(s)
    except ValueError as exc:
        raise DataError(f"bad timestamp {raw!r}: {exc}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_utc_timestamp(ts: datetime) -> str:
    """Inverse of parse_utc_timestamp, second precision, trailing Z."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
