"""Date and currency-amount surface formats.

Date patterns are strftime patterns plus one extension: ``%o`` renders the
day of month with an English ordinal suffix ("19th"). Amount patterns are
``str.format`` templates with a single ``{}`` placeholder for the numeric
value (e.g. ``"${:,.2f}"``).
"""

from __future__ import annotations

import re
from datetime import date as _date
from datetime import datetime

_MONTHS = (
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
)

DATE_PATTERNS = ("%m/%d/%y", "%m-%d-%y", "%o %b, %y", "%Y-%m-%d", "%b %d, %Y")
AMOUNT_PATTERNS = ("${:,.2f}", "{:,.2f}", "{:.2f}")


def _ordinal(n: int) -> str:
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def render_date(d: _date, pattern: str) -> str:
    # expand %o and %b before strftime so output is locale-independent
    if "%o" in pattern:
        pattern = pattern.replace("%o", _ordinal(d.day))
    if "%b" in pattern:
        pattern = pattern.replace("%b", _MONTHS[d.month - 1])
    return d.strftime(pattern)


_ORDINAL_RE = re.compile(
    r"^(\d{1,2})(?:st|nd|rd|th)\s+([A-Za-z]{3}),?\s+(\d{2,4})$"
)
_MONTH_FIRST_RE = re.compile(r"^([A-Za-z]{3})\.?\s+(\d{1,2}),?\s+(\d{2,4})$")


def _expand_year(year: int) -> int:
    if year < 100:
        return year + (1900 if year >= 50 else 2000)
    return year


def _named_month_date(day: int, mon: str, year: int) -> _date | None:
    mon = mon.title()
    if mon not in _MONTHS:
        return None
    try:
        return _date(_expand_year(year), _MONTHS.index(mon) + 1, day)
    except ValueError:
        return None


def parse_date(text: str) -> _date | None:
    """Parse any supported surface form back to a calendar date."""
    text = text.strip()
    m = _ORDINAL_RE.match(text)
    if m:
        return _named_month_date(int(m.group(1)), m.group(2), int(m.group(3)))
    m = _MONTH_FIRST_RE.match(text)
    if m:
        return _named_month_date(int(m.group(2)), m.group(1), int(m.group(3)))
    for pattern in ("%m/%d/%y", "%m-%d-%y", "%Y-%m-%d"):
        try:
            return datetime.strptime(text, pattern).date()
        except ValueError:
            continue
    return None


def render_amount(value: float, pattern: str) -> str:
    return pattern.format(round(value, 2))


_AMOUNT_STRIP_RE = re.compile(r"[,$\s]|USD", re.IGNORECASE)


def parse_amount(text: str) -> float | None:
    cleaned = _AMOUNT_STRIP_RE.sub("", text.strip())
    if not cleaned:
        return None
    try:
        return round(float(cleaned), 2)
    except ValueError:
        return None
