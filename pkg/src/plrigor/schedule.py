"""Calendar cutoff schedules and month arithmetic."""

from datetime import date

from .errors import PreconditionError

__all__ = ["quarterly_cutoffs", "yearly_cutoffs", "parse_schedule", "add_months"]


def add_months(d, months):
    """Shift a date by whole calendar months, clamping the day."""
    month_index = d.year * 12 + (d.month - 1) + months
    year, month = divmod(month_index, 12)
    month += 1
    day = d.day
    while day > 28:
        try:
            return date(year, month, day)
        except ValueError:
            day -= 1
    return date(year, month, day)


def quarterly_cutoffs(start, end):
    """First days of calendar quarters within [start, end] inclusive."""
    if start > end:
        raise PreconditionError("schedule start must not exceed end")
    q_month = ((start.month - 1) // 3) * 3 + 1
    d = date(start.year, q_month, 1)
    if d < start:
        d = add_months(d, 3)
    out = []
    while d <= end:
        out.append(d)
        d = add_months(d, 3)
    return out


def yearly_cutoffs(start, end):
    """January firsts within [start, end] inclusive."""
    if start > end:
        raise PreconditionError("schedule start must not exceed end")
    d = date(start.year, 1, 1)
    if d < start:
        d = date(start.year + 1, 1, 1)
    out = []
    while d <= end:
        out.append(d)
        d = date(d.year + 1, 1, 1)
    return out


def parse_schedule(spec):
    """Parse 'quarterly:YYYY-MM-DD:YYYY-MM-DD' or 'yearly:...' strings."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise PreconditionError(f"bad schedule spec {spec!r}; expected kind:start:end")
    kind, start_s, end_s = parts
    start = date.fromisoformat(start_s)
    end = date.fromisoformat(end_s)
    if kind == "quarterly":
        return quarterly_cutoffs(start, end)
    if kind == "yearly":
        return yearly_cutoffs(start, end)
    raise PreconditionError(f"unknown schedule kind {kind!r}")
