"""CSV helpers: header row, comma separator, 12 significant digits."""

import csv
import io
import numbers


def fmt(value):
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return format(float(value), ".12g")
    if value is None:
        return ""
    return str(value)


def write_table(header, rows, stream=None):
    """Write ``rows`` under ``header``; returns the text when ``stream`` is None."""
    out = io.StringIO() if stream is None else stream
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    if stream is None:
        return out.getvalue()
    return None
