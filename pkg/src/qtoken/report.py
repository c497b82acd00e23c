"""CSV output with a provenance line."""

import csv
import io

from . import __version__


def provenance_line(config=None, extra=None):
    parts = [f"qtoken {__version__}"]
    if config is not None:
        parts += [f"config={config.digest()}", f"source={config.source}"]
    for k, v in (extra or {}).items():
        parts.append(f"{k}={v}")
    return "# " + " ".join(parts)


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def csv_text(header, rows, config=None, extra=None):
    """Render rows as CSV text: provenance comment, header, then data."""
    buf = io.StringIO()
    buf.write(provenance_line(config, extra) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows, config=None, extra=None):
    text = csv_text(header, rows, config, extra)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
