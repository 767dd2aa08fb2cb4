"""CSV output with an embedded ``# config:`` block.

Layout::

    # config: key = value      (one line per resolved config entry, sorted)
    # note: free text          (optional)
    col1,col2,...
    ...rows...

Floats are written with ``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path


def _cell(x):
    if hasattr(x, "item"):  # numpy scalar
        x = x.item()
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def render_csv(columns, rows, config=None, notes=()):
    buf = io.StringIO()
    for key in sorted(config or {}):
        buf.write(f"# config: {key} = {_cell(config[key])}\n")
    for note in notes:
        buf.write(f"# note: {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def write_csv(path, columns, rows, config=None, notes=()):
    """Write the table atomically-enough (single write) and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(columns, rows, config, notes))
    return path


def read_config_block(path):
    """Recover the ``# config:`` entries of a file as strings."""
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.startswith("# config:"):
            if not line.startswith("#"):
                break
            continue
        key, _, val = line[len("# config:"):].partition("=")
        out[key.strip()] = val.strip()
    return out
