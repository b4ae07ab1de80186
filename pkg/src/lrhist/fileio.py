"""File formats: CSV data, key=value config files, density files, reports."""

import numpy as np

from .histogram import HistogramDensity


class DataError(ValueError):
    """Malformed input data (CSV, spec, or density files)."""


def load_csv(path):
    """Read a rectangular numeric CSV; a non-numeric first line is a header."""
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            try:
                values = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:
                    continue
                raise DataError(
                    f"{path}: line {lineno}: non-numeric value"
                ) from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise DataError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows)


def write_csv(path, X):
    X = np.asarray(X, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        for row in X:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def parse_keyvalue(path):
    """Parse `key = value` lines; '#' starts a comment."""
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in entries:
                raise DataError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value
    return entries


def write_density(path, h):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# histogram density\n")
        fh.write(f"dims = {h.d}\n")
        fh.write(f"bins = {h.b}\n")
        weights = ",".join(repr(float(v)) for v in h.weights.ravel())
        fh.write(f"weights = {weights}\n")


def read_density(path):
    entries = parse_keyvalue(path)
    try:
        d = int(entries.pop("dims"))
        b = int(entries.pop("bins"))
        w = np.array([float(v) for v in entries.pop("weights").split(",")])
    except KeyError as exc:
        raise DataError(f"{path}: missing density key {exc}") from None
    if entries:
        raise DataError(f"{path}: unknown density keys {sorted(entries)}")
    if w.size != b**d:
        raise DataError(f"{path}: expected {b**d} weights, got {w.size}")
    return HistogramDensity(d, b, w.reshape((b,) * d))


def write_tsv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_cell(v) for v in row) + "\n")


def _cell(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)
