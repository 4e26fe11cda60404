"""Readers and writers for states, measurements, recoveries and trial records.

State files are sparse JSON, ``{"basis": descriptor, "entries": [{"index", "value"}]}``
with 1-based basis indices (basis element ``i`` is array entry ``i - 1``).
Measurement files are CSV with one column per detected waveguide (1-based)
followed by ``value``.
"""
import csv
import io as _io
import json
import math

import numpy as np

from .metrics import TrialRecord
from .sensing import CoincidenceIndex
from .simulate import MeasurementVector


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _dump(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        return text
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def state_to_json(p, descriptor):
    p = np.asarray(p, dtype=float)
    nz = np.flatnonzero(p)
    return {
        "basis": descriptor,
        "entries": [{"index": int(i) + 1, "value": float(p[i])} for i in nz],
    }


def write_state(path, p, descriptor):
    return _dump(state_to_json(p, descriptor), path)


def read_state(path, n_basis=None):
    """Load a sparse state file; returns ``(dense_vector, descriptor)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        desc = obj["basis"]
        entries = obj["entries"]
        n = n_basis if n_basis is not None else math.comb(
            int(desc["n_waveguides"]) + int(desc["n_photons"]) - 1, int(desc["n_photons"]))
        p = np.zeros(n)
        for e in entries:
            i = int(e["index"])
            if not 1 <= i <= n:
                raise FormatError(f"state index {i} outside [1, {n}]")
            p[i - 1] += float(e["value"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed state file {path}: {exc}") from None
    if p.min(initial=0.0) < 0:
        raise FormatError("state has negative entries")
    return p, desc


def measurement_header(order):
    if order == 2:
        return ["q", "r", "value"]
    return [f"q{k}" for k in range(1, order + 1)] + ["value"]


def write_measurements(path, values, n_waveguides, order):
    cidx = CoincidenceIndex(n_waveguides, order)
    values = np.asarray(getattr(values, "values", values), dtype=float)
    if values.size != len(cidx):
        raise ValueError(f"{values.size} values for {len(cidx)} coincidence rows")
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(measurement_header(order))
    for lab, v in zip(cidx.labels(), values):
        w.writerow([*lab, repr(float(v))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_measurements(path, n_waveguides, order):
    """Parse a measurement CSV into a vector in canonical row order."""
    cidx = CoincidenceIndex(n_waveguides, order)
    out = np.full(len(cidx), np.nan)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [h.strip() for h in rows[0]] != measurement_header(order):
            raise FormatError(f"expected header {','.join(measurement_header(order))}")
        for row in rows[1:]:
            if not row:
                continue
            if len(row) != order + 1:
                raise FormatError(f"bad row {row}")
            wg = [int(x) for x in row[:order]]
            if any(not 1 <= q <= n_waveguides for q in wg):
                raise FormatError(f"waveguide out of range in row {row}")
            out[cidx.index_of(wg)] = float(row[order])
    except (ValueError, KeyError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed measurement file {path}: {exc}") from None
    if np.isnan(out).any():
        raise FormatError(f"{int(np.isnan(out).sum())} coincidence rows missing")
    return MeasurementVector(out)


def trial_csv(records, header=True):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(TrialRecord.CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()
