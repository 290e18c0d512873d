"""CSV reading and writing for traces, fits and spike trains.

Input traces are a single ``y`` column with a header, a headerless single
column, or any CSV with a ``y`` column among others (such as the output of
``simulate``). Floats are written with 17 significant digits so that every
value round-trips exactly.
"""
from __future__ import annotations

import csv
from typing import Optional

import numpy as np

from .metrics import SpikeTrain
from .model import FluorescenceTrace, L0SpikesError, SpikeFit


class CsvFormatError(L0SpikesError, ValueError):
    pass


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_table(path) -> tuple[Optional[list], list]:
    """Return ``(header or None, rows)``; a first row that parses as numbers is data."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvFormatError(f"{path}: no rows")
    first = [c.strip() for c in rows[0]]
    if all(_is_number(c) for c in first):
        return None, rows
    return first, rows[1:]


def _column(path, header, rows, names) -> Optional[np.ndarray]:
    if header is None:
        return None
    for name in names:
        if name in header:
            j = header.index(name)
            try:
                return np.array([float(r[j]) for r in rows])
            except (ValueError, IndexError) as exc:
                raise CsvFormatError(f"{path}: bad value in column {name!r}: {exc}") from None
    return None


def read_trace(path) -> FluorescenceTrace:
    header, rows = read_table(path)
    if header is None:
        if any(len(r) != 1 for r in rows):
            raise CsvFormatError(f"{path}: headerless input must have exactly one column")
        try:
            return FluorescenceTrace([float(r[0]) for r in rows])
        except ValueError as exc:
            raise CsvFormatError(f"{path}: {exc}") from None
    y = _column(path, header, rows, ("y",))
    if y is None:
        if len(header) == 1:
            y = _column(path, header, rows, header)
        else:
            raise CsvFormatError(f"{path}: no 'y' column in header {header}")
    return FluorescenceTrace(y)


def read_spikes(path, threshold: Optional[float] = None) -> tuple[SpikeTrain, Optional[np.ndarray]]:
    """Spike train and calcium (if present) from a fit, simulation or counts file.

    Fit files use their ``spike`` column (optionally thresholded on
    ``spike_magnitude``), simulation files their ``z_true`` counts, and a
    headerless single column is read as per-timestep counts.
    """
    header, rows = read_table(path)
    if header is None:
        counts = np.array([float(r[0]) for r in rows])
        return SpikeTrain.from_counts(counts.astype(np.int64)), None
    calcium = _column(path, header, rows, ("c_hat", "c_true"))
    spike = _column(path, header, rows, ("spike",))
    if spike is not None:
        keep = spike > 0
        if threshold is not None:
            mags = _column(path, header, rows, ("spike_magnitude",))
            if mags is None:
                raise CsvFormatError(f"{path}: thresholding needs a spike_magnitude column")
            keep &= mags >= threshold
        return SpikeTrain.from_counts(keep.astype(np.int64)), calcium
    counts = _column(path, header, rows, ("z_true", "counts", "z"))
    if counts is None:
        raise CsvFormatError(f"{path}: expected a spike, z_true or counts column")
    return SpikeTrain.from_counts(counts.astype(np.int64)), calcium


def write_fit(fh, trace: FluorescenceTrace, fit: SpikeFit) -> None:
    """Columns ``t, y, c_hat, spike, spike_magnitude`` and ``beta0`` when fitted."""
    w = csv.writer(fh, lineterminator="\n")
    cols = ["t", "y", "c_hat", "spike", "spike_magnitude"]
    if fit.intercepts is not None:
        cols.append("beta0")
    w.writerow(cols)
    mag = dict(zip(fit.spike_times, fit.spike_magnitudes))
    for t in range(1, trace.T + 1):
        row = [t, fmt(trace.values[t - 1]), fmt(fit.calcium[t - 1]), int(t in mag), fmt(mag.get(t, 0.0))]
        if fit.intercepts is not None:
            row.append(fmt(fit.intercepts[t - 1]))
        w.writerow(row)
