"""Plot-ready diagnostic tables: outlier maps, index-distance and distance-distance plots.

Every table is emitted as a CSV with the fixed header ``index,x_dist,y_dist,flag``
plus a JSON sidecar carrying the cutoffs and flag vocabulary, so external
plotting needs no knowledge of the estimators.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import LengthMismatchError

__all__ = [
    "OutlierMap",
    "DiagnosticTable",
    "classify_map_points",
    "index_distance_table",
    "dd_plot_table",
]

CSV_HEADER = ["index", "x_dist", "y_dist", "flag"]


def classify_map_points(x_large, y_large, y_only_label: str) -> tuple[str, ...]:
    """Four-way classification shared by all outlier maps.

    ``x_large`` marks points beyond the cutoff on the x axis (leverage),
    ``y_large`` beyond the cutoff on the y axis.  ``y_only_label`` names the
    y-only category: ``vertical_outlier`` for regression maps,
    ``orthogonal_outlier`` for the PCA map.
    """
    out = []
    for xl, yl in zip(np.asarray(x_large), np.asarray(y_large)):
        if xl and yl:
            out.append("bad_leverage")
        elif xl:
            out.append("good_leverage")
        elif yl:
            out.append(y_only_label)
        else:
            out.append("regular")
    return tuple(out)


@dataclass(frozen=True)
class OutlierMap:
    """Per-observation (x_dist, y_dist, flag) rows plus the two cutoffs.

    For regression-style maps ``y_dist`` keeps its sign and the cutoff is
    applied to its absolute value; distance-valued maps are nonnegative.
    """

    kind: str
    x_dist: np.ndarray
    y_dist: np.ndarray
    flags: tuple[str, ...]
    x_cutoff: float
    y_cutoff: float
    cutoff_prob: float

    def __post_init__(self):
        if not len(self.x_dist) == len(self.y_dist) == len(self.flags):
            raise LengthMismatchError("outlier map columns have unequal lengths")

    def table(self) -> "DiagnosticTable":
        return DiagnosticTable(
            kind=self.kind,
            x_dist=np.asarray(self.x_dist, dtype=float),
            y_dist=np.asarray(self.y_dist, dtype=float),
            flags=self.flags,
            x_cutoff=self.x_cutoff,
            y_cutoff=self.y_cutoff,
            cutoff_prob=self.cutoff_prob,
        )


@dataclass(frozen=True)
class DiagnosticTable:
    """Uniform emission container for every diagnostic plot."""

    kind: str
    x_dist: np.ndarray
    y_dist: np.ndarray
    flags: tuple[str, ...]
    x_cutoff: float | None
    y_cutoff: float | None
    cutoff_prob: float

    def __post_init__(self):
        if not len(self.x_dist) == len(self.y_dist) == len(self.flags):
            raise LengthMismatchError("table columns have unequal lengths")

    def write(self, directory, stem: str) -> tuple[Path, Path]:
        """Write ``<stem>.csv`` and ``<stem>.json`` and return their paths."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{stem}.csv"
        with open(csv_path, "w", newline="\n", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for i, (xv, yv, flag) in enumerate(
                zip(self.x_dist, self.y_dist, self.flags), start=1
            ):
                writer.writerow([i, repr(float(xv)), repr(float(yv)), flag])
        sidecar = {
            "kind": self.kind,
            "x_cutoff": _json_float(self.x_cutoff),
            "y_cutoff": _json_float(self.y_cutoff),
            "cutoff_prob": self.cutoff_prob,
            "flag_values": sorted(set(self.flags)),
        }
        json_path = directory / f"{stem}.json"
        with open(json_path, "w", newline="\n", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path


def _json_float(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return float(v)


def index_distance_table(distances, cutoff: float, cutoff_prob: float = 0.975):
    """Distance against observation index (input order preserved).

    The x column is the 1-based index, the y column the distance; rows beyond
    the cutoff are flagged ``outlier``.
    """
    d = np.asarray(distances, dtype=float).ravel()
    if (d < 0).any():
        raise ValueError("distances must be nonnegative")
    flags = tuple("outlier" if v > cutoff else "regular" for v in d)
    return DiagnosticTable(
        kind="index_distance",
        x_dist=np.arange(1, d.size + 1, dtype=float),
        y_dist=d,
        flags=flags,
        x_cutoff=None,
        y_cutoff=float(cutoff),
        cutoff_prob=cutoff_prob,
    )


def dd_plot_table(md, rd, p: int, cutoff_prob: float = 0.975):
    """Classical against robust distances with the shared chi-square cutoff.

    Quadrant flags: ``regular`` (neither large), ``masked`` (robust only —
    points the classical fit hid), ``swamped`` (classical only), ``outlier``
    (both large).
    """
    from .univariate import chi2_quantile

    md = np.asarray(md, dtype=float).ravel()
    rd = np.asarray(rd, dtype=float).ravel()
    if md.size != rd.size:
        raise LengthMismatchError(f"lengths differ: {md.size} vs {rd.size}")
    cutoff = float(np.sqrt(chi2_quantile(p, cutoff_prob)))
    flags = []
    for m, r in zip(md > cutoff, rd > cutoff):
        if m and r:
            flags.append("outlier")
        elif r:
            flags.append("masked")
        elif m:
            flags.append("swamped")
        else:
            flags.append("regular")
    return DiagnosticTable(
        kind="dd_plot",
        x_dist=md,
        y_dist=rd,
        flags=tuple(flags),
        x_cutoff=cutoff,
        y_cutoff=cutoff,
        cutoff_prob=cutoff_prob,
    )
