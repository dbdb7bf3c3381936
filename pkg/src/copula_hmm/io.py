"""File formats: trajectory CSV, model JSON, run manifests, lagged-difference preprocessing."""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np

from .copulas import CopulaSpec
from .margins import MarginalSpec
from .model import CopulaHmm, StateSpec, Trajectory

FORMAT_VERSION = 1


class DataFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Header ``t,y1..yd[,state]``; t and states are 1-indexed."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["t"] + [f"y{h + 1}" for h in range(traj.d)]
        if traj.labels is not None:
            header.append("state")
        w.writerow(header)
        for t in range(traj.T):
            row = [str(t + 1)] + [_fmt(v) for v in traj.observations[t]]
            if traj.labels is not None:
                row.append(str(int(traj.labels[t])))
            w.writerow(row)


def read_trajectory_csv(path) -> Trajectory:
    """Every column other than ``t`` and ``state`` is an observation column, in file order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError("empty file", 1) from None
        if len(set(header)) != len(header):
            raise DataFormatError("duplicate column names", 1)
        obs_cols = [i for i, h in enumerate(header) if h not in ("t", "state")]
        state_col = header.index("state") if "state" in header else None
        if not obs_cols:
            raise DataFormatError("no observation columns", 1)
        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, found {len(row)}", line_no)
            try:
                values = [float(row[i]) for i in obs_cols]
            except ValueError:
                raise DataFormatError("non-numeric observation", line_no) from None
            if not all(math.isfinite(v) for v in values):
                raise DataFormatError("non-finite observation", line_no)
            rows.append(values)
            if state_col is not None:
                try:
                    labels.append(int(row[state_col]))
                except ValueError:
                    raise DataFormatError("state must be an integer", line_no) from None
    if not rows:
        raise DataFormatError("no data rows")
    return Trajectory(np.array(rows), np.array(labels) if state_col is not None else None)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

def model_to_dict(model: CopulaHmm) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "K": model.K,
        "d": model.d,
        "pi": [float(x) for x in model.pi],
        "gamma": [[float(x) for x in row] for row in model.gamma],
        "states": [
            {
                "margins": [{"family": m.family.value, "params": list(m.params)} for m in s.margins],
                "copula": {"family": s.copula.family.value, "theta": s.copula.theta},
            }
            for s in model.states
        ],
    }


def model_from_dict(doc: dict) -> CopulaHmm:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"unsupported model format_version {version!r}")
    states = [
        StateSpec([MarginalSpec(m["family"], tuple(m["params"])) for m in s["margins"]],
                  CopulaSpec(s["copula"]["family"], s["copula"].get("theta", 0.0)))
        for s in doc["states"]
    ]
    model = CopulaHmm(doc["pi"], doc["gamma"], states)
    if model.K != doc.get("K", model.K) or model.d != doc.get("d", model.d):
        raise DataFormatError("K/d fields disagree with the state list")
    return model


def save_model(path, model: CopulaHmm) -> None:
    # json writes floats with repr, the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path) -> CopulaHmm:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# tables and manifests
# ---------------------------------------------------------------------------

def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def package_versions() -> dict:
    out = {"python": platform.python_version()}
    for name in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = None
    return out


def write_manifest(path, command: str, config: dict, seed, wall_time: float, outputs=()) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "wall_time_seconds": wall_time,
        "outputs": [str(p) for p in outputs],
        "versions": package_versions(),
    }
    Path(path).write_text(json.dumps(doc, indent=2, default=str) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaggedDifferences:
    trajectory: Trajectory
    bin_starts: np.ndarray  # start time of the later bin in each difference
    filled: np.ndarray  # True where the later bin was empty and forward-filled


def preprocess_lagged_differences(traj: Trajectory, window_minutes: float, timestamps) -> LaggedDifferences:
    """Average over left-closed windows ``[t0 + i w, t0 + (i+1) w)``, then first-difference.

    Empty windows repeat the previous window's mean (and label) and are
    flagged. Labels are the majority label in each window (ties go to the
    smaller label) and are aligned with the later window of each difference.
    ``timestamps`` are minutes as numbers, or numpy datetime64 values.
    """
    ts = np.asarray(timestamps)
    if np.issubdtype(ts.dtype, np.datetime64):
        ts = (ts - ts[0]) / np.timedelta64(1, "m")
    ts = ts.astype(float)
    if ts.shape[0] != traj.T:
        raise ValueError("timestamps must have one entry per observation")
    if np.any(np.diff(ts) < 0):
        raise ValueError("timestamps must be non-decreasing")
    if not window_minutes > 0:
        raise ValueError("window must be positive")
    idx = np.floor((ts - ts[0]) / window_minutes).astype(np.int64)
    n_bins = int(idx[-1]) + 1
    if n_bins < 2:
        raise ValueError("need at least two windows to take differences")
    d = traj.d
    sums = np.zeros((n_bins, d))
    counts = np.bincount(idx, minlength=n_bins)
    for h in range(d):
        sums[:, h] = np.bincount(idx, weights=traj.observations[:, h], minlength=n_bins)
    means = np.empty((n_bins, d))
    empty = counts == 0
    labels = None
    if traj.labels is not None:
        labels = np.zeros(n_bins, dtype=np.int64)
        kmax = int(traj.labels.max())
    for b in range(n_bins):
        if empty[b]:
            means[b] = means[b - 1]  # bin 0 always holds the first sample
            if labels is not None:
                labels[b] = labels[b - 1]
        else:
            means[b] = sums[b] / counts[b]
            if labels is not None:
                votes = np.bincount(traj.labels[idx == b], minlength=kmax + 1)
                labels[b] = int(np.argmax(votes))
    diffs = np.diff(means, axis=0)
    out = Trajectory(diffs, labels[1:] if labels is not None else None)
    starts = ts[0] + window_minutes * np.arange(1, n_bins)
    return LaggedDifferences(out, starts, empty[1:])
