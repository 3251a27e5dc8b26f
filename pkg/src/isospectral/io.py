"""Matrix JSON, trajectory CSV/JSON, and atomic file output."""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .errors import ValidationError


def _num(x: float) -> float:
    # round-trip through 17 significant digits keeps output byte-stable
    return float(f"{float(x):.17g}")


def matrix_to_json(m) -> dict:
    a = np.atleast_2d(np.asarray(m, complex))
    return {
        "rows": a.shape[0],
        "cols": a.shape[1],
        "data": [[_num(z.real), _num(z.imag)] for z in a.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"matrix JSON needs rows, cols and data: {exc}") from None
    if not isinstance(data, list) or len(data) != rows * cols:
        raise ValidationError(f"matrix JSON data must be a list of {rows * cols} [re, im] pairs")
    vals = np.array([complex(float(re_), float(im)) for re_, im in data])
    return vals.reshape(rows, cols)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def save_matrix(path, m) -> None:
    atomic_write(path, dumps(matrix_to_json(m)) + "\n")


# -- trajectories --------------------------------------------------------------


def trajectory_to_csv(traj: Trajectory) -> str:
    _, r, c = traj.frames.shape
    header = ["t"]
    for i in range(r):
        for j in range(c):
            header += [f"re_{i}_{j}", f"im_{i}_{j}"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for t, f in zip(traj.times, traj.frames):
        row = [repr(_num(t))]
        for z in f.ravel():
            row += [repr(_num(z.real)), repr(_num(z.imag))]
        w.writerow(row)
    return buf.getvalue()


_COL = re.compile(r"(re|im)_(\d+)_(\d+)$")


def trajectory_from_csv(text: str, kind: str = "density") -> Trajectory:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "t":
        raise ValidationError("trajectory CSV must start with a 't' column")
    header = rows[0][1:]
    idx = [_COL.match(h) for h in header]
    if not all(idx):
        raise ValidationError("unrecognised trajectory CSV header")
    r = max(int(m.group(2)) for m in idx) + 1
    c = max(int(m.group(3)) for m in idx) + 1
    body = np.array([[float(x) for x in row] for row in rows[1:] if row])
    times = body[:, 0]
    frames = np.zeros((len(times), r, c), complex)
    for col, m in enumerate(idx, start=1):
        part = body[:, col] if m.group(1) == "re" else 1j * body[:, col]
        frames[:, int(m.group(2)), int(m.group(3))] += part
    return Trajectory(times, frames, kind)


def trajectory_to_json(traj: Trajectory) -> dict:
    _, r, c = traj.frames.shape
    return {
        "kind": traj.kind,
        "rows": r,
        "cols": c,
        "times": [_num(t) for t in traj.times],
        "frames": [matrix_to_json(f)["data"] for f in traj.frames],
    }


def trajectory_from_json(obj: dict) -> Trajectory:
    r, c = int(obj["rows"]), int(obj["cols"])
    frames = np.array(
        [matrix_from_json({"rows": r, "cols": c, "data": d}) for d in obj["frames"]]
    )
    return Trajectory(np.asarray(obj["times"], float), frames, obj.get("kind", "density"))


def load_trajectory(path, kind: str = "density") -> Trajectory:
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        obj = json.loads(text)
        obj.setdefault("kind", kind)
        return trajectory_from_json(obj)
    return trajectory_from_csv(text, kind)


def save_trajectory(path, traj: Trajectory) -> None:
    if str(path).endswith(".json"):
        atomic_write(path, dumps(trajectory_to_json(traj)) + "\n")
    else:
        atomic_write(path, trajectory_to_csv(traj))
