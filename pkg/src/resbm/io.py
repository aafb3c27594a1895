"""File formats: sample manifests, matrix files and fit artifacts.

Everything is text (JSON and CSV) so results diff cleanly and round-trip
exactly: floats are serialized with shortest-repr precision, which Python
reads back bit-for-bit.
"""

import json
import os
from typing import Optional, Sequence

import numpy as np

from .errors import IOFormatError, ValidationError
from .graphs import threshold_correlation
from .types import (
    BlockParams,
    HardAssignment,
    NetworkSample,
    ResbmFit,
    SoftAssignment,
    TransitionMatrix,
)

MANIFEST_VERSION = 1
FIT_VERSION = 1
MATRIX_FORMATS = ("dense-csv", "edge-list")


def write_matrix_csv(a: np.ndarray, path: str) -> None:
    a = np.asarray(a, dtype=float)
    with open(path, "w") as fh:
        for row in a:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_matrix_csv(path: str) -> np.ndarray:
    try:
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([float(x) for x in line.split(",")])
    except (OSError, ValueError) as exc:
        raise IOFormatError(f"cannot read matrix from {path}: {exc}") from exc
    mat = np.asarray(rows, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise IOFormatError(f"{path}: expected a square matrix, got shape {mat.shape}")
    return mat


def write_edge_list(a: np.ndarray, path: str) -> None:
    i, j = np.nonzero(np.triu(np.asarray(a), 1))
    with open(path, "w") as fh:
        for x, y in zip(i, j):
            fh.write(f"{x} {y}\n")


def read_edge_list(path: str, n: int) -> np.ndarray:
    a = np.zeros((n, n))
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise IOFormatError(f"{path}: expected 'i j' pairs, got {line!r}")
                i, j = int(parts[0]), int(parts[1])
                if not (0 <= i < n and 0 <= j < n):
                    raise IOFormatError(f"{path}: node index out of range in {line!r}")
                a[i, j] = a[j, i] = 1.0
    except OSError as exc:
        raise IOFormatError(f"cannot read edge list from {path}: {exc}") from exc
    except ValueError as exc:
        raise IOFormatError(f"{path}: malformed edge list: {exc}") from exc
    np.fill_diagonal(a, 0.0)
    return a


def _dump_json(payload: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IOFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IOFormatError(f"{path} is not valid JSON: {exc}") from exc


def write_sample(
    sample: NetworkSample,
    directory: str,
    fmt: str = "dense-csv",
    source: str = "binary",
    tau: Optional[float] = None,
    k_hint: Optional[int] = None,
) -> str:
    """Write member matrices plus a manifest; returns the manifest path."""
    if fmt not in MATRIX_FORMATS:
        raise IOFormatError(f"unknown matrix format {fmt!r}; expected one of {MATRIX_FORMATS}")
    os.makedirs(directory, exist_ok=True)
    members = []
    for m in range(sample.n_members):
        member_id = sample.member_ids[m] if sample.member_ids else f"member{m:04d}"
        ext = "csv" if fmt == "dense-csv" else "edges"
        fname = f"{member_id}.{ext}"
        fpath = os.path.join(directory, fname)
        if fmt == "dense-csv":
            write_matrix_csv(sample.member(m), fpath)
        else:
            write_edge_list(sample.member(m), fpath)
        members.append({"id": member_id, "path": fname, "format": fmt})
    manifest = {
        "version": MANIFEST_VERSION,
        "n": sample.n,
        "M": sample.n_members,
        "k_hint": k_hint,
        "node_labels": list(sample.node_labels) if sample.node_labels else None,
        "source": source,
        "tau": tau,
        "members": members,
    }
    path = os.path.join(directory, "manifest.json")
    _dump_json(manifest, path)
    return path


def read_sample(manifest_path: str) -> NetworkSample:
    """Load a sample described by a manifest.

    Dense CSVs hold either binary adjacencies (source "binary") or raw
    correlations thresholded at the manifest's tau (source "correlation");
    edge lists are always binary.
    """
    manifest = _load_json(manifest_path)
    for field in ("version", "n", "M", "source", "members"):
        if field not in manifest:
            raise IOFormatError(f"manifest is missing required field {field!r}")
    if manifest["version"] != MANIFEST_VERSION:
        raise IOFormatError(
            f"unsupported manifest version {manifest['version']} (expected {MANIFEST_VERSION})"
        )
    source = manifest["source"]
    if source not in ("binary", "correlation"):
        raise IOFormatError(f"unknown sample source {source!r}")
    n = int(manifest["n"])
    base = os.path.dirname(os.path.abspath(manifest_path))
    matrices = []
    ids = []
    for entry in manifest["members"]:
        fmt = entry.get("format")
        path = os.path.join(base, entry["path"])
        if fmt == "dense-csv":
            mat = read_matrix_csv(path)
        elif fmt == "edge-list":
            mat = read_edge_list(path, n)
        else:
            raise IOFormatError(f"unknown matrix format tag {fmt!r} for {entry.get('id')}")
        if mat.shape != (n, n):
            raise ValidationError(
                f"member {entry.get('id')}: expected shape ({n}, {n}), got {mat.shape}"
            )
        if source == "correlation":
            if manifest.get("tau") is None:
                raise IOFormatError("correlation source requires a tau threshold in the manifest")
            mat = threshold_correlation(
                mat, float(manifest["tau"]), absolute=bool(manifest.get("absolute", False))
            )
        matrices.append(mat)
        ids.append(entry.get("id", f"member{len(ids):04d}"))
    if len(matrices) != int(manifest["M"]):
        raise ValidationError(
            f"manifest promises {manifest['M']} members but lists {len(matrices)}"
        )
    labels = manifest.get("node_labels")
    return NetworkSample(
        np.stack(matrices), node_labels=tuple(labels) if labels else None, member_ids=tuple(ids)
    )


def _matrix_list(a: np.ndarray):
    return [[float(x) for x in row] for row in np.asarray(a)]


def write_fit(fit: ResbmFit, path: str) -> None:
    """Serialize every fit field at full precision."""
    payload = {
        "version": FIT_VERSION,
        "kind": "resbm-fit",
        "n": fit.n,
        "k": fit.k,
        "M": fit.n_members,
        "z_bar": [int(x) for x in fit.z_bar.labels],
        "z_members": [[int(x) for x in z.labels] for z in fit.z_members],
        "t": _matrix_list(fit.t.matrix),
        "soft_z_bar": _matrix_list(fit.soft_z_bar.matrix),
        "soft_members": [_matrix_list(s.matrix) for s in fit.soft_members],
        "blocks": None
        if fit.blocks is None
        else {
            "pi": [_matrix_list(fit.blocks.pi[m]) for m in range(fit.blocks.n_members)],
            "alpha": [float(x) for x in fit.blocks.alpha],
        },
        "objective_trace": [float(x) for x in fit.objective_trace],
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
    }
    _dump_json(payload, path)


def read_fit(path: str) -> ResbmFit:
    payload = _load_json(path)
    if payload.get("kind") != "resbm-fit":
        raise IOFormatError(f"{path} is not a fit artifact")
    if payload.get("version") != FIT_VERSION:
        raise IOFormatError(
            f"unsupported fit version {payload.get('version')} (expected {FIT_VERSION})"
        )
    required = (
        "n",
        "k",
        "M",
        "z_bar",
        "z_members",
        "t",
        "soft_z_bar",
        "soft_members",
        "objective_trace",
        "converged",
        "iterations",
    )
    for field in required:
        if field not in payload:
            raise IOFormatError(f"fit artifact is missing required field {field!r}")
    k = int(payload["k"])
    blocks = None
    if payload.get("blocks") is not None:
        blocks = BlockParams(
            np.asarray(payload["blocks"]["pi"], dtype=float),
            np.asarray(payload["blocks"]["alpha"], dtype=float),
        )
    return ResbmFit(
        z_bar=HardAssignment.from_labels(payload["z_bar"], k),
        t=TransitionMatrix(np.asarray(payload["t"], dtype=float)),
        z_members=tuple(HardAssignment.from_labels(lab, k) for lab in payload["z_members"]),
        soft_z_bar=SoftAssignment(np.asarray(payload["soft_z_bar"], dtype=float)),
        soft_members=tuple(
            SoftAssignment(np.asarray(s, dtype=float)) for s in payload["soft_members"]
        ),
        blocks=blocks,
        objective_trace=tuple(payload["objective_trace"]),
        converged=bool(payload["converged"]),
        iterations=int(payload["iterations"]),
    )


def write_csv(path: str, header: Sequence[str], rows) -> None:
    """Plain CSV writer with shortest-repr floats for reproducible bytes."""

    def cell(x):
        if isinstance(x, float):
            return repr(x)
        return str(x)

    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell(x) for x in row) + "\n")
