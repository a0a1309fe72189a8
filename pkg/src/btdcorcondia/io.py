"""Text formats: coordinate tensor files, model files and CSV reports.

Tensor file::

    dims I J K
    i j k value        # 1-based, one entry per line, missing entries are zero

Model file: a JSON document tagged ``"format": "btdmodel-v1"`` holding the
dims, the block structure, each block's ``A``, ``B`` (row-major nested
lists) and ``c``, and the fit metadata.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .datagen import SweepResult
from .ll1 import BlockStructure, FitInfo, Ll1Model
from .search import ConsistencyReport
from .tensor import as_tensor

MODEL_FORMAT = "btdmodel-v1"
REPORT_HEADER = ["structure", "mean_pct", "sd_pct", "mean_rel_err", "repeats", "failures"]
SWEEP_HEADER = ["snr_db", "consistency_pct", "relative_error"]


class FormatError(ValueError):
    pass


def _num(x: float) -> str:
    return format(float(x), ".17g")


def dumps_tensor(t: np.ndarray) -> str:
    t = as_tensor(t)
    I, J, K = t.shape
    lines = [f"dims {I} {J} {K}"]
    for k in range(K):
        for j in range(J):
            col = t[:, j, k]
            lines.extend(f"{i + 1} {j + 1} {k + 1} {_num(v)}" for i, v in enumerate(col))
    return "\n".join(lines) + "\n"


def loads_tensor(text: str) -> np.ndarray:
    rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [(n, ln) for n, ln in enumerate(rows, 1) if ln]
    if not rows:
        raise FormatError("empty tensor file")
    n0, head = rows[0]
    parts = head.split()
    if len(parts) != 4 or parts[0] != "dims":
        raise FormatError(f"line {n0}: expected 'dims I J K', got {head!r}")
    try:
        dims = tuple(int(p) for p in parts[1:])
    except ValueError as exc:
        raise FormatError(f"line {n0}: bad dims {head!r}") from exc
    if min(dims) < 1:
        raise FormatError(f"line {n0}: dims must be positive")
    out = np.zeros(dims)
    seen = np.zeros(dims, dtype=bool)
    for n, ln in rows[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise FormatError(f"line {n}: expected 'i j k value', got {ln!r}")
        try:
            i, j, k = (int(p) - 1 for p in parts[:3])
            v = float(parts[3])
        except ValueError as exc:
            raise FormatError(f"line {n}: cannot parse {ln!r}") from exc
        if not (0 <= i < dims[0] and 0 <= j < dims[1] and 0 <= k < dims[2]):
            raise FormatError(f"line {n}: index ({i + 1}, {j + 1}, {k + 1}) outside dims {dims}")
        if seen[i, j, k]:
            raise FormatError(f"line {n}: duplicate entry ({i + 1}, {j + 1}, {k + 1})")
        if not math.isfinite(v):
            raise FormatError(f"line {n}: non-finite value")
        seen[i, j, k] = True
        out[i, j, k] = v
    return out


def save_tensor(t: np.ndarray, path) -> None:
    Path(path).write_text(dumps_tensor(t))


def load_tensor(path) -> np.ndarray:
    return loads_tensor(Path(path).read_text())


def model_to_dict(model: Ll1Model) -> dict:
    return {
        "format": MODEL_FORMAT,
        "dims": list(model.dims),
        "structure": list(model.structure.block_ranks),
        "blocks": [
            {"A": a.tolist(), "B": b.tolist(), "c": c.tolist()} for a, b, c in model.blocks
        ],
        "fit": asdict(model.fit),
    }


def model_from_dict(doc: dict) -> Ll1Model:
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"expected format {MODEL_FORMAT!r}, got {doc.get('format')!r}")
    try:
        structure = BlockStructure(tuple(doc["structure"]))
        blocks = [
            (np.array(b["A"], dtype=float).reshape(-1, L),
             np.array(b["B"], dtype=float).reshape(-1, L),
             np.array(b["c"], dtype=float))
            for b, L in zip(doc["blocks"], structure.block_ranks, strict=True)
        ]
        fit = FitInfo(**doc.get("fit", {}))
        model = Ll1Model.from_blocks(blocks, fit)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model file: {exc}") from exc
    if model.structure != structure or list(model.dims) != list(doc["dims"]):
        raise FormatError("model blocks disagree with the declared dims or structure")
    return model


def dumps_model(model: Ll1Model) -> str:
    # json writes floats with repr(), the shortest string that round-trips exactly
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def loads_model(text: str) -> Ll1Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def save_model(model: Ll1Model, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path) -> Ll1Model:
    return loads_model(Path(path).read_text())


def _fmt(x, spec: str) -> str:
    return "" if x is None else format(x, spec)


def report_to_csv(report: ConsistencyReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for row in report.rows:
        w.writerow([
            str(row.structure),
            _fmt(row.mean_pct, ".2f"),
            _fmt(row.sd_pct, ".2f"),
            _fmt(row.mean_relative_error, ".6e"),
            row.repeats,
            row.failures,
        ])
    return buf.getvalue()


def report_to_json(report: ConsistencyReport) -> str:
    doc = {
        "rows": [
            {
                "structure": list(r.structure.block_ranks),
                "mean_pct": r.mean_pct,
                "sd_pct": r.sd_pct,
                "mean_rel_err": r.mean_relative_error,
                "repeats": r.repeats,
                "failures": r.failures,
                "scores": list(r.scores),
            }
            for r in report.rows
        ],
        "skipped": [{"structure": list(s.block_ranks), "reason": why} for s, why in report.skipped],
    }
    return json.dumps(doc, indent=1) + "\n"


def sweep_to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in result.rows:
        w.writerow([_num(r.snr_db), _num(r.consistency_pct), _num(r.relative_error)])
    return buf.getvalue()
