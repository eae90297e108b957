"""Stage data files and report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from . import estimators as E
from .model import DesignConfig, RBSummary, TwoStageDataset

_SUMMARY_FIELDS = ("q", "xbar_q", "xbar_other", "ybar", "z", "s_raw_sq", "s_tilde_sq",
                   "c", "v", "v_star", "s_pooled_sq", "d")


class ParseError(ValueError):
    def __init__(self, path, message, line=None):
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


def _rows(path):
    text = Path(path).read_text(encoding="utf-8-sig")
    reader = csv.reader(io.StringIO(text, newline=""))
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        yield lineno, [cell.strip() for cell in row]


def _number(path, lineno, text):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, f"not a number: {text!r}", lineno) from None
    if not math.isfinite(value):
        raise ParseError(path, f"value is not finite: {text!r}", lineno)
    return value


def read_stage_one(path) -> tuple[list[float], list[float]]:
    """Read an ``arm,value`` file; both arms must have the same count."""
    arms = {1: [], 2: []}
    seen_header = False
    for lineno, row in _rows(path):
        if not seen_header:
            if [c.lower() for c in row] != ["arm", "value"]:
                raise ParseError(path, f"expected header 'arm,value', got {','.join(row)!r}", lineno)
            seen_header = True
            continue
        if len(row) != 2:
            raise ParseError(path, f"expected 2 columns, got {len(row)}: {','.join(row)!r}", lineno)
        if row[0] not in ("1", "2"):
            raise ParseError(path, f"arm must be 1 or 2, got {row[0]!r} in row {','.join(row)!r}", lineno)
        arms[int(row[0])].append(_number(path, lineno, row[1]))
    if not seen_header:
        raise ParseError(path, "file is empty")
    if not arms[1] or len(arms[1]) != len(arms[2]):
        raise ParseError(path, f"arms need equal, non-zero row counts (arm 1: {len(arms[1])}, arm 2: {len(arms[2])})")
    return arms[1], arms[2]


def read_stage_two(path) -> list[float]:
    values = []
    seen_header = False
    for lineno, row in _rows(path):
        if not seen_header:
            if [c.lower() for c in row] != ["value"]:
                raise ParseError(path, f"expected header 'value', got {','.join(row)!r}", lineno)
            seen_header = True
            continue
        if len(row) != 1:
            raise ParseError(path, f"expected 1 column, got {len(row)}", lineno)
        values.append(_number(path, lineno, row[0]))
    if not values:
        raise ParseError(path, "stage-2 file has no observations")
    return values


def load_dataset(stage1_path, stage2_path) -> tuple[TwoStageDataset, DesignConfig]:
    arm1, arm2 = read_stage_one(stage1_path)
    stage2 = read_stage_two(stage2_path)
    cfg = DesignConfig(len(arm1), len(stage2))
    return TwoStageDataset.from_stage_data(arm1, arm2, stage2), cfg


# -- reports ------------------------------------------------------------------


def build_report(s: RBSummary, cfg: DesignConfig, estimators, xbar1: float, xbar2: float,
                 provenance: dict | None = None) -> dict:
    report = {
        "design": {"n1": cfg.n1, "n2": cfg.n2},
        "selection": {"q": s.q, "xbar1": xbar1, "xbar2": xbar2},
        "summaries": s.as_dict(),
        "estimates": E.evaluate_all(estimators, s, cfg),
    }
    if provenance is not None:
        report["provenance"] = provenance
    return report


def summary_from_report(report: dict) -> tuple[RBSummary, DesignConfig]:
    cfg = DesignConfig(int(report["design"]["n1"]), int(report["design"]["n2"]))
    fields = {k: report["summaries"][k] for k in _SUMMARY_FIELDS}
    fields["q"] = int(fields["q"])
    return RBSummary(**fields, n1=cfg.n1, n2=cfg.n2), cfg


def format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    close = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(obj, str) or obj is None:
        return json.dumps(obj)
    return format_number(obj)


def loads(text: str) -> dict:
    return json.loads(text)


def flatten(obj, prefix="") -> list[tuple[str, object]]:
    out = []
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(flatten(v, key + "."))
        else:
            out.append((key, v))
    return out


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["field", "value"])
    for key, value in flatten(report):
        writer.writerow([key, format_number(value)])
    return buf.getvalue()


SWEEP_HEADER = ("axis", "estimator", "scaled_mse", "mse_se", "scaled_bias", "bias_se")


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for axis, label, *values in rows:
        writer.writerow([format_number(axis), label, *(format_number(v) for v in values)])
    return buf.getvalue()
