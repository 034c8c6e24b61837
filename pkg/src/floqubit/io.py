"""Plain-text outputs: CSV with a one-line metadata comment, JSON, and a run manifest.

Every file carries the tool version, the config hash and the resolved config so a
result can be traced back to the run that produced it.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__


def _default(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, rows, config: dict) -> Path:
    path = Path(path)
    meta = {"tool_version": __version__, "config_hash": config_hash(config), "config": config}
    with path.open("w", newline="") as fh:
        fh.write("# " + canonical_json(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Inverse of ``write_csv``: (metadata, column names, float array)."""
    with Path(path).open() as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing metadata comment")
        meta = json.loads(first[2:])
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    return meta, header, data


def csv_body(path) -> str:
    """File contents below the metadata comment (what reproducibility is judged on)."""
    text = Path(path).read_text()
    return text.split("\n", 1)[1]


def write_json(path, result, config: dict) -> Path:
    path = Path(path)
    doc = {
        "tool_version": __version__,
        "config_hash": config_hash(config),
        "config": config,
        "result": result,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_default) + "\n")
    return path


@dataclasses.dataclass
class Manifest:
    out_dir: Path
    config: dict
    files: list[str] = dataclasses.field(default_factory=list)

    def add(self, path) -> Path:
        path = Path(path)
        self.files.append(path.name)
        return path

    def write(self) -> Path:
        path = self.out_dir / "manifest.json"
        doc = {
            "tool_version": __version__,
            "config_hash": config_hash(self.config),
            "experiment": self.config.get("experiment"),
            "files": sorted(self.files),
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path
