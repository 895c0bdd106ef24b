"""CSV and manifest output.

Floats are written with 17 significant digits so doubles round-trip exactly;
complex values are split into ``_re``/``_im`` column pairs.  Every file is
written to a temporary name in the target directory and renamed into place.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MANIFEST_NAME = "manifest.json"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def expand_complex(columns: dict) -> dict:
    """Split complex columns into name_re / name_im."""
    out = {}
    for name, col in columns.items():
        arr = np.asarray(col)
        if np.iscomplexobj(arr):
            out[f"{name}_re"] = arr.real
            out[f"{name}_im"] = arr.imag
        else:
            out[name] = arr
    return out


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns: dict) -> str:
    cols = expand_complex(columns)
    lengths = {len(np.atleast_1d(c)) for c in cols.values()}
    if len(lengths) > 1:
        raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols.keys())
    arrays = [np.atleast_1d(c) for c in cols.values()]
    for row in zip(*arrays):
        writer.writerow(format_value(v) for v in row)
    return buf.getvalue()


def write_csv(path: Path, columns: dict) -> Path:
    atomic_write_text(Path(path), csv_text(columns))
    return Path(path)


def read_csv(path: Path) -> dict[str, np.ndarray]:
    """Read a CSV written by :func:`write_csv` back into float columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_manifest(out_dir: Path, files: Sequence[Path], **fields) -> Path:
    """Manifest listing every output file with its checksum plus run metadata."""
    out_dir = Path(out_dir)
    entries = [{"name": Path(f).name, "sha256": sha256(f)} for f in files]
    doc = dict(_jsonable(fields), files=entries)
    path = out_dir / MANIFEST_NAME
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")
    return path


def read_manifest(out_dir: Path) -> dict:
    with open(Path(out_dir) / MANIFEST_NAME) as fh:
        return json.load(fh)


def orphan_files(out_dir: Path, manifest: dict | None = None) -> list[str]:
    """Files in ``out_dir`` that the manifest does not list."""
    manifest = manifest if manifest is not None else read_manifest(out_dir)
    listed = {e["name"] for e in manifest["files"]} | {MANIFEST_NAME}
    return sorted(p.name for p in Path(out_dir).iterdir() if p.is_file() and p.name not in listed)


def stack_rows(rows: Iterable[dict]) -> dict:
    """List of row dicts -> column dict (keys taken from the first row)."""
    rows = list(rows)
    if not rows:
        return {}
    return {k: np.array([r[k] for r in rows]) for k in rows[0]}
