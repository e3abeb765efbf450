"""Persistent file formats between pipeline stages.

Feature matrix (binary, magic ``AGFV1``): little-endian u32 row count and
dimension count, then rows*dims float64 values in row-major order, then one
length-prefixed (u32) UTF-8 id string per row.

Model file (binary, magic ``AGMD1``): length-prefixed feature layout string,
algorithm tag, kernel kind, then the kernel/centering/bias scalars, the
coefficient vector and the stored vectors in the same rows/dims/data block
layout as the feature matrix.

Text interfaces: the dataset manifest is CSV with header
``image_path,landmarks_path,age,person_id`` (paths resolved relative to the
manifest's directory); predictions are CSV ``id,y_true,y_pred``; curves are
CSV ``level,cs_percent``.

All writers go through a temp file plus atomic rename so a failed run never
leaves partial output behind.
"""

from __future__ import annotations

import csv
import io
import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .evaluation import CsCurve, LabeledPrediction
from .kernels import KernelSpec
from .krr import KrrModel
from .svr import SvrModel

FEATURES_MAGIC = b"AGFV1"
MODEL_MAGIC = b"AGMD1"


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


class _Reader:
    def __init__(self, data: bytes, what: str):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataError(f"{self.what}: truncated file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        n = self.u32()
        return self.take(n).decode("utf-8")

    def matrix(self) -> np.ndarray:
        rows = self.u32()
        dims = self.u32()
        raw = self.take(rows * dims * 8)
        return np.frombuffer(raw, dtype="<f8").reshape(rows, dims).copy()

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DataError(f"{self.what}: trailing bytes after payload")


def _wstr(buf: io.BytesIO, s: str) -> None:
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def _wmatrix(buf: io.BytesIO, m: np.ndarray) -> None:
    m = np.ascontiguousarray(m, dtype="<f8")
    buf.write(struct.pack("<II", m.shape[0], m.shape[1]))
    buf.write(m.tobytes())


def encode_feature_matrix(ids: list[str], x: np.ndarray) -> bytes:
    x = np.ascontiguousarray(x, dtype="<f8")
    if x.ndim != 2 or x.shape[0] != len(ids):
        raise ValueError("feature matrix and id list disagree")
    buf = io.BytesIO()
    buf.write(FEATURES_MAGIC)
    buf.write(struct.pack("<II", x.shape[0], x.shape[1]))
    buf.write(x.tobytes())
    for id_ in ids:
        _wstr(buf, id_)
    return buf.getvalue()


def write_feature_matrix(path, ids: list[str], x: np.ndarray) -> None:
    atomic_write_bytes(path, encode_feature_matrix(ids, x))


def read_feature_matrix(path) -> tuple[list[str], np.ndarray]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read features {path}: {exc}") from exc
    r = _Reader(data, str(path))
    if r.take(5) != FEATURES_MAGIC:
        raise DataError(f"{path}: not a feature matrix file (bad magic)")
    rows = r.u32()
    dims = r.u32()
    raw = r.take(rows * dims * 8)
    x = np.frombuffer(raw, dtype="<f8").reshape(rows, dims).copy()
    ids = [r.string() for _ in range(rows)]
    r.done()
    return ids, x


def encode_model(model: KrrModel | SvrModel, layout: str) -> bytes:
    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    _wstr(buf, layout)
    if isinstance(model, KrrModel):
        _wstr(buf, "krr")
        _wstr(buf, model.kernel.kind)
        buf.write(struct.pack("<d", model.kernel.gamma))
        buf.write(struct.pack("<dd", model.lam, model.y_mean))
        coeffs = np.ascontiguousarray(model.alpha, dtype="<f8")
        buf.write(struct.pack("<I", coeffs.shape[0]))
        buf.write(coeffs.tobytes())
        _wmatrix(buf, model.train_x)
    elif isinstance(model, SvrModel):
        _wstr(buf, "svr")
        _wstr(buf, model.kernel.kind)
        buf.write(struct.pack("<d", model.kernel.gamma))
        buf.write(struct.pack("<ddd", model.c, model.epsilon, model.b))
        coeffs = np.ascontiguousarray(model.beta, dtype="<f8")
        buf.write(struct.pack("<I", coeffs.shape[0]))
        buf.write(coeffs.tobytes())
        _wmatrix(buf, model.sv_x)
    else:
        raise ValueError(f"cannot serialize model of type {type(model).__name__}")
    return buf.getvalue()


def write_model(path, model, layout: str) -> None:
    atomic_write_bytes(path, encode_model(model, layout))


def read_model(path) -> tuple[KrrModel | SvrModel, str]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    r = _Reader(data, str(path))
    if r.take(5) != MODEL_MAGIC:
        raise DataError(f"{path}: not a model file (bad magic)")
    layout = r.string()
    algo = r.string()
    kind = r.string()
    gamma = r.f64()
    try:
        kernel = KernelSpec(gamma=gamma, kind=kind)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if algo == "krr":
        lam = r.f64()
        y_mean = r.f64()
        ncoef = r.u32()
        alpha = np.frombuffer(r.take(ncoef * 8), dtype="<f8").copy()
        train_x = r.matrix()
        r.done()
        if train_x.shape[0] != ncoef:
            raise DataError(f"{path}: coefficient/vector count mismatch")
        return KrrModel(kernel, lam, train_x, alpha, y_mean), layout
    if algo == "svr":
        c = r.f64()
        epsilon = r.f64()
        b = r.f64()
        ncoef = r.u32()
        beta = np.frombuffer(r.take(ncoef * 8), dtype="<f8").copy()
        sv_x = r.matrix()
        r.done()
        if sv_x.shape[0] != ncoef:
            raise DataError(f"{path}: coefficient/vector count mismatch")
        return SvrModel(kernel, c, epsilon, sv_x, beta, b), layout
    raise DataError(f"{path}: unknown algorithm tag {algo!r}")


@dataclass
class ManifestRecord:
    image_path: str
    landmarks_path: str
    age: float
    person_id: str
    id: str  # set to the image path, unique within a manifest


MANIFEST_HEADER = ["image_path", "landmarks_path", "age", "person_id"]


def read_manifest(path) -> list[ManifestRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: empty manifest") from None
    if [h.strip() for h in header] != MANIFEST_HEADER:
        raise DataError(f"{path}: bad header {header!r}, expected {','.join(MANIFEST_HEADER)}")
    base = path.parent
    records = []
    seen: set[str] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
        image_path, landmarks_path, age_str, person = (c.strip() for c in row)
        try:
            age = float(age_str)
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad age {age_str!r}") from None
        if not math.isfinite(age) or age < 0:
            raise DataError(f"{path}:{lineno}: age must be finite and nonnegative")
        if image_path in seen:
            raise DataError(f"{path}:{lineno}: duplicate image path {image_path!r}")
        seen.add(image_path)
        records.append(
            ManifestRecord(
                image_path=str(base / image_path),
                landmarks_path=str(base / landmarks_path),
                age=age,
                person_id=person,
                id=image_path,
            )
        )
    if not records:
        raise DataError(f"{path}: manifest has no records")
    return records


def encode_predictions(preds: list[LabeledPrediction]) -> str:
    lines = ["id,y_true,y_pred"]
    for p in preds:
        lines.append(f"{p.id},{p.y_true:.6f},{p.y_pred:.6f}")
    return "\n".join(lines) + "\n"


def write_predictions(path, preds: list[LabeledPrediction]) -> None:
    atomic_write_text(path, encode_predictions(preds))


def read_predictions(path) -> list[LabeledPrediction]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read predictions {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != "id,y_true,y_pred":
        raise DataError(f"{path}: expected 'id,y_true,y_pred' header")
    preds = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 fields")
        try:
            preds.append(LabeledPrediction(parts[0], float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    if not preds:
        raise DataError(f"{path}: no predictions")
    return preds


def encode_cs_curve(curve: CsCurve) -> str:
    lines = ["level,cs_percent"]
    for level, value in zip(curve.levels, curve.values):
        lines.append(f"{int(level)},{value:.4f}")
    return "\n".join(lines) + "\n"


def write_cs_curve(path, curve: CsCurve) -> None:
    atomic_write_text(path, encode_cs_curve(curve))
