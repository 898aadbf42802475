"""Annotation parsers, interchange formats, and overlay rendering.

Supported annotation formats:

* ``icdar2015``: per line ``x1,y1,...,x4,y4,transcription`` (4-vertex word
  quads); transcription ``###`` flags DO-NOT-CARE.
* ``ctw1500``: per line 28 comma-separated integers read as 14 absolute
  (x, y) boundary points; releases storing ``xmin,ymin,xmax,ymax`` plus 28
  offsets relative to the box corner are handled with ``ctw_relative=True``
  (32 numbers per line).
* ``totaltext``: per line bracketed coordinate lists ``x: [[...]], y: [[...]]``
  plus a quoted transcription; transcription ``#`` flags DO-NOT-CARE.
* ``canonical_jsonl``: one JSON object per line with fields ``polygon``
  (flat ``[x1, y1, x2, y2, ...]``), ``ignore``, ``transcription``; the
  round-trippable interchange format of this toolkit.

The heatmap binary format is ``CTHM`` magic, two little-endian uint32
dimensions, then height*width little-endian float32 values in row-major
order. Round trips are bit-exact for float32-representable grids.
"""

import json
import os
import re
import struct
import tempfile
from xml.sax.saxutils import quoteattr

import numpy as np

from .decode import Detection
from .errors import FormatError, InvalidConfig, InvalidGrid, ParseError
from .labels import AnnotationRecord

DATASET_FORMATS = ("icdar2015", "ctw1500", "totaltext", "canonical_jsonl")

HEATMAP_MAGIC = b"CTHM"

_TT_COORDS = re.compile(r"\[+\s*([-\d.,\s]*?)\s*\]+")
_TT_TRANSCRIPTION = re.compile(r"transcriptn?:\s*\[?\s*u?['\"](.*?)['\"]\s*\]?")


def _decode_text(data) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8-sig")
    return data.lstrip("\ufeff")


def _numbers(fields, lineno):
    try:
        return [float(f) for f in fields]
    except ValueError as exc:
        raise ParseError(f"non-numeric coordinate: {exc}", lineno) from exc


def _pair_up(values, lineno):
    if len(values) % 2 != 0:
        raise ParseError(f"odd coordinate count {len(values)}", lineno)
    poly = np.array(values, dtype=np.float64).reshape(-1, 2)
    if len(poly) < 3:
        raise ParseError(f"polygon needs >= 3 vertices, got {len(poly)}", lineno)
    return poly


def _parse_icdar2015_line(line, lineno):
    fields = line.split(",")
    if len(fields) < 9:
        raise ParseError(f"expected 8 coordinates + transcription, got {len(fields)} fields", lineno)
    poly = _pair_up(_numbers(fields[:8], lineno), lineno)
    transcription = ",".join(fields[8:])
    return AnnotationRecord(poly, ignore=transcription == "###", transcription=transcription)


def _parse_ctw1500_line(line, lineno, relative):
    fields = line.split(",")
    expected = 32 if relative else 28
    if len(fields) != expected:
        raise ParseError(f"expected {expected} comma-separated values, got {len(fields)}", lineno)
    values = _numbers(fields, lineno)
    if relative:
        xmin, ymin = values[0], values[1]
        poly = _pair_up(values[4:], lineno)
        poly += np.array([xmin, ymin])
    else:
        poly = _pair_up(values, lineno)
    return AnnotationRecord(poly, ignore=False, transcription=None)


def _parse_totaltext_line(line, lineno):
    xm = re.search(r"x:\s*(\[+[^\]]*\]+)", line)
    ym = re.search(r"y:\s*(\[+[^\]]*\]+)", line)
    if not xm or not ym:
        raise ParseError("missing x: [...] or y: [...] coordinate list", lineno)

    def grab(block):
        inner = _TT_COORDS.search(block)
        return _numbers(re.split(r"[\s,]+", inner.group(1).strip()), lineno) if inner else []

    xs, ys = grab(xm.group(1)), grab(ym.group(1))
    if len(xs) != len(ys):
        raise ParseError(f"x/y length mismatch: {len(xs)} vs {len(ys)}", lineno)
    if len(xs) < 3:
        raise ParseError(f"polygon needs >= 3 vertices, got {len(xs)}", lineno)
    tm = _TT_TRANSCRIPTION.search(line)
    transcription = tm.group(1) if tm else None
    return AnnotationRecord(
        np.column_stack([xs, ys]).astype(np.float64),
        ignore=transcription == "#",
        transcription=transcription,
    )


def _parse_canonical_line(line, lineno):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc}", lineno) from exc
    if not isinstance(obj, dict) or "polygon" not in obj:
        raise ParseError("record must be an object with a 'polygon' field", lineno)
    poly = _pair_up(_numbers(obj["polygon"], lineno), lineno)
    return AnnotationRecord(
        poly,
        ignore=bool(obj.get("ignore", False)),
        transcription=obj.get("transcription"),
    )


def parse_annotations(text, fmt: str, ctw_relative: bool = False):
    """Parse one image's annotation text into AnnotationRecord objects."""
    if fmt not in DATASET_FORMATS:
        raise InvalidConfig(f"unknown dataset format {fmt!r}; pick one of {DATASET_FORMATS}")
    records = []
    for lineno, line in enumerate(_decode_text(text).splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if fmt == "icdar2015":
            records.append(_parse_icdar2015_line(line, lineno))
        elif fmt == "ctw1500":
            records.append(_parse_ctw1500_line(line, lineno, ctw_relative))
        elif fmt == "totaltext":
            records.append(_parse_totaltext_line(line, lineno))
        else:
            records.append(_parse_canonical_line(line, lineno))
    return records


def serialize_annotations(records) -> str:
    """Canonical JSONL serialization; exact for coordinates up to float64."""
    lines = []
    for rec in records:
        poly = np.asarray(rec.polygon, dtype=np.float64).reshape(-1)
        lines.append(
            json.dumps(
                {
                    "polygon": poly.tolist(),
                    "ignore": bool(rec.ignore),
                    "transcription": rec.transcription,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def serialize_detections(dets) -> str:
    """Detections as JSONL rows with `polygon` and `score` fields."""
    lines = []
    for det in dets:
        poly = np.asarray(det.polygon, dtype=np.float64).reshape(-1)
        lines.append(json.dumps({"polygon": poly.tolist(), "score": float(det.score)}))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_detections(text):
    """Read detection JSONL rows (missing scores default to 1.0)."""
    dets = []
    for lineno, line in enumerate(_decode_text(text).splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", lineno) from exc
        if "polygon" not in obj:
            raise ParseError("detection row needs a 'polygon' field", lineno)
        poly = _pair_up(_numbers(obj["polygon"], lineno), lineno)
        dets.append(Detection(poly, float(obj.get("score", 1.0))))
    return dets


def serialize_candidates(cands) -> str:
    """Contour point candidates as JSONL rows: row, col, confidence."""
    lines = [
        json.dumps({"row": int(r), "col": int(c), "confidence": float(v)})
        for r, c, v in cands.points
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_candidates(text) -> np.ndarray:
    """Read candidate JSONL rows into an (M, 3) array of (row, col, confidence)."""
    rows = []
    for lineno, line in enumerate(_decode_text(text).splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            rows.append((int(obj["row"]), int(obj["col"]), float(obj["confidence"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad candidate row: {exc}", lineno) from exc
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def atomic_write(path, data) -> None:
    """Write bytes or text to `path` via a temp file + rename."""
    mode = "wb" if isinstance(data, bytes) else "w"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_heatmap(path, grid) -> None:
    """Write a float grid as a CTHM binary heatmap file (atomically)."""
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise InvalidGrid(f"heatmap must be 2-D, got shape {g.shape}")
    if not np.isfinite(g).all():
        raise InvalidGrid("refusing to write non-finite heatmap values")
    h, w = g.shape
    payload = HEATMAP_MAGIC + struct.pack("<II", h, w) + g.astype("<f4").tobytes()
    atomic_write(path, payload)


def read_heatmap(path) -> np.ndarray:
    """Read a CTHM heatmap file back into a float64 grid."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 12:
        raise FormatError(f"{path}: file too short for a heatmap header")
    if buf[:4] != HEATMAP_MAGIC:
        raise FormatError(f"{path}: bad magic {buf[:4]!r}")
    h, w = struct.unpack("<II", buf[4:12])
    expected = 12 + 4 * h * w
    if len(buf) != expected:
        raise FormatError(
            f"{path}: payload size mismatch (expected {expected} bytes for {h}x{w}, got {len(buf)})"
        )
    values = np.frombuffer(buf, dtype="<f4", count=h * w, offset=12)
    if not np.isfinite(values).all():
        raise FormatError(f"{path}: non-finite heatmap values")
    return values.reshape(h, w).astype(np.float64)


def read_pgm(path) -> np.ndarray:
    """Read a raw 8-bit PGM (P5) image into a float grid scaled to [0, 1]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4 and pos < len(buf):
        if buf[pos : pos + 1].isspace():
            pos += 1
        elif buf[pos : pos + 1] == b"#":
            pos = buf.find(b"\n", pos)
            pos = len(buf) if pos < 0 else pos + 1
        else:
            end = pos
            while end < len(buf) and not buf[end : end + 1].isspace():
                end += 1
            tokens.append(buf[pos:end])
            pos = end
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise FormatError(f"{path}: not a raw 8-bit PGM (P5) file")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header: {exc}") from exc
    if not 0 < maxval < 256:
        raise FormatError(f"{path}: only 8-bit PGM supported, maxval={maxval}")
    pos += 1  # single whitespace after maxval
    data = buf[pos : pos + w * h]
    if len(data) != w * h:
        raise FormatError(f"{path}: truncated pixel data")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w).astype(np.float64) / maxval


def _svg_polygon(poly, stroke) -> str:
    pts = " ".join(f"{x:g},{y:g}" for x, y in np.asarray(poly, dtype=np.float64))
    return f'  <polygon points={quoteattr(pts)} fill="none" stroke="{stroke}" stroke-width="1"/>'


def render_overlay_svg(height: int, width: int, gts=(), dets=(), candidates=None) -> str:
    """SVG overlay: ground truth green, detections red, candidate points blue."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
    ]
    for rec in gts:
        lines.append(_svg_polygon(rec.polygon, "green"))
    for det in dets:
        lines.append(_svg_polygon(det.polygon, "red"))
    if candidates is not None:
        for r, c, _ in np.asarray(candidates, dtype=np.float64).reshape(-1, 3):
            lines.append(f'  <circle cx="{c + 0.5:g}" cy="{r + 0.5:g}" r="0.75" fill="blue"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
