"""Minimal PLY reader/writer for point data.

Supports ASCII and binary little-endian files whose vertex element carries
x, y, z as float32/float64 plus optional red, green, blue as uint8. Other
vertex properties of scalar type are skipped; non-vertex elements (faces
and friends) are ignored with a warning. Coordinates are widened to
float64 on read.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .cloud import PointCloud

_SCALAR_DTYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_COLOR_NAMES = ("red", "green", "blue")


class PlyParseError(ValueError):
    """Raised for malformed PLY input; message names the offending line or byte."""


def _parse_header(raw: bytes, path: str):
    """Return (format, vertex properties, vertex count, payload offset, line count)."""
    lines = []
    offset = 0
    while True:
        end = raw.find(b"\n", offset)
        if end < 0:
            raise PlyParseError(f"{path}: header not terminated by end_header")
        line = raw[offset:end].rstrip(b"\r")
        offset = end + 1
        try:
            text = line.decode("ascii")
        except UnicodeDecodeError:
            raise PlyParseError(
                f"{path}: non-ASCII bytes in header at byte offset {offset - len(line) - 1}"
            ) from None
        lines.append(text)
        if text == "end_header":
            break

    if not lines or lines[0].strip() != "ply":
        raise PlyParseError(f"{path}: line 1: missing 'ply' magic")

    fmt = None
    vertex_count = None
    vertex_props: list[tuple[str, str]] = []
    current_element = None
    saw_other_element = False

    for lineno, text in enumerate(lines[1:-1], start=2):
        tokens = text.split()
        if not tokens or tokens[0] in ("comment", "obj_info"):
            continue
        keyword = tokens[0]
        if keyword == "format":
            if len(tokens) != 3 or tokens[2] != "1.0":
                raise PlyParseError(f"{path}: line {lineno}: bad format line {text!r}")
            if tokens[1] not in ("ascii", "binary_little_endian"):
                raise PlyParseError(
                    f"{path}: line {lineno}: unsupported format {tokens[1]!r}"
                )
            fmt = tokens[1]
        elif keyword == "element":
            if len(tokens) != 3:
                raise PlyParseError(f"{path}: line {lineno}: bad element line {text!r}")
            current_element = tokens[1]
            if current_element == "vertex":
                try:
                    vertex_count = int(tokens[2])
                except ValueError:
                    raise PlyParseError(
                        f"{path}: line {lineno}: bad vertex count {tokens[2]!r}"
                    ) from None
                if vertex_count < 0:
                    raise PlyParseError(
                        f"{path}: line {lineno}: negative vertex count"
                    )
            else:
                saw_other_element = True
        elif keyword == "property":
            if current_element != "vertex":
                continue
            if len(tokens) >= 2 and tokens[1] == "list":
                raise PlyParseError(
                    f"{path}: line {lineno}: list property in vertex element unsupported"
                )
            if len(tokens) != 3:
                raise PlyParseError(f"{path}: line {lineno}: bad property line {text!r}")
            ptype, pname = tokens[1], tokens[2]
            if ptype not in _SCALAR_DTYPES:
                raise PlyParseError(
                    f"{path}: line {lineno}: unsupported property type {ptype!r}"
                )
            vertex_props.append((pname, ptype))
        elif keyword == "end_header":
            break
        else:
            raise PlyParseError(f"{path}: line {lineno}: unknown keyword {keyword!r}")

    if fmt is None:
        raise PlyParseError(f"{path}: header missing format line")
    if vertex_count is None:
        raise PlyParseError(f"{path}: header missing 'element vertex'")

    names = [name for name, _ in vertex_props]
    for coord in ("x", "y", "z"):
        if coord not in names:
            raise PlyParseError(f"{path}: vertex element missing property {coord!r}")
        ptype = dict(vertex_props)[coord]
        if ptype not in ("float", "float32", "double", "float64"):
            raise PlyParseError(
                f"{path}: property {coord!r} has unsupported type {ptype!r} "
                "(expected float32/float64)"
            )
    has_colors = all(name in names for name in _COLOR_NAMES)
    if has_colors:
        for name in _COLOR_NAMES:
            if dict(vertex_props)[name] not in ("uchar", "uint8"):
                raise PlyParseError(
                    f"{path}: color property {name!r} must be uint8"
                )
    if saw_other_element:
        warnings.warn(f"{path}: ignoring non-vertex elements", stacklevel=3)

    return fmt, vertex_props, vertex_count, offset, len(lines), has_colors


def read_ply(path) -> PointCloud:
    """Read a PLY point cloud (ASCII or binary little-endian).

    Raises
    ------
    PlyParseError
        On malformed headers, unsupported property types, or a payload
        shorter than the declared vertex count. Messages name the source
        line (ASCII) or byte offset (binary).
    """
    path = Path(path)
    raw = path.read_bytes()
    fmt, props, count, payload_offset, header_lines, has_colors = _parse_header(
        raw, str(path)
    )

    if fmt == "binary_little_endian":
        dtype = np.dtype([(name, "<" + _SCALAR_DTYPES[t]) for name, t in props])
        needed = dtype.itemsize * count
        payload = raw[payload_offset:]
        if len(payload) < needed:
            raise PlyParseError(
                f"{path}: binary payload ends at byte offset "
                f"{payload_offset + len(payload)}, expected "
                f"{payload_offset + needed} for {count} vertices"
            )
        records = np.frombuffer(payload, dtype=dtype, count=count)
    else:
        text_rows = raw[payload_offset:].decode("ascii", errors="replace").splitlines()
        rows = [(i, row.split()) for i, row in enumerate(text_rows) if row.strip()]
        if len(rows) < count:
            lineno = header_lines + len(rows) + 1
            raise PlyParseError(
                f"{path}: line {lineno}: expected {count} vertex rows, found {len(rows)}"
            )
        records = np.zeros(count, dtype=np.dtype([(name, "f8") for name, _ in props]))
        for out_idx, (row_idx, tokens) in enumerate(rows[:count]):
            if len(tokens) < len(props):
                raise PlyParseError(
                    f"{path}: line {header_lines + row_idx + 1}: expected "
                    f"{len(props)} values, found {len(tokens)}"
                )
            try:
                for (name, _), tok in zip(props, tokens):
                    records[out_idx][name] = float(tok)
            except ValueError:
                raise PlyParseError(
                    f"{path}: line {header_lines + row_idx + 1}: bad numeric value"
                ) from None

    points = np.column_stack(
        [
            records["x"].astype(np.float64),
            records["y"].astype(np.float64),
            records["z"].astype(np.float64),
        ]
    )
    colors = None
    if has_colors:
        colors = np.column_stack(
            [records[name].astype(np.uint8) for name in _COLOR_NAMES]
        )
    return PointCloud(points, colors)


def write_ply(cloud: PointCloud, path, mode: str = "binary") -> None:
    """Write a cloud as PLY; `mode` is "ascii" or "binary" (little-endian).

    Binary mode stores coordinates as float64, so a write/read round trip
    is bit-exact.
    """
    if mode == "binary-little-endian":
        mode = "binary"
    if mode not in ("ascii", "binary"):
        raise ValueError(f"mode must be 'ascii' or 'binary', got {mode!r}")
    path = Path(path)
    fmt = "ascii" if mode == "ascii" else "binary_little_endian"

    header = ["ply", f"format {fmt} 1.0", f"element vertex {len(cloud)}"]
    header += [f"property double {axis}" for axis in "xyz"]
    if cloud.colors is not None:
        header += [f"property uchar {name}" for name in _COLOR_NAMES]
    header.append("end_header")

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if mode == "binary":
            fields = [(axis, "<f8") for axis in "xyz"]
            if cloud.colors is not None:
                fields += [(name, "u1") for name in _COLOR_NAMES]
            records = np.zeros(len(cloud), dtype=np.dtype(fields))
            for i, axis in enumerate("xyz"):
                records[axis] = cloud.points[:, i]
            if cloud.colors is not None:
                for i, name in enumerate(_COLOR_NAMES):
                    records[name] = cloud.colors[:, i]
            fh.write(records.tobytes())
        else:
            lines = []
            for i in range(len(cloud)):
                vals = [repr(float(v)) for v in cloud.points[i]]
                if cloud.colors is not None:
                    vals += [str(int(v)) for v in cloud.colors[i]]
                lines.append(" ".join(vals))
            if lines:
                fh.write(("\n".join(lines) + "\n").encode("ascii"))
