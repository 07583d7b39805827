"""
File formats for images, sparse maps, line scans, PSF parameters and
key=value configuration files.

Grids are written either as CSV (one row per grid row, floats at full
round-trip precision) or in the binary ``LSCS1`` layout::

    b"LSCS1" | u32 n (little endian) | n*n f64 (little endian, row-major)

Scan CSVs carry one header row of angles in degrees followed by one row per
sweep sample. PSF files hold one row ``a, c_l, alpha_l, c_r, alpha_r, sigma``
per angle; a PSF box file holds the lower row followed by the upper row.

Every reader raises :class:`ParseError` with the 1-based line number of the
offending row.
"""

import csv
import logging
import struct
import typing
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from ._base import FloatArray
from .exceptions import ParseError
from .models import (
    N_COORDINATES,
    Image,
    LineScanSet,
    PsfBox,
    PsfParams,
    ScanGeometry,
    SparseMap,
)

_logger = logging.getLogger(__name__)

MAGIC = b"LSCS1"
_HEADER = struct.Struct("<5sI")
BINARY_SUFFIXES = frozenset({".lscs", ".bin"})


# ============================================================================
# Low-level helpers
# ============================================================================


def format_float(value: float) -> str:
    """Shortest-safe text for a float (``%.17g`` round-trips every double).

    Example:
        >>> format_float(0.0)
        '0'
        >>> format_float(0.25)
        '0.25'
    """
    return f"{float(value):.17g}"


def _read_numeric_rows(path: Path) -> list[tuple[int, list[float]]]:
    """Nonblank, non-comment rows as ``(line_number, values)`` pairs."""
    rows: list[tuple[int, list[float]]] = []
    with path.open() as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            rows.append((line_no, _parse_cells(text, path, line_no)))
    return rows


def _parse_cells(text: str, path: Path, line_no: int) -> list[float]:
    values: list[float] = []
    for col, cell in enumerate(text.split(","), start=1):
        try:
            values.append(float(cell))
        except ValueError:
            raise ParseError(
                f"row {line_no}: column {col} is not a number: "
                f"{cell.strip()!r}",
                path=str(path),
                line=line_no,
            )
    return values


def _check_width(
    rows: Sequence[tuple[int, list[float]]], width: int, path: Path
) -> None:
    for line_no, values in rows:
        if len(values) != width:
            raise ParseError(
                f"row {line_no}: expected {width} columns, got {len(values)}",
                path=str(path),
                line=line_no,
            )


def _write_rows(path: Path, rows: Iterable[Iterable[float]]) -> None:
    with path.open("w") as fh:
        for row in rows:
            fh.write(",".join(format_float(v) for v in row))
            fh.write("\n")


# ============================================================================
# Square grids (Image / SparseMap)
# ============================================================================


def write_grid(path: str | Path, data: FloatArray) -> None:
    """Write a square grid as CSV, or as ``LSCS1`` for ``.lscs``/``.bin``."""
    target = Path(path)
    if target.suffix.lower() in BINARY_SUFFIXES:
        n = int(data.shape[0])
        payload = np.ascontiguousarray(data, dtype="<f8").tobytes()
        target.write_bytes(_HEADER.pack(MAGIC, n) + payload)
    else:
        _write_rows(target, data)
    _logger.debug(f"Wrote {data.shape[0]}x{data.shape[1]} grid to {target}")


def read_grid(path: str | Path) -> FloatArray:
    """Read a square grid written by :func:`write_grid`."""
    source = Path(path)
    if source.suffix.lower() in BINARY_SUFFIXES:
        return _read_binary_grid(source)
    rows = _read_numeric_rows(source)
    if not rows:
        raise ParseError("file contains no rows", path=str(source), line=1)
    n = len(rows)
    _check_width(rows, n, source)
    return np.array([values for _, values in rows], dtype=np.float64)


def _read_binary_grid(path: Path) -> FloatArray:
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise ParseError("truncated LSCS1 header", path=str(path))
    magic, n = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ParseError(
            f"bad magic {magic!r}, expected {MAGIC!r}", path=str(path)
        )
    expected = _HEADER.size + 8 * n * n
    if len(blob) != expected:
        raise ParseError(
            f"LSCS1 payload holds {len(blob) - _HEADER.size} bytes, "
            f"expected {8 * n * n} for n={n}",
            path=str(path),
        )
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    return data.reshape(n, n).astype(np.float64)


def write_image(path: str | Path, image: Image) -> None:
    write_grid(path, image.data)


def read_image(path: str | Path, pixel_size: float = 1.0) -> Image:
    return Image(data=read_grid(path), pixel_size=pixel_size)


def write_sparse_map(path: str | Path, x: SparseMap) -> None:
    write_grid(path, x.data)


def read_sparse_map(path: str | Path) -> SparseMap:
    return SparseMap(data=read_grid(path))


# ============================================================================
# Line scans
# ============================================================================


def write_scanset(path: str | Path, r: LineScanSet) -> None:
    """Header row of angles (degrees), then one row per sweep sample."""
    target = Path(path)
    _write_rows(target, [r.geometry.angles, *r.data])
    _logger.debug(f"Wrote {r.data.shape[0]}x{r.m} scan set to {target}")


def read_scanset(
    path: str | Path,
    n: int | None = None,
    stride: int = 1,
    normalize: bool = True,
) -> LineScanSet:
    """Read a scan CSV.

    Args:
        path: File to read
        n: Grid side; defaults to the number of sample rows (required when
            ``stride > 1``)
        stride: Sampling period the scans were recorded with
        normalize: Whether the ``1/sqrt(m)`` factor applies

    Raises:
        ParseError: On a malformed header, ragged rows or non-numeric cells
    """
    source = Path(path)
    rows = _read_numeric_rows(source)
    if not rows:
        raise ParseError("missing angle header row", path=str(source), line=1)
    header_line, angles = rows[0]
    m = len(angles)
    if len(set(angles)) != m:
        raise ParseError(
            f"row {header_line}: angles must be distinct",
            path=str(source),
            line=header_line,
        )
    samples = rows[1:]
    if not samples:
        raise ParseError(
            "scan file has no sample rows", path=str(source), line=header_line
        )
    _check_width(samples, m, source)
    if n is None:
        if stride != 1:
            raise ParseError(
                "grid side n is required for strided scans", path=str(source)
            )
        n = len(samples)
    geometry = ScanGeometry(
        angles=tuple(angles), n=n, normalize=normalize, stride=stride
    )
    if len(samples) != geometry.samples:
        raise ParseError(
            f"expected {geometry.samples} sample rows for n={n}, "
            f"stride={stride}, got {len(samples)}",
            path=str(source),
        )
    data = np.array([values for _, values in samples], dtype=np.float64)
    return LineScanSet(data=data, geometry=geometry)


# ============================================================================
# PSF parameters
# ============================================================================


def write_psf_params(path: str | Path, p: PsfParams) -> None:
    _write_rows(Path(path), p.values)


def write_psf_box(path: str | Path, box: PsfBox) -> None:
    _write_rows(Path(path), [box.lower, box.upper])


def _read_psf_rows(source: Path) -> FloatArray:
    rows = _read_numeric_rows(source)
    if not rows:
        raise ParseError("PSF file contains no rows", path=str(source), line=1)
    _check_width(rows, N_COORDINATES, source)
    return np.array([values for _, values in rows], dtype=np.float64)


def read_psf_box(path: str | Path) -> PsfBox:
    source = Path(path)
    values = _read_psf_rows(source)
    if values.shape[0] != 2:
        raise ParseError(
            f"PSF box needs exactly 2 rows (lower, upper), "
            f"got {values.shape[0]}",
            path=str(source),
        )
    return PsfBox(lower=values[0], upper=values[1])


def read_psf_params(
    path: str | Path, box: PsfBox | None = None, m: int | None = None
) -> PsfParams:
    """Read per-angle PSF rows.

    A single row is broadcast to ``m`` lines when ``m`` is given. Without a
    box, the tightest box around the rows is used.
    """
    source = Path(path)
    values = _read_psf_rows(source)
    if m is not None and values.shape[0] == 1:
        values = np.tile(values, (m, 1))
    if m is not None and values.shape[0] != m:
        raise ParseError(
            f"expected {m} PSF rows (one per angle), got {values.shape[0]}",
            path=str(source),
        )
    if box is None:
        box = PsfBox(lower=values.min(axis=0), upper=values.max(axis=0))
    return PsfParams(values=values, box=box)


# ============================================================================
# key=value files
# ============================================================================


def read_key_values(path: str | Path) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped.

    Raises:
        ParseError: On a line without ``=`` or a repeated key
    """
    source = Path(path)
    result: dict[str, str] = {}
    with source.open() as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            key, sep, value = text.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ParseError(
                    f"row {line_no}: expected key=value, got {text!r}",
                    path=str(source),
                    line=line_no,
                )
            if key in result:
                raise ParseError(
                    f"row {line_no}: duplicate key {key!r}",
                    path=str(source),
                    line=line_no,
                )
            result[key] = value.strip()
    return result


def write_key_values(path: str | Path, values: Mapping[str, Any]) -> None:
    with Path(path).open("w") as fh:
        for key, value in values.items():
            fh.write(f"{key}={_format_value(value)}\n")


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return ",".join(
            ":".join(str(v) for v in item)
            if isinstance(item, (list, tuple))
            else _format_value(item)
            for item in value
        )
    if value is None:
        return ""
    return str(value)


def _is_tuple_field(model: type[BaseModel], key: str) -> bool:
    for name, info in model.model_fields.items():
        if key in (name, info.alias):
            return typing.get_origin(info.annotation) is tuple
    return False


def _split_list(text: str) -> list[Any]:
    if not text:
        return []
    if ".." in text and "," not in text:
        lo, _, hi = text.partition("..")
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            return [text]
    return [
        cell.split(":") if ":" in cell else cell.strip()
        for cell in text.split(",")
    ]


def model_from_key_values[M: BaseModel](
    model: type[M], values: Mapping[str, str]
) -> M:
    """Validate raw key=value strings into ``model``.

    Tuple fields accept comma lists (``lines=2,4,8``), inclusive ranges
    (``lines=2..16``) and ``row:col`` pairs (``centers=10:12,30:40``).
    Empty values fall back to the field default.
    """
    data: dict[str, Any] = {}
    for key, text in values.items():
        if _is_tuple_field(model, key):
            data[key] = _split_list(text)
        elif text != "":
            data[key] = text
    return model.model_validate(data)


def read_model[M: BaseModel](model: type[M], path: str | Path) -> M:
    """Read a key=value file into a validated configuration model."""
    return model_from_key_values(model, read_key_values(path))


def write_model(path: str | Path, model: BaseModel) -> None:
    """Write a model as key=value lines using its file keys (aliases)."""
    write_key_values(path, model.model_dump(mode="json", by_alias=True))


# ============================================================================
# Report tables
# ============================================================================


def write_table(
    path: str | Path,
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
) -> None:
    """Write dict rows as CSV with a header; floats at full precision."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    key: format_float(value)
                    if isinstance(value, float)
                    else value
                    for key, value in row.items()
                }
            )
