"""File formats: CSV tables, the binary trace container, and text reports.

Every output file starts with ``#`` comment lines naming the producing
command, the configuration hash, and the seed, followed by a mandatory
header row for CSV tables. Readers skip comment lines. Nothing written here
contains timestamps, so identical runs produce byte-identical files.

The binary trace container is little-endian: magic ``TES1``, a ``u32``
pulse count, a ``u32`` sample count, an ``f64`` sample period, then
row-major ``f32`` samples. The CSV trace encoding stores the same
``f32``-rounded values with 9 significant digits, so both encodings decode
to identical matrices.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError, TraceFormatError
from .photon_stats import CountSet
from .tes import TraceSet

TRACE_MAGIC = b"TES1"
_TRACE_HEADER = struct.Struct("<4sIId")


def format_header(meta: dict) -> str:
    return "".join(f"# {key}: {value}\n" for key, value in meta.items())


def _write_text(path: Path | str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def write_spectrum_csv(path, spectrum: np.ndarray, meta: dict) -> None:
    """Squeezing spectrum table: omega_rad_per_s, v_plus_db, v_minus_db."""
    lines = [format_header(meta), "omega_rad_per_s,v_plus_db,v_minus_db\n"]
    for omega, v_plus, v_minus in spectrum:
        lines.append(f"{omega:.12e},{v_plus:.12e},{v_minus:.12e}\n")
    _write_text(path, "".join(lines))


def write_spectrum_points_csv(path, spectrum: np.ndarray, meta: dict) -> None:
    """Fit-ready long-form table: omega_rad_per_s, v_db, branch."""
    lines = [format_header(meta), "omega_rad_per_s,v_db,branch\n"]
    for omega, v_plus, v_minus in spectrum:
        lines.append(f"{omega:.12e},{v_plus:.12e},plus\n")
        lines.append(f"{omega:.12e},{v_minus:.12e},minus\n")
    _write_text(path, "".join(lines))


def write_counts_csv(path, counts: CountSet, meta: dict) -> None:
    """Pair count table: pulse_index, n_signal, n_idler, saturated(0/1)."""
    lines = [format_header(meta), "pulse_index,n_signal,n_idler,saturated\n"]
    sat = counts.saturated.astype(int)
    for i in range(counts.num_pulses):
        lines.append(f"{i},{counts.n_signal[i]},{counts.n_idler[i]},{sat[i]}\n")
    _write_text(path, "".join(lines))


def write_assigned_csv(path, numbers: np.ndarray, saturated: np.ndarray,
                       meta: dict) -> None:
    """Single-channel assignment table: pulse_index, n_photon, saturated."""
    lines = [format_header(meta), "pulse_index,n_photon,saturated\n"]
    sat = np.asarray(saturated).astype(int)
    for i, n in enumerate(numbers):
        lines.append(f"{i},{int(n)},{sat[i]}\n")
    _write_text(path, "".join(lines))


def write_table_csv(path, columns: dict[str, np.ndarray], meta: dict) -> None:
    """Generic numeric table with named columns."""
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    length = arrays[0].size
    lines = [format_header(meta), ",".join(names) + "\n"]
    for i in range(length):
        lines.append(",".join(f"{arr[i]:.12e}" for arr in arrays) + "\n")
    _write_text(path, "".join(lines))


def write_report(path, meta: dict, entries: dict) -> None:
    """Flat ``key = value`` report with the standard comment header."""
    lines = [format_header(meta)]
    for key, value in entries.items():
        lines.append(f"{key} = {value}\n")
    _write_text(path, "".join(lines))


def read_table(path) -> dict[str, np.ndarray]:
    """Read a CSV table with a mandatory header row; '#' lines are skipped.

    Columns that parse as floats become float arrays; anything else stays
    as strings. Raises :class:`~ringsqueeze.errors.ConfigError` on ragged
    rows or a missing header.
    """
    path = Path(path)
    rows: list[list[str]] = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([cell.strip() for cell in line.split(",")])
    if not rows:
        raise ConfigError(f"{path}: no header row found")
    header = rows[0]
    width = len(header)
    data = rows[1:]
    for i, row in enumerate(data):
        if len(row) != width:
            raise ConfigError(
                f"{path}: row {i + 1} has {len(row)} columns, expected {width}")
    table: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in data]
        try:
            table[name] = np.array([float(c) for c in cells], dtype=np.float64)
        except ValueError:
            table[name] = np.array(cells, dtype=object)
    return table


def require_columns(table: dict[str, np.ndarray], names: list[str],
                    path) -> list[np.ndarray]:
    missing = [n for n in names if n not in table]
    if missing:
        raise ConfigError(
            f"{path}: missing required columns {missing}; "
            f"found {sorted(table)}")
    return [table[n] for n in names]


def read_spectrum_points(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fit-ready spectrum points; branch labels map to +1 (plus) / -1 (minus)."""
    table = read_table(path)
    omega, v_db, branch = require_columns(
        table, ["omega_rad_per_s", "v_db", "branch"], path)
    if branch.dtype == np.float64:
        raise ConfigError(f"{path}: branch column must hold plus/minus labels")
    mapped = np.empty(branch.size, dtype=np.int64)
    for i, label in enumerate(branch):
        if label == "plus":
            mapped[i] = 1
        elif label == "minus":
            mapped[i] = -1
        else:
            raise ConfigError(
                f"{path}: branch entries must be 'plus' or 'minus', "
                f"got {label!r}")
    return np.asarray(omega, dtype=np.float64), \
        np.asarray(v_db, dtype=np.float64), mapped


def write_trace_file(path, traces: TraceSet) -> None:
    """Binary trace container (f32 samples, little-endian)."""
    header = _TRACE_HEADER.pack(TRACE_MAGIC, traces.num_pulses,
                                traces.num_samples, traces.sample_period)
    data = traces.traces.astype("<f4").tobytes()
    Path(path).write_bytes(header + data)


def read_trace_file(path) -> TraceSet:
    """Read the binary trace container, locating corruption by byte offset."""
    raw = Path(path).read_bytes()
    if len(raw) == 0:
        raise TraceFormatError(f"{path}: empty trace file", byte_offset=0)
    if len(raw) < 4 or raw[:4] != TRACE_MAGIC:
        raise TraceFormatError(
            f"{path}: bad magic, expected {TRACE_MAGIC!r}", byte_offset=0)
    if len(raw) < _TRACE_HEADER.size:
        raise TraceFormatError(
            f"{path}: truncated header ({len(raw)} of "
            f"{_TRACE_HEADER.size} bytes)", byte_offset=len(raw))
    _, num_pulses, num_samples, sample_period = _TRACE_HEADER.unpack_from(raw)
    expected = _TRACE_HEADER.size + 4 * num_pulses * num_samples
    if len(raw) != expected:
        raise TraceFormatError(
            f"{path}: payload size mismatch, expected {expected} bytes, "
            f"found {len(raw)}", byte_offset=min(len(raw), expected))
    if num_pulses == 0:
        raise TraceFormatError(f"{path}: contains no traces",
                               byte_offset=_TRACE_HEADER.size)
    data = np.frombuffer(raw, dtype="<f4", offset=_TRACE_HEADER.size)
    matrix = data.reshape(num_pulses, num_samples).astype(np.float64)
    try:
        return TraceSet(traces=matrix, sample_period=sample_period)
    except ValueError as exc:
        raise TraceFormatError(f"{path}: {exc}",
                               byte_offset=_TRACE_HEADER.size) from exc


def write_traces_csv(path, traces: TraceSet, meta: dict) -> None:
    """CSV trace encoding: one trace per row, f32-rounded values."""
    as_f32 = traces.traces.astype(np.float32)
    lines = [format_header(meta)]
    for row in as_f32:
        lines.append(",".join(f"{float(v):.9g}" for v in row) + "\n")
    _write_text(path, "".join(lines))


def read_traces_csv(path, sample_period: float = 1.0) -> TraceSet:
    """Read the CSV trace encoding (no header row; '#' lines skipped)."""
    path = Path(path)
    rows: list[list[str]] = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append(line.split(","))
    if not rows:
        raise TraceFormatError(f"{path}: empty trace file", byte_offset=0)
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise TraceFormatError(
                f"{path}: row {i} has {len(row)} samples, expected {width}")
    try:
        matrix = np.array([[float(c) for c in row] for row in rows],
                          dtype=np.float64)
    except ValueError as exc:
        raise TraceFormatError(f"{path}: non-numeric sample: {exc}") from exc
    try:
        return TraceSet(traces=matrix, sample_period=sample_period)
    except ValueError as exc:
        raise TraceFormatError(f"{path}: {exc}") from exc
