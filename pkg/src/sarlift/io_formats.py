"""File formats for measurements, histories, images, and matrices.

All text outputs are deterministic: floats are written with repr-exact
precision ('%.17g') and every file carries the experiment's config hash
(CSV and PGM as a leading comment line, JSON as a field, the binary
matrix format in its header).

Binary matrix layout (little-endian):
    bytes 0..3    magic b"SARM"
    u32           format version (1)
    u32           element size in bytes (8 = complex64, 16 = complex128)
    u64           rows
    u64           cols
    32 bytes      sha-256 config hash (zeros when absent)
    payload       row-major (re, im) float pairs
"""

import json
import math
import struct

import numpy as np

from .errors import DimensionError, InvalidConfigError

_MAGIC = b"SARM"
_HEADER = struct.Struct("<4sIIQQ32s")


def _fmt(x):
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    # repr: shortest exact round-trip float form, deterministic
    return repr(x) if isinstance(x, float) else str(x)


def _hash_comment(config_hash):
    return [f"# config_hash={config_hash}"] if config_hash else []


def _write_csv(path, comment_lines, header, rows):
    lines = list(comment_lines)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_csv(path):
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    return header, rows


def save_measurement_csv(path, measurement, config_hash=None):
    grid = measurement.grid
    omegas = grid.frequencies
    slow = grid.slow_times
    m_count = grid.num_frequencies
    rows = []
    for r, value in enumerate(measurement.values):
        m, p = r % m_count, r // m_count
        rows.append((m, p, float(omegas[m]), float(slow[p]),
                     float(value.real), float(value.imag)))
    _write_csv(path, _hash_comment(config_hash),
               ["m", "p", "omega_rad_s", "s_param", "re", "im"], rows)


def load_measurement_csv(path):
    """Read a measurement CSV; returns (values, m, p, omega, s) arrays."""
    header, rows = _read_csv(path)
    if header != ["m", "p", "omega_rad_s", "s_param", "re", "im"]:
        raise InvalidConfigError(f"unexpected measurement CSV header: {header}")
    data = np.array([[float(x) for x in row] for row in rows])
    m = data[:, 0].astype(int)
    p = data[:, 1].astype(int)
    m_count = m.max() + 1
    values = np.zeros(len(rows), dtype=complex)
    values[m + p * m_count] = data[:, 4] + 1j * data[:, 5]
    return values, m, p, data[:, 2], data[:, 3]


def save_history_csv(path, records, config_hash=None):
    rows = [(r.iteration, float(r.trace), r.numerical_rank, float(r.data_error))
            for r in records]
    _write_csv(path, _hash_comment(config_hash),
               ["iteration", "trace", "rank", "E_d"], rows)


def load_history_csv(path):
    header, rows = _read_csv(path)
    if header != ["iteration", "trace", "rank", "E_d"]:
        raise InvalidConfigError(f"unexpected history CSV header: {header}")
    return [(int(r[0]), float(r[1]), int(r[2]), float(r[3])) for r in rows]


def save_reflectivity_csv(path, image, config_hash=None):
    """Two-column (re, im) CSV in row-major pixel order."""
    rows = [(float(v.real), float(v.imag)) for v in image.values]
    _write_csv(path, _hash_comment(config_hash), ["re", "im"], rows)


def load_reflectivity_csv(path):
    """Read an (re, im) CSV back into a complex vector."""
    header, rows = _read_csv(path)
    if header != ["re", "im"]:
        raise InvalidConfigError(f"unexpected reflectivity CSV header: {header}")
    return np.array([float(r[0]) + 1j * float(r[1]) for r in rows])


def save_table_csv(path, rows, config_hash=None):
    """Result rows mirroring the summary-table columns."""
    header = ["fc_hz", "mode", "trace", "rank", "E_d", "E_rho", "E_rho_tilde"]
    _write_csv(path, _hash_comment(config_hash), header,
               [(float(fc), mode, float(tr), int(rk), float(ed), float(er),
                 float(et)) for fc, mode, tr, rk, ed, er, et in rows])


def save_pgm(path, values, shape, config_hash=None):
    """8-bit binary PGM of |values| linearly scaled to 0..255."""
    mag = np.abs(np.asarray(values)).reshape(shape)
    peak = mag.max()
    scaled = np.zeros(shape, dtype=np.uint8) if peak == 0 else \
        np.round(255.0 * mag / peak).astype(np.uint8)
    comment = f"# config_hash={config_hash}\n" if config_hash else ""
    header = f"P5\n{comment}{shape[1]} {shape[0]}\n255\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(scaled.tobytes())


def save_matrix_binary(path, matrix, config_hash=None, dtype=np.complex128):
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise DimensionError("matrix dump needs a 2-D array")
    if dtype == np.complex128:
        size = 16
    elif dtype == np.complex64:
        size = 8
    else:
        raise InvalidConfigError("dtype must be complex64 or complex128")
    digest = bytes.fromhex(config_hash) if config_hash else bytes(32)
    payload = np.ascontiguousarray(matrix.astype(dtype))
    # force little-endian on any platform
    payload = payload.astype(payload.dtype.newbyteorder("<"))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, size, matrix.shape[0], matrix.shape[1],
                              digest))
        fh.write(payload.tobytes())


def load_matrix_binary(path):
    """Returns (matrix, config_hash_hex_or_None)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, size, rows, cols, digest = _HEADER.unpack(head)
        if magic != _MAGIC or version != 1:
            raise InvalidConfigError(f"not a matrix dump: {path}")
        dtype = np.dtype("<c16") if size == 16 else np.dtype("<c8")
        data = np.frombuffer(fh.read(rows * cols * size), dtype=dtype)
    matrix = data.reshape(rows, cols).astype(
        np.complex128 if size == 16 else np.complex64)
    hash_hex = digest.hex() if any(digest) else None
    return matrix, hash_hex


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if math.isnan(x) else x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    return obj


def save_json_report(path, payload, config_hash=None):
    payload = dict(payload)
    if config_hash:
        payload["config_hash"] = config_hash
    with open(path, "w", newline="\n") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
