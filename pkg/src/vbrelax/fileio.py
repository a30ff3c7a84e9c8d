"""CSV schemas, flat config files and provenance-stamped reports."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .noise import NoisePoint, NoiseSpectrum  # noqa: F401  (re-exported)
from .synth import DecayCurve  # noqa: F401

SCHEMA_VERSION = 1

DECAY_HEADER = ("tau_us", "signal", "sigma")
GAMMA_HEADER = ("f_mhz", "gamma_khz", "gamma_err_khz")
TEMPERATURE_HEADER = ("t_kelvin", "inv_t1_khz")
SPECTRUM_HEADER = ("f_mhz", "s_e_perp", "sigma")
SUPPRESSION_HEADER = ("f_mhz", "suppression_pct")


class CSVFormatError(InvalidInputError):
    def __init__(self, path, row, column, message):
        super().__init__(f"{path}: row {row}, column {column}: {message}", key=column)
        self.path, self.row, self.column = str(path), row, column


class ConfigError(InvalidInputError):
    pass


def fmt(x) -> str:
    """17-significant-digit decimal, enough to round-trip any double."""
    return format(float(x), ".17g")


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def table_text(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_table(path, header):
    """Parse a numeric CSV with an exact header; returns an (n, ncol) array.

    Blank lines are skipped. Row numbers in errors count the header as row 1.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InvalidInputError(f"{path}: file not found", key=str(path)) from None
    except UnicodeDecodeError:
        raise CSVFormatError(path, 1, header[0], "file is not UTF-8") from None
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows:
        raise CSVFormatError(path, 1, header[0], "empty file")
    got = tuple(c.strip() for c in rows[0])
    if got != tuple(header):
        for i, name in enumerate(header):
            if i >= len(got) or got[i] != name:
                raise CSVFormatError(path, 1, name, f"expected header {','.join(header)}")
        raise CSVFormatError(path, 1, got[len(header)], f"expected header {','.join(header)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            col = header[min(len(row), len(header) - 1)]
            raise CSVFormatError(path, lineno, col, f"expected {len(header)} fields, got {len(row)}")
        vals = []
        for name, cell in zip(header, row):
            try:
                v = float(cell.strip())
            except ValueError:
                raise CSVFormatError(path, lineno, name, f"not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise CSVFormatError(path, lineno, name, f"non-finite value: {cell!r}")
            vals.append(v)
        data.append(vals)
    if not data:
        raise CSVFormatError(path, 2, header[0], "no data rows")
    return np.array(data, dtype=float)


def write_decay_csv(path, curve: DecayCurve):
    sigma = curve.sigma if curve.sigma is not None else np.zeros(len(curve))
    atomic_write(path, table_text(DECAY_HEADER, zip(curve.tau, curve.signal, sigma)))


def read_decay_csv(path) -> DecayCurve:
    t = read_table(path, DECAY_HEADER)
    if np.any(t[:, 2] < 0):
        row = int(np.nonzero(t[:, 2] < 0)[0][0]) + 2
        raise CSVFormatError(path, row, "sigma", "sigma must be >= 0")
    if np.any(np.diff(t[:, 0]) <= 0):
        row = int(np.nonzero(np.diff(t[:, 0]) <= 0)[0][0]) + 3
        raise CSVFormatError(path, row, "tau_us", "tau must be strictly increasing")
    return DecayCurve(t[:, 0], t[:, 1], t[:, 2], {"source": str(path)})


def write_gamma_table(path, rows):
    atomic_write(path, table_text(GAMMA_HEADER, rows))


def read_gamma_table(path):
    t = read_table(path, GAMMA_HEADER)
    if np.any(t[:, 2] < 0):
        row = int(np.nonzero(t[:, 2] < 0)[0][0]) + 2
        raise CSVFormatError(path, row, "gamma_err_khz", "uncertainty must be >= 0")
    return [tuple(r) for r in t]


def write_temperature_table(path, rows):
    atomic_write(path, table_text(TEMPERATURE_HEADER, rows))


def read_temperature_table(path):
    t = read_table(path, TEMPERATURE_HEADER)
    for col, name in enumerate(TEMPERATURE_HEADER):
        if np.any(t[:, col] <= 0):
            row = int(np.nonzero(t[:, col] <= 0)[0][0]) + 2
            raise CSVFormatError(path, row, name, "value must be > 0")
    return [tuple(r) for r in t]


def write_spectrum_csv(path, spectrum: NoiseSpectrum):
    rows = [(p.f, p.s_e_perp, p.sigma) for p in spectrum.points]
    atomic_write(path, table_text(SPECTRUM_HEADER, rows))


def read_spectrum_csv(path) -> NoiseSpectrum:
    t = read_table(path, SPECTRUM_HEADER)
    if np.any(np.diff(t[:, 0]) <= 0):
        row = int(np.nonzero(np.diff(t[:, 0]) <= 0)[0][0]) + 3
        raise CSVFormatError(path, row, "f_mhz", "frequencies must be strictly ascending")
    return NoiseSpectrum([NoisePoint(*r) for r in t], {"source": str(path)})


def sniff_header(path):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    return tuple(c.strip() for c in first.strip().split(","))


def parse_config_file(path) -> dict:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", key="config") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'", key="config")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key", key="config")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}", key=key)
        out[key] = value
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def build_report(command, inputs, config, results, tool_version, timestamp=None) -> dict:
    ts = timestamp or _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": tool_version,
        "command": command,
        "inputs": [{"path": str(p), "sha256": sha256_file(p)} for p in inputs],
        "config": _jsonable(config),
        "results": _jsonable(results),
        "created_utc": ts,
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(path, report: dict):
    atomic_write(path, dumps_report(report))


def read_report(path) -> dict:
    try:
        rep = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not a report: {exc}", key="report") from None
    if rep.get("schema_version") != SCHEMA_VERSION:
        raise InvalidInputError(f"{path}: unsupported schema_version", key="schema_version")
    return rep


def verify_report(report: dict, base_dir=None) -> list:
    """Recompute input hashes; returns the list of mismatching paths."""
    bad = []
    for entry in report.get("inputs", []):
        p = Path(entry["path"])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        if not p.exists() or sha256_file(p) != entry["sha256"]:
            bad.append(entry["path"])
    return bad
