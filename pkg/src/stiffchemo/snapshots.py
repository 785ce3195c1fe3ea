"""Density snapshots and their on-disk formats.

CSV: ``#``-prefixed header lines carrying the resolved run config, then the
columns ``solver,t,site,x,rho`` (one row per site per snapshot).

Binary (little endian)::

    magic    8s   b"STCHSNAP"
    version  u32  1
    I        u32  lattice sites
    dx       f64
    dt       f64
    count    u64  number of snapshots
    solver   u8   0 = mc, 1 = ks
    hlen     u32  byte length of the UTF-8 config text that follows
    header   hlen bytes
    count records of: t f64, particles i64 (-1 if n/a), rho f64[I]
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Snapshot", "read_binary", "read_csv", "read_header", "read_snapshots", "write_binary",
    "write_csv", "write_table",
]

MAGIC = b"STCHSNAP"
VERSION = 1
_HEAD = struct.Struct("<8sIIddQBI")
_SOLVERS = ("mc", "ks")


@dataclass
class Snapshot:
    t: float
    rho: np.ndarray
    count: int | None = None


def _header_lines(header: str) -> list[str]:
    return [f"# {line}" if line else "#" for line in header.splitlines()]


def write_csv(path, snapshots, dx: float, solver: str = "mc", header: str = "") -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in _header_lines(header):
            fh.write(line + "\n")
        w = csv.writer(fh)
        w.writerow(["solver", "t", "site", "x", "rho"])
        for snap in snapshots:
            centers = (np.arange(snap.rho.size) + 0.5) * dx
            for i, (xc, r) in enumerate(zip(centers, snap.rho)):
                w.writerow([solver, repr(float(snap.t)), i, repr(float(xc)), repr(float(r))])


def read_csv(path) -> tuple[list[Snapshot], float, str, str]:
    """Return ``(snapshots, dx, solver, header_text)``."""
    header, body = [], []
    with Path(path).open() as fh:
        for line in fh:
            (header if line.startswith("#") else body).append(line)
    rows = list(csv.DictReader(io.StringIO("".join(body))))
    if not rows:
        raise ValueError(f"{path}: no snapshot rows")
    solver = rows[0]["solver"]
    by_t: dict[float, list[tuple[int, float, float]]] = {}
    for r in rows:
        by_t.setdefault(float(r["t"]), []).append((int(r["site"]), float(r["x"]), float(r["rho"])))
    snaps = []
    dx = None
    for t in sorted(by_t):
        entries = sorted(by_t[t])
        rho = np.array([e[2] for e in entries])
        if dx is None and len(entries) > 1:
            dx = entries[1][1] - entries[0][1]
        snaps.append(Snapshot(t, rho))
    text = "\n".join(h[2:].rstrip("\n") if h.startswith("# ") else "" for h in header)
    return snaps, float(dx), solver, text


def write_binary(path, snapshots, dx: float, dt: float, solver: str = "mc",
                 header: str = "") -> None:
    snapshots = list(snapshots)
    I = snapshots[0].rho.size if snapshots else 0
    text = header.encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, I, dx, dt, len(snapshots),
                            _SOLVERS.index(solver), len(text)))
        fh.write(text)
        for snap in snapshots:
            if snap.rho.size != I:
                raise ValueError("all snapshots must share the lattice size")
            fh.write(struct.pack("<dq", snap.t, -1 if snap.count is None else snap.count))
            fh.write(np.ascontiguousarray(snap.rho, dtype="<f8").tobytes())


def read_binary(path) -> tuple[list[Snapshot], float, float, str, str]:
    """Return ``(snapshots, dx, dt, solver, header_text)``."""
    data = Path(path).read_bytes()
    magic, version, I, dx, dt, count, solver, hlen = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    pos = _HEAD.size
    text = data[pos: pos + hlen].decode("utf-8")
    pos += hlen
    snaps = []
    for _ in range(count):
        t, n = struct.unpack_from("<dq", data, pos)
        pos += 16
        rho = np.frombuffer(data, dtype="<f8", count=I, offset=pos).copy()
        pos += 8 * I
        snaps.append(Snapshot(t, rho, None if n < 0 else n))
    return snaps, dx, dt, _SOLVERS[solver], text


def write_table(path, columns, rows, header: str = "") -> None:
    """Plain CSV with the same ``#`` header convention as snapshot files."""
    with Path(path).open("w", newline="") as fh:
        for line in _header_lines(header):
            fh.write(line + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _is_binary(path) -> bool:
    with Path(path).open("rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def read_snapshots(path) -> tuple[list[Snapshot], float, str, str]:
    """Read either format; returns ``(snapshots, dx, solver, header_text)``."""
    if _is_binary(path):
        snaps, dx, _, solver, text = read_binary(path)
        return snaps, dx, solver, text
    return read_csv(path)


def read_header(path) -> str:
    """Header text of a snapshot or table file without loading the data."""
    if _is_binary(path):
        with Path(path).open("rb") as fh:
            head = fh.read(_HEAD.size)
            hlen = _HEAD.unpack(head)[-1]
            return fh.read(hlen).decode("utf-8")
    lines = []
    with Path(path).open() as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            lines.append(line[2:].rstrip("\n") if line.startswith("# ") else "")
    return "\n".join(lines)
