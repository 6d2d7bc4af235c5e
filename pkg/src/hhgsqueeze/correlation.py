"""Two-time dipole correlation tables and their on-disk cache format.

A table holds the connected correlation C_c(t', t'') = <d(t')d(t'')> -
<d(t')><d(t'')> sampled on a uniform anchor grid, produced by one of the
backends (grid TDSE, strong-field approximation, or the analytic oscillator
target). The kernel is Hermitian: C_c(t'', t') = conj(C_c(t', t'')) with a
real non-negative diagonal.

Cache layout, per entry key K (sha256 over the physics inputs):
    K.bin            row-major little-endian float64, interleaved (re, im)
    K.meta.json      grid/pulse/stride/dipole-sign metadata + content hash
    K.dipole.bin     optional mean-dipole time series (float64, LE)
Writes are atomic (temp file + rename). A content hash over the binary
payload is stored in the sidecar and verified on read.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import CacheIntegrityError

# The physical dipole of the electron is d = dipole_sign * x with the
# convention recorded here; stored series are <x> so sign flips cancel in
# every bilinear quantity downstream.
DIPOLE_SIGN = -1

HERMITICITY_TOL = 1e-10


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def physics_key(meta: dict) -> str:
    """Cache key from the numerically relevant inputs in a meta dict."""
    keys = ("backend", "pulse", "grid", "potential", "sfa", "omega0",
            "dt_req", "stride", "tail_cycles", "dipole_sign")
    payload = {k: meta.get(k) for k in keys}
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()[:32]


@dataclass
class DipoleRecord:
    """Mean dipole <x>(t) on a uniform time grid."""

    times: np.ndarray
    d_mean: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.d_mean = np.asarray(self.d_mean, dtype=float)
        if self.times.shape != self.d_mean.shape or self.times.ndim != 1:
            raise ValueError("times and d_mean must be 1d arrays of equal length")


@dataclass
class CorrelationTable:
    """Connected correlation C_c on (probe_times x anchor_times)."""

    probe_times: np.ndarray
    anchor_times: np.ndarray
    c_connected: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.probe_times = np.asarray(self.probe_times, dtype=float)
        self.anchor_times = np.asarray(self.anchor_times, dtype=float)
        self.c_connected = np.asarray(self.c_connected, dtype=complex)
        if self.c_connected.shape != (self.probe_times.size, self.anchor_times.size):
            raise ValueError(
                f"table shape {self.c_connected.shape} does not match "
                f"{self.probe_times.size} probes x {self.anchor_times.size} anchors")

    @property
    def is_square(self) -> bool:
        return (self.probe_times.size == self.anchor_times.size
                and np.array_equal(self.probe_times, self.anchor_times))

    def validate(self, tol: float = HERMITICITY_TOL):
        """Check conjugate symmetry and the real non-negative diagonal."""
        c = self.c_connected
        scale = max(np.abs(c).max(), 1e-300)
        if not self.is_square:
            raise ValueError("validate requires a square table")
        herm = np.abs(c - c.conj().T).max() / scale
        if herm > tol:
            raise ValueError(f"conjugate symmetry violated: {herm:.3e} > {tol:.3e}")
        diag = np.diag(c)
        if np.abs(diag.imag).max() / scale > tol:
            raise ValueError("diagonal has a non-negligible imaginary part")
        if diag.real.min() < -tol * scale:
            raise ValueError(f"diagonal not non-negative: min {diag.real.min():.3e}")

    def merge(self, other: "CorrelationTable") -> "CorrelationTable":
        """Combine anchor columns of two shards of the same computation.

        Refuses to merge tables whose physics inputs (grid/pulse hash) differ.
        """
        if physics_key(self.meta) != physics_key(other.meta):
            raise ValueError("refusing to merge tables with mismatched physics inputs")
        if not np.array_equal(self.probe_times, other.probe_times):
            raise ValueError("refusing to merge tables with different probe grids")
        common = np.intersect1d(self.anchor_times, other.anchor_times)
        if common.size:
            raise ValueError("refusing to merge tables with overlapping anchors")
        anchors = np.concatenate([self.anchor_times, other.anchor_times])
        cols = np.concatenate([self.c_connected, other.c_connected], axis=1)
        order = np.argsort(anchors, kind="stable")
        return CorrelationTable(self.probe_times, anchors[order], cols[:, order],
                                dict(self.meta))


def _interleave(c: np.ndarray) -> bytes:
    out = np.empty(c.shape + (2,), dtype="<f8")
    out[..., 0] = c.real
    out[..., 1] = c.imag
    return out.tobytes()


def _deinterleave(buf: bytes, shape: tuple[int, int]) -> np.ndarray:
    flat = np.frombuffer(buf, dtype="<f8")
    if flat.size != shape[0] * shape[1] * 2:
        raise CacheIntegrityError(
            f"payload holds {flat.size} floats, expected {shape[0]*shape[1]*2}")
    arr = flat.reshape(shape + (2,))
    return arr[..., 0] + 1j * arr[..., 1]


def _atomic_write(path: str, data: bytes):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(table: CorrelationTable, cache_dir: str,
                dipole: DipoleRecord | None = None) -> str:
    """Write a table (and optionally its dipole record) to the cache.

    Returns the cache key.
    """
    key = physics_key(table.meta)
    payload = _interleave(table.c_connected)
    meta = dict(table.meta)
    meta["shape"] = list(table.c_connected.shape)
    meta["probe_times"] = table.probe_times.tolist()
    meta["anchor_times"] = table.anchor_times.tolist()
    meta["content_hash"] = hashlib.sha256(payload).hexdigest()
    if dipole is not None:
        dpayload = np.asarray(dipole.d_mean, dtype="<f8").tobytes()
        dtimes = np.asarray(dipole.times, dtype="<f8").tobytes()
        meta["dipole_n"] = int(dipole.d_mean.size)
        meta["dipole_hash"] = hashlib.sha256(dpayload + dtimes).hexdigest()
        _atomic_write(os.path.join(cache_dir, key + ".dipole.bin"), dtimes + dpayload)
    _atomic_write(os.path.join(cache_dir, key + ".bin"), payload)
    _atomic_write(os.path.join(cache_dir, key + ".meta.json"),
                  canonical_json(meta).encode())
    return key


def read_table(cache_dir: str, key: str,
               with_dipole: bool = False) -> tuple[CorrelationTable, DipoleRecord | None]:
    """Load a cached table, verifying the sidecar content hash."""
    meta_path = os.path.join(cache_dir, key + ".meta.json")
    bin_path = os.path.join(cache_dir, key + ".bin")
    if not (os.path.exists(meta_path) and os.path.exists(bin_path)):
        raise FileNotFoundError(f"cache entry {key} not found in {cache_dir}")
    try:
        with open(meta_path, "rb") as fh:
            meta = json.loads(fh.read().decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise CacheIntegrityError(f"sidecar for {key} is unreadable: {exc}") from exc
    with open(bin_path, "rb") as fh:
        payload = fh.read()
    if hashlib.sha256(payload).hexdigest() != meta.get("content_hash"):
        raise CacheIntegrityError(f"content hash mismatch for cache entry {key}")
    shape = tuple(meta["shape"])
    c = _deinterleave(payload, shape)
    probe = np.array(meta["probe_times"], dtype=float)
    anchor = np.array(meta["anchor_times"], dtype=float)
    table_meta = {k: v for k, v in meta.items()
                  if k not in ("shape", "probe_times", "anchor_times",
                               "content_hash", "dipole_n", "dipole_hash")}
    table = CorrelationTable(probe, anchor, c, table_meta)
    dip = None
    if with_dipole:
        dpath = os.path.join(cache_dir, key + ".dipole.bin")
        if os.path.exists(dpath):
            with open(dpath, "rb") as fh:
                draw = fh.read()
            n = int(meta["dipole_n"])
            if hashlib.sha256(draw[8 * n:] + draw[:8 * n]).hexdigest() != meta.get("dipole_hash"):
                raise CacheIntegrityError(f"dipole payload hash mismatch for {key}")
            times = np.frombuffer(draw[:8 * n], dtype="<f8")
            vals = np.frombuffer(draw[8 * n:], dtype="<f8")
            dip = DipoleRecord(times.copy(), vals.copy(), dict(table_meta))
    return table, dip


def list_cache(cache_dir: str) -> list[dict]:
    """Summaries of all entries in a cache directory."""
    out = []
    if not os.path.isdir(cache_dir):
        return out
    for name in sorted(os.listdir(cache_dir)):
        if not name.endswith(".meta.json"):
            continue
        key = name[: -len(".meta.json")]
        path = os.path.join(cache_dir, name)
        try:
            with open(path, "rb") as fh:
                meta = json.loads(fh.read().decode())
        except (ValueError, UnicodeDecodeError):
            out.append({"key": key, "status": "corrupt"})
            continue
        bin_path = os.path.join(cache_dir, key + ".bin")
        size = os.path.getsize(bin_path) if os.path.exists(bin_path) else 0
        pulse = meta.get("pulse") or {}
        out.append({
            "key": key,
            "status": "ok" if os.path.exists(bin_path) else "missing payload",
            "backend": meta.get("backend"),
            "shape": meta.get("shape"),
            "bytes": size,
            "cep": pulse.get("cep"),
            "omega": pulse.get("omega"),
        })
    return out


def remove_entry(cache_dir: str, key: str) -> int:
    """Delete one cache entry. Returns the number of files removed."""
    n = 0
    for suffix in (".bin", ".meta.json", ".dipole.bin"):
        path = os.path.join(cache_dir, key + suffix)
        if os.path.exists(path):
            os.unlink(path)
            n += 1
    return n
