"""Binary checkpoints: enough to resume a run bitwise.

Layout (all little-endian): magic "PCF1"; version u32; geometry kind u8
(0 = torus, 1 = sphere); geometry params (torus: nx u64, ny u64, length f64;
sphere: nmu u64); time f64; phi as row-major float64; CRC32 (u32) of every
byte after the magic and before the checksum. The reference density modes are
not stored — the resuming run supplies them through its config, which must
describe the same geometry.
"""

import struct
import zlib

import numpy as np

from .errors import CheckpointError

MAGIC = b"PCF1"
VERSION = 1
_KIND_TORUS = 0
_KIND_SPHERE = 1


def write_checkpoint(path, geom, state):
    """Serialize (geometry dims, time, phi) with a trailing CRC32."""
    parts = [struct.pack("<I", VERSION)]
    if geom.kind == "torus":
        parts.append(struct.pack("<B", _KIND_TORUS))
        parts.append(struct.pack("<QQd", geom.nx, geom.ny, geom.length))
    else:
        parts.append(struct.pack("<B", _KIND_SPHERE))
        parts.append(struct.pack("<Q", geom.nmu))
    parts.append(struct.pack("<d", state.time))
    parts.append(np.ascontiguousarray(state.phi, dtype="<f8").tobytes())
    payload = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def read_checkpoint(path):
    """Return {kind, params, time, phi}; CheckpointError on any corruption."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 + 1 + 8 + 4 or blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    payload, (crc_stored,) = blob[4:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise CheckpointError(f"{path}: checksum mismatch")
    off = 0
    (version,) = struct.unpack_from("<I", payload, off)
    off += 4
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    (kind_byte,) = struct.unpack_from("<B", payload, off)
    off += 1
    if kind_byte == _KIND_TORUS:
        nx, ny, length = struct.unpack_from("<QQd", payload, off)
        off += 24
        kind, params, count = "torus", {"nx": nx, "ny": ny, "length": length}, nx * ny
        shape = (nx, ny)
    elif kind_byte == _KIND_SPHERE:
        (nmu,) = struct.unpack_from("<Q", payload, off)
        off += 8
        kind, params, count = "sphere", {"nmu": nmu}, nmu
        shape = (nmu,)
    else:
        raise CheckpointError(f"{path}: unknown geometry kind {kind_byte}")
    (time,) = struct.unpack_from("<d", payload, off)
    off += 8
    expected = off + 8 * count
    if len(payload) != expected:
        raise CheckpointError(f"{path}: truncated field data "
                              f"({len(payload)} bytes, expected {expected})")
    phi = np.frombuffer(payload, dtype="<f8", count=count, offset=off).reshape(shape)
    return {"kind": kind, "params": params, "time": float(time), "phi": phi.copy()}


def check_geometry_match(geom, meta):
    """Raise CheckpointError unless geom has the checkpoint's dimensions."""
    params = meta["params"]
    if geom.kind != meta["kind"]:
        raise CheckpointError(f"checkpoint geometry is {meta['kind']}, config says {geom.kind}")
    if geom.kind == "torus":
        same = (geom.nx == params["nx"] and geom.ny == params["ny"]
                and geom.length == params["length"])
    else:
        same = geom.nmu == params["nmu"]
    if not same:
        raise CheckpointError(f"checkpoint geometry {params} does not match config")
