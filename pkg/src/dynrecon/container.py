"""Binary container files for every persisted artifact.

Layout (little endian throughout):

    magic "MDST" | version u16 | kind u8 | precision u8 | ndim u8 |
    3 reserved bytes | dims u64 * ndim | payload | crc32(payload) u32

Payload encodings per kind:
    series (1):     complex array, dims = (frames, height, width)
    kspace (2):     u8 masks then complex values, dims = (T, H, W, lines_per_frame)
    graph (3):      f64 weight matrix, dims = (T, T)
    params (4):     ndim 0; f64 lam1, f64 lam2, u32 nlayers, then per layer
                    u8 relu, u8 has_norm, u16 reserved, 5 * u32 kernel shape,
                    f64 kernel, f64 bias, optional f64 scale + shift
    phases (5):     f64 (T, 2) array of (cardiac, respiratory)
    history (6):    ndim 0; utf-8 line-delimited JSON
    navsig (7):     complex array, dims = (frames, signal length)

Writes are atomic (temp file + rename).
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib

import numpy as np

from .denoiser import ConvLayer, DenoiserParams
from .errors import FormatError
from .graph import ManifoldGraph
from .operators import KSpaceData
from .phantom import PhaseRecord
from .sampling import SamplingPattern

MAGIC = b"MDST"
VERSION = 1

KIND_SERIES = 1
KIND_KSPACE = 2
KIND_GRAPH = 3
KIND_PARAMS = 4
KIND_PHASES = 5
KIND_HISTORY = 6
KIND_NAVSIG = 7

PREC_F32 = 1
PREC_F64 = 2

_COMPLEX = {PREC_F32: np.complex64, PREC_F64: np.complex128}
_PREC_OF = {np.dtype(np.complex64): PREC_F32, np.dtype(np.complex128): PREC_F64}


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-mdst-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pack(kind: int, precision: int, dims: tuple[int, ...], payload: bytes) -> bytes:
    header = MAGIC + struct.pack(
        "<HBBB3x", VERSION, kind, precision, len(dims)
    ) + struct.pack(f"<{len(dims)}Q", *dims)
    return header + payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)


def write_container(path, kind, precision, dims, payload: bytes) -> None:
    _atomic_write(path, _pack(kind, precision, dims, payload))


def read_container(path, expected_kind: int | None = None):
    """Returns (kind, precision, dims, payload) after CRC verification."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12 + 4 or raw[:4] != MAGIC:
        raise FormatError(f"{path}: not a container file (bad magic)")
    version, kind, precision, ndim = struct.unpack_from("<HBBB", raw, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    offset = 12
    if len(raw) < offset + 8 * ndim + 4:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{ndim}Q", raw, offset)
    offset += 8 * ndim
    payload = raw[offset:-4]
    (crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise FormatError(f"{path}: payload CRC mismatch")
    if expected_kind is not None and kind != expected_kind:
        raise FormatError(f"{path}: expected kind {expected_kind}, found {kind}")
    return kind, precision, dims, payload


def _complex_payload(arr: np.ndarray) -> tuple[int, bytes]:
    dtype = np.dtype(arr.dtype)
    if dtype not in _PREC_OF:
        arr = arr.astype(np.complex128)
        dtype = arr.dtype
    return _PREC_OF[dtype], np.ascontiguousarray(arr).tobytes()


def _expect_size(path, payload, nbytes):
    if len(payload) != nbytes:
        raise FormatError(
            f"{path}: payload length {len(payload)} does not match "
            f"dimensions (expected {nbytes})"
        )


# --- series ----------------------------------------------------------------

def write_series(path, series: np.ndarray) -> None:
    series = np.asarray(series)
    if series.ndim != 3:
        raise ValueError("series must be (frames, height, width)")
    prec, payload = _complex_payload(series)
    write_container(path, KIND_SERIES, prec, series.shape, payload)


def read_series(path) -> np.ndarray:
    _, prec, dims, payload = read_container(path, KIND_SERIES)
    dtype = np.dtype(_COMPLEX[prec])
    _expect_size(path, payload, int(np.prod(dims)) * dtype.itemsize)
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


# --- navigator signals -----------------------------------------------------

def write_navigators(path, nav: np.ndarray) -> None:
    nav = np.asarray(nav)
    if nav.ndim != 2:
        raise ValueError("navigator signals must be (frames, siglen)")
    prec, payload = _complex_payload(nav)
    write_container(path, KIND_NAVSIG, prec, nav.shape, payload)


def read_navigators(path) -> np.ndarray:
    _, prec, dims, payload = read_container(path, KIND_NAVSIG)
    dtype = np.dtype(_COMPLEX[prec])
    _expect_size(path, payload, int(np.prod(dims)) * dtype.itemsize)
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


# --- k-space ---------------------------------------------------------------

def write_kspace(path, b: KSpaceData) -> None:
    t, h, w = b.values.shape
    prec, values = _complex_payload(b.values)
    masks = np.ascontiguousarray(b.pattern.masks.astype(np.uint8)).tobytes()
    write_container(
        path, KIND_KSPACE, prec, (t, h, w, b.pattern.lines_per_frame), masks + values
    )


def read_kspace(path) -> KSpaceData:
    _, prec, dims, payload = read_container(path, KIND_KSPACE)
    if len(dims) != 4:
        raise FormatError(f"{path}: k-space container needs 4 dimensions")
    t, h, w, lines = (int(v) for v in dims)
    n = t * h * w
    dtype = np.dtype(_COMPLEX[prec])
    _expect_size(path, payload, n + n * dtype.itemsize)
    masks = np.frombuffer(payload[:n], dtype=np.uint8).reshape(t, h, w).copy()
    values = np.frombuffer(payload[n:], dtype=dtype).reshape(t, h, w).copy()
    try:
        return KSpaceData(
            pattern=SamplingPattern(masks=masks, lines_per_frame=lines), values=values
        )
    except ValueError as exc:
        raise FormatError(f"{path}: invalid k-space content: {exc}") from exc


# --- graph -----------------------------------------------------------------

def write_graph(path, g: ManifoldGraph) -> None:
    payload = np.ascontiguousarray(g.weights, dtype=np.float64).tobytes()
    write_container(path, KIND_GRAPH, PREC_F64, g.weights.shape, payload)


def read_graph(path) -> ManifoldGraph:
    _, _, dims, payload = read_container(path, KIND_GRAPH)
    _expect_size(path, payload, int(np.prod(dims)) * 8)
    w = np.frombuffer(payload, dtype=np.float64).reshape(dims).copy()
    try:
        return ManifoldGraph(weights=w)
    except ValueError as exc:
        raise FormatError(f"{path}: invalid graph content: {exc}") from exc


# --- phases ----------------------------------------------------------------

def write_phases(path, rec: PhaseRecord) -> None:
    arr = np.stack([rec.cardiac, rec.respiratory], axis=1).astype(np.float64)
    write_container(path, KIND_PHASES, PREC_F64, arr.shape, arr.tobytes())


def read_phases(path) -> PhaseRecord:
    _, _, dims, payload = read_container(path, KIND_PHASES)
    _expect_size(path, payload, int(np.prod(dims)) * 8)
    arr = np.frombuffer(payload, dtype=np.float64).reshape(dims).copy()
    return PhaseRecord(cardiac=arr[:, 0], respiratory=arr[:, 1])


# --- denoiser parameters ---------------------------------------------------

def write_params(path, p: DenoiserParams, lam1: float, lam2: float) -> None:
    parts = [struct.pack("<ddI", float(lam1), float(lam2), len(p.layers))]
    for layer in p.layers:
        shape = layer.kernel.shape
        parts.append(
            struct.pack(
                "<BBH5I", int(layer.relu), int(layer.scale is not None), 0, *shape
            )
        )
        parts.append(np.ascontiguousarray(layer.kernel, dtype=np.float64).tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype=np.float64).tobytes())
        if layer.scale is not None:
            parts.append(np.ascontiguousarray(layer.scale, dtype=np.float64).tobytes())
            parts.append(np.ascontiguousarray(layer.shift, dtype=np.float64).tobytes())
    write_container(path, KIND_PARAMS, PREC_F64, (), b"".join(parts))


def read_params(path):
    """Returns (DenoiserParams, lam1, lam2)."""
    _, _, _, payload = read_container(path, KIND_PARAMS)
    try:
        lam1, lam2, nlayers = struct.unpack_from("<ddI", payload, 0)
        offset = struct.calcsize("<ddI")
        layers = []
        for _ in range(nlayers):
            relu, has_norm, _, *shape = struct.unpack_from("<BBH5I", payload, offset)
            offset += struct.calcsize("<BBH5I")
            out_ch, in_ch, kt, kx, ky = shape
            nk = out_ch * in_ch * kt * kx * ky
            kernel = np.frombuffer(payload, np.float64, nk, offset).reshape(shape).copy()
            offset += nk * 8
            bias = np.frombuffer(payload, np.float64, out_ch, offset).copy()
            offset += out_ch * 8
            scale = shift = None
            if has_norm:
                scale = np.frombuffer(payload, np.float64, out_ch, offset).copy()
                offset += out_ch * 8
                shift = np.frombuffer(payload, np.float64, out_ch, offset).copy()
                offset += out_ch * 8
            layers.append(
                ConvLayer(
                    kernel=kernel, bias=bias, scale=scale, shift=shift, relu=bool(relu)
                )
            )
        if offset != len(payload):
            raise FormatError(f"{path}: trailing bytes in parameter payload")
    except (struct.error, ValueError) as exc:
        raise FormatError(f"{path}: invalid parameter payload: {exc}") from exc
    return DenoiserParams(layers=tuple(layers)), lam1, lam2


# --- training history ------------------------------------------------------

def write_history(path, lines: str) -> None:
    write_container(path, KIND_HISTORY, PREC_F64, (), lines.encode("utf-8"))


def read_history(path) -> str:
    _, _, _, payload = read_container(path, KIND_HISTORY)
    return payload.decode("utf-8")
