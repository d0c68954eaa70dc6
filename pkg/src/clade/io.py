"""Binary file formats: CLTN tensors, PGM label grids, PPM images.

All writes are atomic (temp file in the destination directory + rename),
so an interrupted run never leaves a truncated file behind.
"""

import os
import tempfile

import numpy as np

CLTN_MAGIC = b"CLTN"
CLTN_VERSION = 1

_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


class FormatError(ValueError):
    """Raised for malformed or unsupported binary files."""


def atomic_write_bytes(path, data):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_cltn(path, arr):
    """Serialize a float32/float64 array (rank 1..4) to the CLTN format."""
    arr = np.ascontiguousarray(arr)
    if arr.dtype not in _DTYPE_CODES:
        raise FormatError(f"CLTN supports f32/f64, got {arr.dtype}")
    if not 1 <= arr.ndim <= 4:
        raise FormatError(f"CLTN supports rank 1..4, got rank {arr.ndim}")
    if min(arr.shape) < 1:
        raise FormatError(f"CLTN dims must be >= 1, got shape {arr.shape}")
    head = bytearray()
    head += CLTN_MAGIC
    head.append(CLTN_VERSION)
    head.append(_DTYPE_CODES[arr.dtype])
    head.append(arr.ndim)
    for d in arr.shape:
        head += int(d).to_bytes(4, "little")
    payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
    atomic_write_bytes(path, bytes(head) + payload)


def read_cltn(path):
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 7 or data[:4] != CLTN_MAGIC:
        raise FormatError(f"{path}: not a CLTN file")
    if data[4] != CLTN_VERSION:
        raise FormatError(f"{path}: unsupported CLTN version {data[4]}")
    if data[5] not in _CODE_DTYPES:
        raise FormatError(f"{path}: unknown dtype code {data[5]}")
    dtype = _CODE_DTYPES[data[5]]
    rank = data[6]
    if not 1 <= rank <= 4:
        raise FormatError(f"{path}: bad rank {rank}")
    off = 7
    if len(data) < off + 4 * rank:
        raise FormatError(f"{path}: truncated header")
    shape = tuple(
        int.from_bytes(data[off + 4 * i : off + 4 * i + 4], "little") for i in range(rank)
    )
    if min(shape) < 1:
        raise FormatError(f"{path}: bad shape {shape}")
    off += 4 * rank
    n = int(np.prod(shape))
    if len(data) != off + n * dtype.itemsize:
        raise FormatError(f"{path}: payload size mismatch for shape {shape}")
    arr = np.frombuffer(data, dtype=dtype, count=n, offset=off).reshape(shape)
    return arr.astype(dtype.newbyteorder("="))


def write_pgm(path, labels):
    """Write an integer grid as binary PGM (P5).

    8-bit when all values fit in a byte, otherwise 16-bit big-endian as the
    netpbm convention requires.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise FormatError(f"PGM needs a 2-D grid, got shape {labels.shape}")
    if labels.size == 0:
        raise FormatError("PGM grid must be non-empty")
    if np.issubdtype(labels.dtype, np.floating):
        raise FormatError("PGM stores integers; got a float array")
    vmax = int(labels.max(initial=0))
    vmin = int(labels.min(initial=0))
    if vmin < 0:
        raise FormatError(f"PGM values must be non-negative, got min {vmin}")
    if vmax > 65535:
        raise FormatError(f"PGM values must fit 16 bits, got max {vmax}")
    maxval = 255 if vmax <= 255 else 65535
    h, w = labels.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    if maxval == 255:
        payload = labels.astype(np.uint8).tobytes()
    else:
        payload = labels.astype(">u2").tobytes()
    atomic_write_bytes(path, header + payload)


def _read_pnm_tokens(data, count):
    # header tokens separated by whitespace, '#' comments run to end of line
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise FormatError("truncated PNM header")
        c = data[i : i + 1]
        if c == b"#":
            j = data.find(b"\n", i)
            i = len(data) if j < 0 else j + 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    return tokens, i + 1  # single whitespace byte after maxval precedes payload


def read_pgm(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    tokens, off = _read_pnm_tokens(data[2:], 3)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"{path}: non-numeric PGM header") from None
    if w < 1 or h < 1 or not 0 < maxval <= 65535:
        raise FormatError(f"{path}: bad PGM header {w}x{h} maxval={maxval}")
    off += 2
    if maxval <= 255:
        need = w * h
        raw = np.frombuffer(data, dtype=np.uint8, count=-1, offset=off)
        if raw.size < need:
            raise FormatError(f"{path}: truncated PGM payload")
        grid = raw[:need].reshape(h, w).astype(np.int32)
    else:
        need = w * h
        raw = np.frombuffer(data, dtype=">u2", count=-1, offset=off)
        if raw.size < need:
            raise FormatError(f"{path}: truncated PGM payload")
        grid = raw[:need].reshape(h, w).astype(np.int32)
    return grid


def write_ppm(path, img):
    """Write a (3, H, W) float image as binary PPM (P6), values round(255*clamp(x,0,1))."""
    img = np.asarray(img)
    if img.ndim == 4 and img.shape[0] == 1:
        img = img[0]
    if img.ndim != 3 or img.shape[0] != 3:
        raise FormatError(f"PPM needs a (3,H,W) image, got shape {img.shape}")
    _, h, w = img.shape
    bytes8 = np.rint(255.0 * np.clip(img, 0.0, 1.0)).astype(np.uint8)
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    # PPM payload is pixel-interleaved RGB
    atomic_write_bytes(path, header + bytes8.transpose(1, 2, 0).tobytes())


def read_ppm(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P6":
        raise FormatError(f"{path}: not a binary PPM (P6) file")
    tokens, off = _read_pnm_tokens(data[2:], 3)
    w, h, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PPM supported")
    off += 2
    raw = np.frombuffer(data, dtype=np.uint8, count=-1, offset=off)
    if raw.size < w * h * 3:
        raise FormatError(f"{path}: truncated PPM payload")
    return raw[: w * h * 3].reshape(h, w, 3).transpose(2, 0, 1).astype(np.float64) / 255.0
