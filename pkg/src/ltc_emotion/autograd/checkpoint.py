"""Named-tensor archive.

Layout::

    LTCARCH1\\n
    <index length in bytes>\\n
    index text (UTF-8), one record per line:
        meta <key> <value>
        tensor <name> <dtype> <d0,d1,...> <offset> <nbytes>
    raw little-endian tensor data, offsets relative to the end of the index
"""
import numpy as np

from ..errors import DataError

MAGIC = b"LTCARCH1\n"
_DTYPES = {"f8": "<f8", "f4": "<f4", "i8": "<i8", "i4": "<i4", "u1": "|u1"}
_NAMES = {np.dtype(v).str: k for k, v in _DTYPES.items()}


def _check_token(kind, text):
    if not text or any(c.isspace() for c in text):
        raise DataError(f"{kind} {text!r} must be non-empty without whitespace")


def save_archive(path, tensors, meta=None):
    """Write ``tensors`` (name -> array) and string ``meta`` to ``path``."""
    lines, chunks, offset = [], [], 0
    for key, value in (meta or {}).items():
        _check_token("meta key", key)
        value = str(value)
        if "\n" in value:
            raise DataError(f"meta value for {key} contains a newline")
        lines.append(f"meta {key} {value}")
    for name, array in tensors.items():
        _check_token("tensor name", name)
        arr = np.asarray(array)
        code = _NAMES.get(arr.dtype.newbyteorder("<").str if arr.dtype.byteorder == ">"
                          else arr.dtype.str)
        if code is None:
            raise DataError(f"{name}: unsupported dtype {arr.dtype}")
        raw = np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()
        dims = ",".join(str(d) for d in arr.shape) or "-"
        lines.append(f"tensor {name} {code} {dims} {offset} {len(raw)}")
        chunks.append(raw)
        offset += len(raw)
    index = ("\n".join(lines) + "\n").encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(index)}\n".encode())
        fh.write(index)
        for raw in chunks:
            fh.write(raw)


def load_archive(path):
    """Return ``(tensors, meta)`` written by :func:`save_archive`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC):
        raise DataError(f"{path}: not a tensor archive")
    nl = blob.index(b"\n", len(MAGIC))
    n_index = int(blob[len(MAGIC):nl])
    start = nl + 1
    index = blob[start:start + n_index].decode()
    base = start + n_index
    tensors, meta = {}, {}
    for line in index.splitlines():
        if not line:
            continue
        kind, rest = line.split(" ", 1)
        if kind == "meta":
            key, _, value = rest.partition(" ")
            meta[key] = value
        elif kind == "tensor":
            name, code, dims, off, nbytes = rest.split(" ")
            shape = () if dims == "-" else tuple(int(d) for d in dims.split(","))
            off, nbytes = int(off), int(nbytes)
            if base + off + nbytes > len(blob):
                raise DataError(f"{path}: tensor {name} runs past end of file")
            arr = np.frombuffer(blob, dtype=_DTYPES[code], count=nbytes // np.dtype(_DTYPES[code]).itemsize,
                                offset=base + off)
            tensors[name] = arr.reshape(shape).copy()
        else:
            raise DataError(f"{path}: unknown index record {kind!r}")
    return tensors, meta
