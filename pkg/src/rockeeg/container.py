"""Self-describing container for arrays plus a text manifest.

Layout (all text is ASCII, lines end with ``\\n``)::

    RKEG-CONTAINER 1
    kind: <kind>
    manifest-bytes: <n>
    payload-bytes: <p>
    <blank line>
    <n bytes of JSON manifest>
    <p bytes of payload>

The manifest is JSON with sorted keys. Its ``arrays`` entry lists every array
in the payload as ``{"name", "dtype", "shape", "offset"}``. Only little-endian
``<f8`` and ``<i8`` arrays are stored, in C order, so a write/read round trip is
bit-exact and two writes of the same content are byte-identical.
"""

import json
import os

import numpy as np

from .exceptions import ContainerError

MAGIC = "RKEG-CONTAINER 1"
_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def _as_storable(name, arr):
    arr = np.asarray(arr)
    if arr.dtype.kind == "f":
        return np.ascontiguousarray(arr, dtype="<f8"), "<f8"
    if arr.dtype.kind in "iub":
        return np.ascontiguousarray(arr, dtype="<i8"), "<i8"
    raise ContainerError(f"array {name!r} has unsupported dtype {arr.dtype}")


def dumps(kind, manifest, arrays=None):
    """Serialize ``manifest`` and ``arrays`` to bytes."""
    arrays = arrays or {}
    table = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        data, code = _as_storable(name, arr)
        raw = data.tobytes(order="C")
        table.append({"name": name, "dtype": code, "shape": list(data.shape), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    body = dict(manifest)
    if "arrays" in body:
        raise ContainerError("'arrays' is a reserved manifest key")
    body["arrays"] = table
    text = json.dumps(body, sort_keys=True, indent=1, allow_nan=False).encode("ascii")
    header = (
        f"{MAGIC}\nkind: {kind}\nmanifest-bytes: {len(text)}\n"
        f"payload-bytes: {offset}\n\n"
    ).encode("ascii")
    return header + text + b"".join(chunks)


def loads(blob, kind=None):
    """Parse bytes produced by :func:`dumps`.

    Returns ``(kind, manifest, arrays)``. When ``kind`` is given the container
    must declare the same kind.
    """
    head_end = blob.find(b"\n\n")
    if head_end < 0:
        raise ContainerError("missing header terminator")
    lines = blob[:head_end].decode("ascii", errors="replace").split("\n")
    if not lines or lines[0] != MAGIC:
        raise ContainerError("not a container (bad magic line)")
    fields = {}
    for line in lines[1:]:
        key, sep, value = line.partition(": ")
        if not sep:
            raise ContainerError(f"bad header line {line!r}")
        fields[key] = value
    try:
        found_kind = fields["kind"]
        n_manifest = int(fields["manifest-bytes"])
        n_payload = int(fields["payload-bytes"])
    except (KeyError, ValueError) as exc:
        raise ContainerError(f"incomplete header: {exc}") from None
    if kind is not None and found_kind != kind:
        raise ContainerError(f"expected a {kind!r} container, found {found_kind!r}")
    start = head_end + 2
    if len(blob) != start + n_manifest + n_payload:
        raise ContainerError("container size does not match its header")
    manifest = json.loads(blob[start:start + n_manifest].decode("ascii"))
    payload = memoryview(blob)[start + n_manifest:]
    arrays = {}
    for entry in manifest.pop("arrays"):
        dtype = _DTYPES.get(entry["dtype"])
        if dtype is None:
            raise ContainerError(f"unsupported dtype {entry['dtype']!r}")
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        lo = entry["offset"]
        hi = lo + count * dtype.itemsize
        if hi > n_payload:
            raise ContainerError(f"array {entry['name']!r} overruns the payload")
        raw = np.frombuffer(payload[lo:hi], dtype=dtype).reshape(shape)
        arrays[entry["name"]] = raw.astype(dtype.newbyteorder("="))
    return found_kind, manifest, arrays


def save(path, kind, manifest, arrays=None):
    write_bytes(path, dumps(kind, manifest, arrays))


def write_bytes(path, blob):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load(path, kind=None):
    with open(path, "rb") as fh:
        return loads(fh.read(), kind=kind)


def peek_kind(path):
    with open(path, "rb") as fh:
        head = fh.read(256).split(b"\n")
    if len(head) < 2 or head[0].decode("ascii", "replace") != MAGIC:
        raise ContainerError(f"{path} is not a container")
    return head[1].decode("ascii").partition(": ")[2]
