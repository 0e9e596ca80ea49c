"""Byte-stream message framing for multi-process runs.

Every message is one frame::

    [u32 length, little-endian][u8 tag][payload]

where ``length`` counts the tag byte plus the payload.  Payload fields
are little-endian and fixed-width; index and replicate blocks use the
same raw little-endian array encoding as the plan dump files.  The
format is versionless by construction: peers are always the same build
on the same machine.

Workers acknowledge the two broadcast payloads (dataset and statistic)
with an ACK frame so the master can pace the tree fan-out level by
level.
"""

import struct

import numpy as np

from .dataset import Dataset
from .statistic import parse_statistic, statistic_token

DATASET = 1
SPEC = 2
PLAN_BLOCK = 3
RESULTS = 4
ERROR = 5
SHUTDOWN = 6
ACK = 7

_LEN = struct.Struct("<I")
_TAG = struct.Struct("<B")
_DATASET_HEAD = struct.Struct("<QI")     # n, ncols
_NAME_LEN = struct.Struct("<H")
_PLAN_HEAD = struct.Struct("<QQQB")      # start, nrows, n, stype code
_RESULTS_HEAD = struct.Struct("<IQQI")   # rank, start, count, p
_ERROR_HEAD = struct.Struct("<IQI")      # rank, resample index, msg len

NO_RESAMPLE = (1 << 64) - 1  # "error not tied to a resample" marker

_MAX_FRAME = (1 << 32) - 1


def send_frame(sock, tag, payload=b""):
    """Write one frame; payload may be bytes or a list of buffers."""
    chunks = [payload] if isinstance(payload, (bytes, bytearray, memoryview)) else payload
    total = sum(len(c) for c in chunks) + 1
    if total > _MAX_FRAME:
        raise ValueError(f"frame of {total} bytes exceeds the 4-byte length prefix")
    sock.sendall(_LEN.pack(total) + _TAG.pack(tag))
    for chunk in chunks:
        sock.sendall(chunk)


def _recv_exact(sock, count):
    buf = bytearray(count)
    view = memoryview(buf)
    got = 0
    while got < count:
        read = sock.recv_into(view[got:], count - got)
        if read == 0:
            raise EOFError(f"stream closed after {got} of {count} bytes")
        got += read
    return bytes(buf)


def recv_frame(sock):
    """Read one frame; raises EOFError if the peer closed the stream."""
    header = _recv_exact(sock, _LEN.size)
    (length,) = _LEN.unpack(header)
    if length < 1:
        raise EOFError("zero-length frame")
    body = _recv_exact(sock, length)
    return body[0], body[1:]


# --- payload codecs ----------------------------------------------------

def encode_dataset(data):
    names = [name.encode("utf-8") for name in data.names]
    head = [_DATASET_HEAD.pack(data.n, data.ncols)]
    for name in names:
        head.append(_NAME_LEN.pack(len(name)))
        head.append(name)
    chunks = [b"".join(head)]
    for col in data.columns:
        chunks.append(memoryview(col.astype("<f8", copy=False)).cast("B"))
    return chunks


def decode_dataset(payload):
    n, ncols = _DATASET_HEAD.unpack_from(payload, 0)
    offset = _DATASET_HEAD.size
    names = []
    for _ in range(ncols):
        (name_len,) = _NAME_LEN.unpack_from(payload, offset)
        offset += _NAME_LEN.size
        names.append(payload[offset:offset + name_len].decode("utf-8"))
        offset += name_len
    cols = []
    for _ in range(ncols):
        col = np.frombuffer(payload, dtype="<f8", count=n, offset=offset)
        cols.append(col.astype(np.float64))
        offset += n * 8
    return Dataset(names, cols)


def encode_spec(spec):
    return statistic_token(spec).encode("utf-8")


def decode_spec(payload):
    return parse_statistic(payload.decode("utf-8"))


def encode_plan_block(start, n, stype, rows):
    head = _PLAN_HEAD.pack(start, rows.shape[0], n, ord(stype.value))
    body = memoryview(np.ascontiguousarray(rows, dtype="<i8")).cast("B")
    return [head, body]


def decode_plan_block(payload):
    from .plan import Stype

    start, nrows, n, stype_code = _PLAN_HEAD.unpack_from(payload, 0)
    rows = np.frombuffer(payload, dtype="<i8", offset=_PLAN_HEAD.size)
    if rows.size != nrows * n:
        raise ValueError(f"plan block holds {rows.size} indices, expected {nrows * n}")
    rows = rows.astype(np.int64).reshape(nrows, n)
    return start, Stype(chr(stype_code)), rows


def encode_results(rank, start, replicates):
    head = _RESULTS_HEAD.pack(rank, start, replicates.shape[0], replicates.shape[1])
    body = memoryview(np.ascontiguousarray(replicates, dtype="<f8")).cast("B")
    return [head, body]


def decode_results(payload):
    rank, start, count, p = _RESULTS_HEAD.unpack_from(payload, 0)
    values = np.frombuffer(payload, dtype="<f8", offset=_RESULTS_HEAD.size)
    if values.size != count * p:
        raise ValueError(f"results hold {values.size} values, expected {count * p}")
    return rank, start, values.astype(np.float64).reshape(count, p)


def encode_error(rank, resample_index, message):
    msg = message.encode("utf-8")[:65536]
    index = NO_RESAMPLE if resample_index is None else resample_index
    return _ERROR_HEAD.pack(rank, index, len(msg)) + msg


def decode_error(payload):
    rank, index, msg_len = _ERROR_HEAD.unpack_from(payload, 0)
    msg = payload[_ERROR_HEAD.size:_ERROR_HEAD.size + msg_len].decode("utf-8")
    return rank, (None if index == NO_RESAMPLE else index), msg
