"""Flat binary container for mask-network parameters.

Layout, all little-endian:

    bytes 0-3   magic "MXN1"
    u32         container version (currently 1)
    u32         length of the config JSON blob
    bytes       config JSON (the MaskNetConfig fields)
    u32         tensor count
    per tensor: u16 name length, name (utf-8),
                u8 ndim, ndim * u32 dims,
                float32 data in C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import MixeditError
from .film import FilmMaskNet, MaskNetConfig

MAGIC = b"MXN1"
VERSION = 1


class BadContainer(MixeditError):
    pass


def save_net(path, net: FilmMaskNet):
    cfg = net.config
    config_blob = json.dumps({
        "channels": cfg.channels, "kernel": cfg.kernel, "blocks": cfg.blocks,
        "embed_dim": cfg.embed_dim, "hidden": cfg.hidden,
        "mask_max": cfg.mask_max, "n_masks": cfg.n_masks,
    }, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(config_blob)))
        fh.write(config_blob)
        fh.write(struct.pack("<I", len(net.params)))
        for name in sorted(net.params):
            tensor = np.ascontiguousarray(net.params[name], dtype="<f4")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", tensor.ndim))
            fh.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            fh.write(tensor.tobytes())


def load_net(path) -> FilmMaskNet:
    data = Path(path).read_bytes()
    view = memoryview(data)
    if bytes(view[:4]) != MAGIC:
        raise BadContainer("not a mask-network container")
    version, config_len = struct.unpack_from("<II", view, 4)
    if version != VERSION:
        raise BadContainer(f"unsupported container version {version}")
    offset = 12
    config = MaskNetConfig(**json.loads(bytes(view[offset:offset + config_len])))
    offset += config_len
    (count,) = struct.unpack_from("<I", view, offset)
    offset += 4
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", view, offset)
        offset += 2
        name = bytes(view[offset:offset + name_len]).decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", view, offset)
        offset += 1
        dims = struct.unpack_from(f"<{ndim}I", view, offset)
        offset += 4 * ndim
        size = int(np.prod(dims)) if ndim else 1
        tensor = np.frombuffer(view, dtype="<f4", count=size, offset=offset)
        offset += 4 * size
        params[name] = tensor.reshape(dims).astype(np.float64)
    if offset != len(data):
        raise BadContainer("trailing bytes after the tensor table")
    return FilmMaskNet(config, params)
