# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import abc
import json
import logging
import os
import struct
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from worldprobe.exceptions import (
    CorruptArtifactError,
    FormatVersionError,
    MissingArtifactError,
)

__all__ = ["ArtifactStorage", "Reader", "BlobStorage", "sidecar_path", "write_sidecar",
           "read_sidecar"]

log = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]


def sidecar_path(path: PathLike) -> Path:
    """Provenance file kept next to an artifact, ``<stem>.json``."""

    return Path(path).with_suffix(".json")


def write_sidecar(path: PathLike, payload: Dict[str, Any]) -> Path:
    sidecar = sidecar_path(path)
    sidecar.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str))
    return sidecar


def read_sidecar(path: PathLike) -> Optional[Dict[str, Any]]:
    sidecar = sidecar_path(path)
    return json.loads(sidecar.read_text()) if sidecar.is_file() else None


class Reader:
    """Cursor over the bytes of an artifact."""

    def __init__(self, data: bytes, name: str):
        self.data = data
        self.name = name
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CorruptArtifactError(
                f"{self.name} is truncated: needed {n} bytes at offset"
                f" {self.offset}, file has {len(self.data)}.")
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def finish(self) -> None:
        if self.offset != len(self.data):
            raise CorruptArtifactError(
                f"{self.name} has {len(self.data) - self.offset} trailing bytes.")


class ArtifactStorage(metaclass=abc.ABCMeta):
    """
    Versioned binary artifact format.

    Every file starts with a 4-byte magic and a little-endian u16 version.
    Files are written to a temporary name and renamed into place.
    """

    magic: bytes = b""
    __version__: int = 1

    @property
    def version(self) -> int:
        return self.__version__

    @abc.abstractmethod
    def dumps(self, obj) -> bytes:
        raise NotImplementedError()

    @abc.abstractmethod
    def loads(self, data: bytes, name: str = "artifact"):
        raise NotImplementedError()

    def header(self) -> bytes:
        return self.magic + struct.pack("<H", self.version)

    def check_header(self, reader: Reader) -> None:
        found = reader.take(len(self.magic))
        if found != self.magic:
            raise CorruptArtifactError(
                f"{reader.name}: expected magic {self.magic!r}, found {found!r}.")

        version, = reader.unpack("<H")
        if version != self.version:
            raise FormatVersionError(
                f"{reader.name}: expected format version {self.version},"
                f" found {version}.")

    def save(self, obj, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)

        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(self.dumps(obj))
        os.replace(tmp, path)

        log.info(f"Saved {type(obj).__name__} to {path}")
        return path

    def load(self, path: PathLike):
        path = Path(path)
        if not path.is_file():
            raise MissingArtifactError(f"Artifact {path} does not exist.")
        return self.loads(path.read_bytes(), str(path))


class BlobStorage(ArtifactStorage, metaclass=abc.ABCMeta):
    """
    JSON header followed by named little-endian float32 arrays.

    Layout: magic, u16 version, u32 header length, UTF-8 JSON header whose
    ``params`` entry lists ``{name, shape}`` in blob order, then the blobs.
    """

    def pack(self, header: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> bytes:
        header = dict(header)
        header["params"] = [dict(name=name, shape=list(np.shape(value)))
                            for name, value in arrays.items()]

        encoded = json.dumps(header, sort_keys=True).encode("utf-8")
        parts = [self.header(), struct.pack("<I", len(encoded)), encoded]
        parts.extend(np.ascontiguousarray(value, dtype="<f4").tobytes()
                     for value in arrays.values())
        return b"".join(parts)

    def unpack(self, data: bytes, name: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        reader = Reader(data, name)
        self.check_header(reader)

        length, = reader.unpack("<I")
        try:
            header = json.loads(reader.take(length).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CorruptArtifactError(f"{name}: unreadable header ({e}).") from e

        arrays: Dict[str, np.ndarray] = {}
        index: List[Dict[str, Any]] = header.pop("params", [])

        for entry in index:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            blob = reader.take(4 * count)
            arrays[entry["name"]] = np.frombuffer(blob, dtype="<f4").astype(
                np.float32).reshape(shape)

        reader.finish()
        return header, arrays
