# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
import logging
import os
import struct
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from worldprobe.exceptions import CorruptArtifactError, MissingArtifactError
from worldprobe.probe.dataset import ActivationDataset, RecordSink
from worldprobe.storages.storage import (
    ArtifactStorage,
    PathLike,
    Reader,
    read_sidecar,
    sidecar_path,
    write_sidecar,
)

__all__ = ["DatasetStorage", "DatasetWriter", "record_dtype"]

log = logging.getLogger(__name__)


def record_dtype(dim: int) -> np.dtype:
    """Packed little-endian record: ``dim`` float32 values, then u8 x and u8 y."""

    return np.dtype([("activation", "<f4", (dim,)), ("x", "u1"), ("y", "u1")])


class DatasetStorage(ArtifactStorage):
    """
    Activation datasets (magic ``APDS``).

    After the common header: u16 tap-name length, UTF-8 tap name, u32 record
    count, u32 activation dim, u8 margin, then the packed records.
    Provenance is written next to the file as ``<name>.json``.
    """

    magic = b"APDS"
    __version__ = 1

    def prefix(self, tap: str, count: int, dim: int, margin: int = 0) -> bytes:
        name = tap.encode("utf-8")
        return b"".join([self.header(), struct.pack("<H", len(name)), name,
                         struct.pack("<IIB", count, dim, margin)])

    def _read_prefix(self, reader: Reader) -> Tuple[str, int, int, int]:
        self.check_header(reader)

        length, = reader.unpack("<H")
        try:
            tap = reader.take(length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise CorruptArtifactError(f"{reader.name}: unreadable tap name.") from e

        count, dim, margin = reader.unpack("<IIB")
        return tap, count, dim, margin

    def dumps(self, dataset: ActivationDataset) -> bytes:
        records = np.zeros(len(dataset), dtype=record_dtype(dataset.dim))
        records["activation"] = dataset.activations
        records["x"] = dataset.xs
        records["y"] = dataset.ys

        return self.prefix(dataset.tap, len(dataset), dataset.dim,
                           dataset.margin) + records.tobytes()

    def loads(self, data: bytes, name: str = "dataset") -> ActivationDataset:
        reader = Reader(data, name)
        tap, count, dim, margin = self._read_prefix(reader)

        dtype = record_dtype(dim)
        records = np.frombuffer(reader.take(count * dtype.itemsize), dtype=dtype)
        reader.finish()

        return ActivationDataset(tap, records["activation"].astype(np.float32),
                                 records["x"].copy(), records["y"].copy(), margin)

    @staticmethod
    def sidecar(path: PathLike) -> Path:
        return sidecar_path(path)

    def save(self, dataset: ActivationDataset, path: PathLike) -> Path:
        path = super().save(dataset, path)
        write_sidecar(path, dataset.metadata)
        return path

    def load(self, path: PathLike, mmap: bool = False) -> ActivationDataset:
        """
        Read a dataset and its provenance.

        With ``mmap`` the records stay on disk and are paged in on access.
        """

        dataset = self._map(path) if mmap else super().load(path)
        dataset.metadata = read_sidecar(path) or {}
        return dataset

    def _map(self, path: PathLike) -> ActivationDataset:
        path = Path(path)
        if not path.is_file():
            raise MissingArtifactError(f"Artifact {path} does not exist.")

        with path.open("rb") as f:
            head = f.read(8)
            length = struct.unpack("<H", head[6:8])[0] if len(head) == 8 else 0
            head += f.read(length + 9)

        reader = Reader(head, str(path))
        tap, count, dim, margin = self._read_prefix(reader)

        expected = self.file_size(tap, count, dim)
        if path.stat().st_size != expected:
            raise CorruptArtifactError(
                f"{path} has {path.stat().st_size} bytes, its header implies {expected}.")

        if count == 0:
            records = np.zeros(0, dtype=record_dtype(dim))
        else:
            records = np.memmap(path, dtype=record_dtype(dim), mode="r",
                                offset=reader.offset, shape=(count,))

        return ActivationDataset(tap, records["activation"], records["x"], records["y"],
                                 margin)

    def writer(self, path: PathLike, tap: str, count: int, dim: int,
               margin: int = 0) -> "DatasetWriter":
        return DatasetWriter(self, path, tap, count, dim, margin)

    @staticmethod
    def file_size(tap: str, count: int, dim: int) -> int:
        return 4 + 2 + 2 + len(tap.encode("utf-8")) + 4 + 4 + 1 + count * (4 * dim + 2)


class DatasetWriter(RecordSink):
    """
    Streams the records of one tap into a dataset file.

    The file is sized up front and filled through a memory map, records may
    arrive in any order. :meth:`finish` moves it into place once every
    record was written.
    """

    def __init__(self, storage: DatasetStorage, path: PathLike, tap: str,
                 count: int, dim: int, margin: int = 0):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = self.path.with_name(self.path.name + ".tmp")
        self.tap = tap
        self.count = count
        self.written = 0

        prefix = storage.prefix(tap, count, dim, margin)
        with self.tmp.open("wb") as f:
            f.write(prefix)
            f.truncate(len(prefix) + count * record_dtype(dim).itemsize)

        self.records = (np.memmap(self.tmp, dtype=record_dtype(dim), mode="r+",
                                  offset=len(prefix), shape=(count,))
                        if count else None)

    def write(self, start, activations, xs, ys):
        stop = start + len(xs)
        if self.records is None or stop > self.count:
            raise CorruptArtifactError(
                f"Records {start}..{stop} do not fit into {self.path} of {self.count}.")

        block = self.records[start:stop]
        block["activation"] = activations
        block["x"] = xs
        block["y"] = ys
        self.written += len(xs)

    def finish(self, metadata: Dict[str, Any]) -> Path:
        if self.written != self.count:
            raise CorruptArtifactError(
                f"{self.path}: {self.written} of {self.count} records were written.")

        if self.records is not None:
            self.records.flush()
            self.records = None
        os.replace(self.tmp, self.path)
        write_sidecar(self.path, metadata)

        log.info(f"Saved {self.count} {self.tap} records to {self.path}")
        return self.path
