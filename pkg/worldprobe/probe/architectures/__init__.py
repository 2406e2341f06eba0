# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
from typing import Dict, Type

from worldprobe.exceptions import UnknownArchitectureError

from .linear import LinearProbe
from .mlp import MLP3Probe
from .probe import Probe

__all__ = ["Probe", "LinearProbe", "MLP3Probe", "register", "get_arch", "registry"]

registry: Dict[str, Type[Probe]] = {}


def register(arch_name: str, arch_cls: Type[Probe], *arch_aliases: str) -> None:
    registry[arch_name] = arch_cls

    for alias in arch_aliases:
        registry[alias] = arch_cls


register("linear", LinearProbe, "Linear")
register("mlp3", MLP3Probe, "mlp", "MLP3")


def get_arch(arch_name: str) -> Type[Probe]:
    arch = registry.get(arch_name, None)

    if not arch:
        raise UnknownArchitectureError(
            f"Unknown probe architecture {arch_name!r},"
            f" expected one of {sorted(registry)}.")

    return arch
