"""Registry of behavior bundles.

A bundle is a named group of plain functions that operate on collections or
single-record views through their generic accessors. Schemas reference a
bundle by id, which lets record types carry callable behavior without any
backing storage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import RegistryError, UnknownBehaviorError

TARGET_OBJECT = "object"
TARGET_COLLECTION = "collection"
_TARGETS = (TARGET_OBJECT, TARGET_COLLECTION)


@dataclass(frozen=True)
class BehaviorFunction:
    """One callable in a bundle.

    target selects the first argument the function expects: an object view
    ("object") or a whole collection ("collection"). The same name may be
    registered once per target.
    """

    name: str
    target: str
    fn: Callable

    def __post_init__(self) -> None:
        if not self.name.isidentifier():
            raise RegistryError(f"behavior function name {self.name!r} is not an identifier")
        if self.target not in _TARGETS:
            raise RegistryError(f"behavior target must be one of {_TARGETS}, got {self.target!r}")
        if not callable(self.fn):
            raise RegistryError(f"behavior function {self.name!r} is not callable")


_BUNDLES: dict[str, dict[tuple[str, str], BehaviorFunction]] = {}


def register_bundle(bundle_id: str, functions: Iterable[BehaviorFunction], replace: bool = False) -> None:
    """Register a bundle under bundle_id.

    Raises RegistryError if the id is already taken (unless replace=True) or
    if two functions share a (name, target) pair.
    """
    if not bundle_id.isidentifier():
        raise RegistryError(f"bundle id {bundle_id!r} is not an identifier")
    if bundle_id in _BUNDLES and not replace:
        raise RegistryError(f"behavior bundle {bundle_id!r} is already registered")
    table: dict[tuple[str, str], BehaviorFunction] = {}
    for f in functions:
        key = (f.name, f.target)
        if key in table:
            raise RegistryError(f"duplicate behavior {f.name!r} for target {f.target!r} in bundle {bundle_id!r}")
        table[key] = f
    _BUNDLES[bundle_id] = table


def is_registered(bundle_id: str) -> bool:
    return bundle_id in _BUNDLES


def lookup(bundle_id: str, name: str, target: str) -> BehaviorFunction:
    if bundle_id not in _BUNDLES:
        raise UnknownBehaviorError(f"behavior bundle {bundle_id!r} is not registered")
    fn = _BUNDLES[bundle_id].get((name, target))
    if fn is None:
        have = sorted(n for n, t in _BUNDLES[bundle_id] if t == target)
        raise UnknownBehaviorError(
            f"bundle {bundle_id!r} has no {target}-target function {name!r} (has {have})"
        )
    return fn


def find(bundle_id: str, name: str, target: str) -> BehaviorFunction | None:
    if bundle_id not in _BUNDLES:
        raise UnknownBehaviorError(f"behavior bundle {bundle_id!r} is not registered")
    return _BUNDLES[bundle_id].get((name, target))


def function_names(bundle_id: str) -> list[tuple[str, str]]:
    if bundle_id not in _BUNDLES:
        raise UnknownBehaviorError(f"behavior bundle {bundle_id!r} is not registered")
    return sorted(_BUNDLES[bundle_id].keys())
