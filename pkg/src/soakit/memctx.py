"""Memory contexts: where buffers live and who may touch them.

Two contexts ship by default. "host" is ordinary process memory. "mockdev"
is a stand-in for a device: its buffers also live in process memory, but
element access is only granted inside an execution scope named "mockdev",
it enforces a configurable capacity so allocation failure paths can be
exercised, and its copies can simulate per-byte latency. Structure-level
operations (allocate, deallocate, memset, memcopy) are always driven from
host code, mirroring how real device APIs work.

Copiers are registered per ordered (source, destination) context pair.
The registry is meant to be populated at startup and read afterwards; there
is no internal locking, callers serialize mutation.
"""

from __future__ import annotations

import itertools
import os
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from .errors import (
    AccessError,
    AllocationError,
    BufferStateError,
    CopyError,
    MemoryContextError,
    RegistryError,
)

HOST = "host"
MOCKDEV = "mockdev"

_ENV_CAPACITY = "SOAKIT_MOCKDEV_CAPACITY"
_ENV_LATENCY = "SOAKIT_MOCKDEV_LATENCY_NS_PER_BYTE"
_DEFAULT_MOCKDEV_CAPACITY = 256 * 1024 * 1024


@dataclass(frozen=True)
class ContextInfo:
    """Names a memory context plus the parameters an allocation needs."""

    context: str
    params: Mapping[str, Any] = field(default_factory=dict)

    @staticmethod
    def host() -> "ContextInfo":
        return ContextInfo(HOST)

    @staticmethod
    def mockdev(device_id: int = 0) -> "ContextInfo":
        return ContextInfo(MOCKDEV, {"device_id": device_id})


class Buffer:
    """A raw allocation owned by one memory context.

    The payload is reachable only through context operations and the guarded
    accessors of higher layers; `access_tag` says which execution contexts
    may see the contents directly.
    """

    __slots__ = ("handle", "info", "length_bytes", "_data", "_live")

    def __init__(self, handle: int, info: ContextInfo, data: np.ndarray) -> None:
        self.handle = handle
        self.info = info
        self.length_bytes = int(data.nbytes)
        self._data = data
        self._live = True

    @property
    def live(self) -> bool:
        return self._live

    @property
    def access_tag(self) -> frozenset[str]:
        return get_context(self.info.context).accessible_from

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        state = "live" if self._live else "dead"
        return f"<Buffer #{self.handle} {self.info.context} {self.length_bytes}B {state}>"


class MemoryContext:
    """Base class for memory contexts. Subclasses fill in policy hooks."""

    name: str = ""
    accessible_from: frozenset[str] = frozenset()

    def __init__(self) -> None:
        self._live: dict[int, Buffer] = {}

    # -- policy hooks --------------------------------------------------

    def validate_params(self, params: Mapping[str, Any]) -> None:
        if params:
            raise MemoryContextError(f"context {self.name!r} takes no parameters, got {dict(params)!r}")

    def check_capacity(self, nbytes: int) -> None:
        pass

    def retag_benign(self, old: Mapping[str, Any], new: Mapping[str, Any]) -> bool:
        """True when switching params needs no reallocation."""
        return dict(old) == dict(new)

    # -- lifecycle ------------------------------------------------------

    def allocate(self, info: ContextInfo, nbytes: int) -> Buffer:
        if nbytes < 0:
            raise AllocationError(f"negative allocation size {nbytes}")
        self.validate_params(info.params)
        self.check_capacity(nbytes)
        buf = Buffer(next(_handles), info, np.empty(nbytes, dtype=np.uint8))
        self._live[buf.handle] = buf
        _stats.allocations += 1
        return buf

    def deallocate(self, buffer: Buffer) -> None:
        if not buffer._live:
            raise BufferStateError(f"buffer #{buffer.handle} was already deallocated")
        if buffer.handle not in self._live:
            raise BufferStateError(f"buffer #{buffer.handle} does not belong to context {self.name!r}")
        del self._live[buffer.handle]
        buffer._live = False
        buffer._data = np.empty(0, dtype=np.uint8)
        _stats.deallocations += 1

    def memset(self, buffer: Buffer, byte: int, offset: int = 0, count: int | None = None) -> None:
        _require_live(buffer, self.name)
        if count is None:
            count = buffer.length_bytes - offset
        if not 0 <= byte <= 255:
            raise MemoryContextError(f"memset byte {byte} outside [0, 255]")
        _check_range(buffer, offset, count, "memset")
        buffer._data[offset : offset + count] = byte
        _stats.memsets += 1

    # -- accounting ------------------------------------------------------

    @property
    def live_count(self) -> int:
        return len(self._live)

    @property
    def live_bytes(self) -> int:
        return sum(b.length_bytes for b in self._live.values())

    def describe(self) -> str:
        return f"{self.name}: live_buffers={self.live_count} live_bytes={self.live_bytes}"


class HostContext(MemoryContext):
    name = HOST
    accessible_from = frozenset({HOST})


class MockDeviceContext(MemoryContext):
    """Host memory dressed up as a device.

    Capacity and per-byte copy latency come from the environment variables
    SOAKIT_MOCKDEV_CAPACITY and SOAKIT_MOCKDEV_LATENCY_NS_PER_BYTE, and can
    be changed at runtime through configure_mockdev().
    """

    name = MOCKDEV
    accessible_from = frozenset({MOCKDEV})

    def __init__(self) -> None:
        super().__init__()
        self.capacity_bytes = _env_int(_ENV_CAPACITY, _DEFAULT_MOCKDEV_CAPACITY)
        self.latency_ns_per_byte = _env_float(_ENV_LATENCY, 0.0)

    def validate_params(self, params: Mapping[str, Any]) -> None:
        extra = set(params) - {"device_id"}
        if extra:
            raise MemoryContextError(f"mockdev does not understand parameters {sorted(extra)}")
        device_id = params.get("device_id", 0)
        if not isinstance(device_id, int) or device_id < 0:
            raise MemoryContextError(f"mockdev device_id must be a non-negative integer, got {device_id!r}")

    def check_capacity(self, nbytes: int) -> None:
        if self.live_bytes + nbytes > self.capacity_bytes:
            raise AllocationError(
                f"mockdev capacity exhausted: {self.live_bytes} live + {nbytes} requested "
                f"> {self.capacity_bytes} capacity"
            )

    def retag_benign(self, old: Mapping[str, Any], new: Mapping[str, Any]) -> bool:
        return old.get("device_id", 0) == new.get("device_id", 0)

    def describe(self) -> str:
        return (
            f"{self.name}: live_buffers={self.live_count} live_bytes={self.live_bytes} "
            f"capacity={self.capacity_bytes} latency_ns_per_byte={self.latency_ns_per_byte}"
        )


@dataclass
class MemoryStats:
    allocations: int = 0
    deallocations: int = 0
    memsets: int = 0
    copy_ops: int = 0
    bytes_copied: int = 0
    copies_by_pair: dict = field(default_factory=dict)

    def snapshot(self) -> "MemoryStats":
        return MemoryStats(
            self.allocations,
            self.deallocations,
            self.memsets,
            self.copy_ops,
            self.bytes_copied,
            dict(self.copies_by_pair),
        )


_handles = itertools.count(1)
_stats = MemoryStats()
_registry: dict[str, MemoryContext] = {}
_copiers: dict[tuple[str, str], Callable] = {}
_exec_state = threading.local()


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise MemoryContextError(f"{name} must be an integer, got {raw!r}") from exc


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise MemoryContextError(f"{name} must be a number, got {raw!r}") from exc


def _require_live(buffer: Buffer, op_ctx: str | None = None) -> None:
    if not isinstance(buffer, Buffer):
        raise BufferStateError(f"expected a Buffer, got {type(buffer).__name__}")
    if not buffer._live:
        raise BufferStateError(f"buffer #{buffer.handle} is dead")


def _check_range(buffer: Buffer, offset: int, count: int, op: str) -> None:
    if offset < 0 or count < 0 or offset + count > buffer.length_bytes:
        raise CopyError(
            f"{op} range [{offset}, {offset + count}) outside buffer #{buffer.handle} "
            f"of {buffer.length_bytes} bytes"
        )


# -- registry ---------------------------------------------------------------

def register_memory_context(ctx: MemoryContext, replace: bool = False) -> None:
    if ctx.name in _registry and not replace:
        raise RegistryError(f"memory context {ctx.name!r} is already registered")
    _registry[ctx.name] = ctx


def get_context(name: str) -> MemoryContext:
    ctx = _registry.get(name)
    if ctx is None:
        raise MemoryContextError(f"unknown memory context {name!r}")
    return ctx


def context_names() -> tuple[str, ...]:
    return tuple(_registry)


# -- core operations ---------------------------------------------------------

def allocate(info: ContextInfo, nbytes: int) -> Buffer:
    """Allocate nbytes in the context named by info. Contents unspecified."""
    return get_context(info.context).allocate(info, nbytes)


def deallocate(buffer: Buffer) -> None:
    get_context(buffer.info.context).deallocate(buffer)


def memset(buffer: Buffer, byte: int, offset: int = 0, count: int | None = None) -> None:
    get_context(buffer.info.context).memset(buffer, byte, offset, count)


_ALLOWED_OPTS = frozenset({"async"})


def memcopy_with_context(
    dst: Buffer,
    dst_offset: int,
    src: Buffer,
    src_offset: int,
    count: int,
    opts: Mapping[str, Any] | None = None,
) -> None:
    """Copy count bytes between buffers, dispatching on the context pair.

    Same-buffer overlapping ranges behave as if the copy went through a
    temporary. The "async" option is accepted for interface compatibility
    but the copy always completes before returning.
    """
    _require_live(src)
    _require_live(dst)
    if opts:
        unknown = set(opts) - _ALLOWED_OPTS
        if unknown:
            raise CopyError(f"unknown memcopy options {sorted(unknown)}")
    _check_range(src, src_offset, count, "memcopy source")
    _check_range(dst, dst_offset, count, "memcopy destination")
    pair = (src.info.context, dst.info.context)
    copier = _copiers.get(pair)
    if copier is None:
        raise CopyError(f"no copier registered for context pair {pair[0]!r} -> {pair[1]!r}")
    copier(dst, dst_offset, src, src_offset, count)
    _stats.copy_ops += 1
    _stats.bytes_copied += count
    key = f"{pair[0]}->{pair[1]}"
    ops, total = _stats.copies_by_pair.get(key, (0, 0))
    _stats.copies_by_pair[key] = (ops + 1, total + count)


def register_copier(src_context: str, dst_context: str, fn: Callable, replace: bool = False) -> None:
    """Register fn(dst, dst_offset, src, src_offset, count) for the ordered pair."""
    key = (src_context, dst_context)
    if key in _copiers and not replace:
        raise RegistryError(f"copier for {src_context!r} -> {dst_context!r} is already registered")
    _copiers[key] = fn


def has_copier(src_context: str, dst_context: str) -> bool:
    return (src_context, dst_context) in _copiers


def _default_copier(dst: Buffer, dst_offset: int, src: Buffer, src_offset: int, count: int) -> None:
    latency = 0.0
    for name in {src.info.context, dst.info.context}:
        latency = max(latency, getattr(get_context(name), "latency_ns_per_byte", 0.0))
    if latency > 0.0 and count > 0:
        time.sleep(latency * count / 1e9)
    if src is dst:
        chunk = src._data[src_offset : src_offset + count].copy()
    else:
        chunk = src._data[src_offset : src_offset + count]
    dst._data[dst_offset : dst_offset + count] = chunk


# -- execution contexts -------------------------------------------------------

def current_execution_context() -> str:
    return getattr(_exec_state, "name", HOST)


@contextmanager
def execution_scope(name: str):
    """Run the body as if executing in the named context.

    Used to model device-side code: inside execution_scope("mockdev"),
    element access to mockdev buffers is granted and host buffers fault.
    """
    if name not in _registry:
        raise MemoryContextError(f"unknown execution context {name!r}")
    prev = current_execution_context()
    _exec_state.name = name
    try:
        yield
    finally:
        _exec_state.name = prev


def check_access(buffer: Buffer, write: bool = False) -> None:
    """Fault unless the current execution context may touch buffer contents."""
    _require_live(buffer)
    here = current_execution_context()
    if here not in buffer.access_tag:
        verb = "write" if write else "read"
        raise AccessError(
            f"cannot {verb} buffer #{buffer.handle} resident in {buffer.info.context!r} "
            f"from execution context {here!r}"
        )


# -- migration ----------------------------------------------------------------

def update_memory_context_info(buffers: Iterable[Buffer], new_info: ContextInfo) -> list[Buffer]:
    """Move a set of buffers to new_info, preserving contents.

    Same context with a parameter change the context declares benign: the
    buffers are retagged in place and returned unchanged. Otherwise fresh
    buffers are allocated, contents copied, and the old ones released. If
    anything fails before the swap, the originals are left intact.
    """
    bufs = list(buffers)
    for b in bufs:
        _require_live(b)
    if not bufs:
        return bufs
    ctx = get_context(new_info.context)
    ctx.validate_params(new_info.params)
    if all(b.info.context == new_info.context for b in bufs) and all(
        ctx.retag_benign(b.info.params, new_info.params) for b in bufs
    ):
        for b in bufs:
            b.info = new_info
        return bufs

    fresh: list[Buffer] = []
    try:
        for b in bufs:
            fresh.append(allocate(new_info, b.length_bytes))
        for old, new in zip(bufs, fresh):
            if old.length_bytes:
                memcopy_with_context(new, 0, old, 0, old.length_bytes)
    except MemoryContextError:
        for nb in fresh:
            if nb.live:
                deallocate(nb)
        raise
    for old in bufs:
        deallocate(old)
    return fresh


# -- statistics ----------------------------------------------------------------

def stats() -> MemoryStats:
    return _stats.snapshot()


def reset_stats() -> None:
    global _stats
    _stats = MemoryStats()


def registry_report() -> str:
    """Human-readable dump of live allocations and operation counters."""
    lines = ["memory context registry"]
    for name in sorted(_registry):
        lines.append("  " + _registry[name].describe())
    s = _stats
    lines.append(
        f"stats: allocations={s.allocations} deallocations={s.deallocations} "
        f"memsets={s.memsets} copy_ops={s.copy_ops} bytes_copied={s.bytes_copied}"
    )
    for key in sorted(s.copies_by_pair):
        ops, total = s.copies_by_pair[key]
        lines.append(f"  copies {key}: ops={ops} bytes={total}")
    return "\n".join(lines)


def configure_mockdev(capacity_bytes: int | None = None, latency_ns_per_byte: float | None = None) -> None:
    dev = get_context(MOCKDEV)
    if capacity_bytes is not None:
        if capacity_bytes < 0:
            raise MemoryContextError(f"capacity must be non-negative, got {capacity_bytes}")
        dev.capacity_bytes = capacity_bytes
    if latency_ns_per_byte is not None:
        if latency_ns_per_byte < 0:
            raise MemoryContextError(f"latency must be non-negative, got {latency_ns_per_byte}")
        dev.latency_ns_per_byte = latency_ns_per_byte


def _bootstrap() -> None:
    register_memory_context(HostContext())
    register_memory_context(MockDeviceContext())
    for src in (HOST, MOCKDEV):
        for dst in (HOST, MOCKDEV):
            register_copier(src, dst, _default_copier)


_bootstrap()
