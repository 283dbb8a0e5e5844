"""Physical layouts: how a flattened storage plan maps onto buffers.

Three layouts implement one contract. "per_field" keeps one growable buffer
per leaf, the classic structure-of-arrays shape. "arena" packs every leaf
into a single allocation with fixed per-tag capacities and aligned
sub-arrays; it never reallocates and fails loudly when capacity runs out.
"aos" interleaves all fixed-extent main-tag leaves into one record struct
per element, with jagged pools, prefix sums, and globals kept in a trailing
per-field region.

Leaves with extent multiplier m store m independent slots per tagged
element. The canonical flat index is slot-major: flat = slot * size + index,
so within one slot consecutive flat indices are physically contiguous in the
per-field and arena layouts and strided by the record size in the aos
layout. Callers must not assume contiguity; element addressing is whatever
the layout says it is.

Size-changing operations zero-fill new elements through context memset and
move survivors with overlap-safe context copies, so they work unchanged for
collections resident on the mock device.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import memctx
from .errors import (
    AccessError,
    BoundsError,
    CapacityError,
    LayoutError,
    NotResizableError,
    PlanError,
)
from .schema import (
    I64,
    MAIN_TAG,
    ROLE_ELEMENT,
    ROLE_GLOBAL,
    ROLE_PREFIX_SUM,
    U64,
    LeafField,
    ScalarType,
    StoragePlan,
)

PER_FIELD = "per_field"
ARENA = "arena"
AOS = "aos"
LAYOUT_KINDS = (PER_FIELD, ARENA, AOS)

_MIN_GROW_CAPACITY = 4


@dataclass(frozen=True)
class AccessFlags:
    readable: bool = False
    writable: bool = False
    resizable: bool = False


_NO_ACCESS = AccessFlags()


@dataclass(frozen=True)
class LayoutCapabilities:
    """What a layout instance can do, per execution context.

    size_type and difference_type describe the integer widths used for
    element counts and index arithmetic. The access map grants element
    visibility per execution context; a context that may resize may also
    write.
    """

    kind: str
    memory_context: str
    size_type: ScalarType = U64
    difference_type: ScalarType = I64
    access: Mapping[str, AccessFlags] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for ctx, flags in self.access.items():
            if flags.resizable and not flags.writable:
                raise LayoutError(f"capabilities for {ctx!r}: resizable requires writable")

    def flags(self, exec_context: str) -> AccessFlags:
        return self.access.get(exec_context, _NO_ACCESS)


@dataclass(frozen=True)
class ArenaSpec:
    """Fixed capacities (elements per size tag) and sub-array alignment."""

    capacities: Mapping[str, int]
    alignment: int = 64

    def __post_init__(self) -> None:
        if self.alignment < 1 or (self.alignment & (self.alignment - 1)) != 0:
            raise PlanError(f"arena alignment must be a power of two, got {self.alignment}")
        for tag, cap in self.capacities.items():
            if not isinstance(cap, int) or cap < 0:
                raise PlanError(f"arena capacity for tag {tag!r} must be a non-negative integer, got {cap!r}")
        object.__setattr__(self, "capacities", dict(self.capacities))


def _align_up(value: int, alignment: int) -> int:
    return (value + alignment - 1) & ~(alignment - 1)


class ElementRef:
    """Location of one scalar; stable until the next size-changing op."""

    __slots__ = ("_layout", "_leaf", "_flat")

    def __init__(self, layout: "LayoutInstance", leaf: LeafField, flat: int) -> None:
        self._layout = layout
        self._leaf = leaf
        self._flat = flat

    @property
    def value(self):
        return self._layout.read_element(self._leaf, self._flat)

    @value.setter
    def value(self, v) -> None:
        self._layout.write_element(self._leaf, self._flat, v)


class LayoutInstance:
    """Shared behavior for all layouts: sizes, guards, size-changing ops."""

    kind: str = ""

    def __init__(self, plan: StoragePlan, info: memctx.ContextInfo) -> None:
        self.plan = plan
        self.info = info
        self._sizes: dict[str, int] = {t.id: 0 for t in plan.size_tags}
        self._caps: dict[str, int] = {t.id: 0 for t in plan.size_tags}
        self._freed = False
        self.capabilities = self._build_capabilities()

    # -- capabilities and guards -----------------------------------------

    def _build_capabilities(self) -> LayoutCapabilities:
        ctx = memctx.get_context(self.info.context)
        access = {name: AccessFlags(True, True, True) for name in ctx.accessible_from}
        return LayoutCapabilities(kind=self.kind, memory_context=self.info.context, access=access)

    def _flags(self) -> AccessFlags:
        return self.capabilities.flags(memctx.current_execution_context())

    def check_readable(self) -> None:
        if not self._flags().readable:
            raise AccessError(
                f"elements of a {self.info.context!r}-resident collection are not readable "
                f"from execution context {memctx.current_execution_context()!r}"
            )

    def check_writable(self) -> None:
        if not self._flags().writable:
            raise AccessError(
                f"elements of a {self.info.context!r}-resident collection are not writable "
                f"from execution context {memctx.current_execution_context()!r}"
            )

    def _check_resizable(self) -> None:
        if self._engine_depth:
            return
        if not self._flags().resizable:
            raise NotResizableError(
                f"size-changing operations on a {self.info.context!r}-resident collection are not "
                f"allowed from execution context {memctx.current_execution_context()!r}"
            )

    _engine_depth = 0

    @contextmanager
    def engine_ops(self):
        """Lift the resize guard for transfer-engine internals."""
        self._engine_depth += 1
        try:
            yield
        finally:
            self._engine_depth -= 1

    # -- geometry ----------------------------------------------------------

    def size(self, tag: str = MAIN_TAG) -> int:
        return self._sizes[tag]

    def capacity(self, tag: str = MAIN_TAG) -> int:
        return self._caps[tag]

    def tags(self) -> tuple[str, ...]:
        return tuple(self._sizes)

    def plane_count(self, leaf: LeafField) -> int:
        return leaf.extent_multiplier

    def plane_len(self, leaf: LeafField) -> int:
        if leaf.role == ROLE_GLOBAL:
            return 1
        if leaf.role == ROLE_PREFIX_SUM:
            return self._sizes[MAIN_TAG] + 1
        return self._sizes[leaf.size_tag]

    def _cap_len(self, leaf: LeafField) -> int:
        if leaf.role == ROLE_GLOBAL:
            return 1
        if leaf.role == ROLE_PREFIX_SUM:
            return self._caps[MAIN_TAG] + 1
        return self._caps[leaf.size_tag]

    def leaf_len(self, leaf: LeafField | str) -> int:
        leaf = self._leaf(leaf)
        return self.plane_count(leaf) * self.plane_len(leaf)

    def _leaf(self, leaf: LeafField | str) -> LeafField:
        if isinstance(leaf, LeafField):
            return leaf
        return self.plan.leaf(leaf)

    def _tag_element_leaves(self, tag: str) -> tuple[LeafField, ...]:
        return tuple(lf for lf in self.plan.leaves if lf.size_tag == tag and lf.role == ROLE_ELEMENT)

    def _prefix_leaves(self) -> tuple[LeafField, ...]:
        return tuple(lf for lf in self.plan.leaves if lf.role == ROLE_PREFIX_SUM)

    # -- buffers (implemented by concrete layouts) --------------------------

    def buffers(self) -> list[memctx.Buffer]:
        raise NotImplementedError

    def _plane_region(self, leaf: LeafField, k: int) -> tuple[memctx.Buffer, int]:
        """Buffer and byte offset of plane k. Planes here are contiguous."""
        raise NotImplementedError

    def _plane_view(self, leaf: LeafField, k: int) -> np.ndarray:
        buf, base = self._plane_region(leaf, k)
        isz = leaf.value_type.size_bytes
        n = self.plane_len(leaf)
        return buf._data[base : base + n * isz].view(leaf.value_type.np_dtype)

    def _column_view(self, leaf: LeafField) -> np.ndarray:
        """Writable view of the whole leaf: 1D, or (planes, size) when multi-slot."""
        planes = self.plane_count(leaf)
        if planes == 1:
            return self._plane_view(leaf, 0)
        buf, base = self._plane_region(leaf, 0)
        isz = leaf.value_type.size_bytes
        cap_len = self._cap_len(leaf)
        whole = buf._data[base : base + planes * cap_len * isz].view(leaf.value_type.np_dtype)
        return whole.reshape(planes, cap_len)[:, : self.plane_len(leaf)]

    def _ensure_capacity(self, tag: str, need: int) -> None:
        raise NotImplementedError

    def _shrink_capacity(self, tag: str) -> None:
        raise NotImplementedError

    # -- element moves (generic, contiguous-plane based) ---------------------

    def _move_leaf(self, leaf: LeafField, src: int, dst: int, count: int) -> None:
        if count <= 0 or src == dst:
            return
        isz = leaf.value_type.size_bytes
        for k in range(self.plane_count(leaf)):
            buf, base = self._plane_region(leaf, k)
            memctx.memcopy_with_context(buf, base + dst * isz, buf, base + src * isz, count * isz)

    def _zero_leaf(self, leaf: LeafField, start: int, count: int) -> None:
        if count <= 0:
            return
        isz = leaf.value_type.size_bytes
        for k in range(self.plane_count(leaf)):
            buf, base = self._plane_region(leaf, k)
            memctx.memset(buf, 0, base + start * isz, count * isz)

    def _move_tag_block(self, tag: str, src: int, dst: int, count: int) -> None:
        for leaf in self._tag_element_leaves(tag):
            self._move_leaf(leaf, src, dst, count)

    def _zero_tag_block(self, tag: str, start: int, count: int) -> None:
        for leaf in self._tag_element_leaves(tag):
            self._zero_leaf(leaf, start, count)

    # -- size-changing operations -------------------------------------------

    def _check_tag(self, tag: str) -> None:
        if tag not in self._sizes:
            raise LayoutError(f"unknown size tag {tag!r}")

    def resize(self, tag: str, new_size: int) -> None:
        """Set the tag size; new elements are zero-filled."""
        self._check_tag(tag)
        self._check_resizable()
        if new_size < 0:
            raise BoundsError(f"negative size {new_size}")
        old = self._sizes[tag]
        if new_size > old:
            self._ensure_capacity(tag, new_size)
            self._sizes[tag] = new_size
            self._zero_tag_block(tag, old, new_size - old)
            if tag == MAIN_TAG:
                for p in self._prefix_leaves():
                    self._zero_leaf(p, old + 1, new_size - old)
        else:
            self._sizes[tag] = new_size

    def reserve(self, tag: str, capacity: int) -> None:
        self._check_tag(tag)
        self._check_resizable()
        if capacity < 0:
            raise BoundsError(f"negative capacity {capacity}")
        self._ensure_capacity(tag, capacity)

    def clear(self, tag: str) -> None:
        self._check_tag(tag)
        self._check_resizable()
        self._sizes[tag] = 0

    def shrink_to_fit(self, tag: str) -> None:
        self._check_tag(tag)
        self._check_resizable()
        self._shrink_capacity(tag)

    def insert(self, tag: str, index: int, count: int) -> None:
        """Open a zero-filled gap of count elements at index."""
        self._check_tag(tag)
        self._check_resizable()
        n = self._sizes[tag]
        if count < 0:
            raise BoundsError(f"negative insert count {count}")
        if not 0 <= index <= n:
            raise BoundsError(f"insert index {index} outside [0, {n}]")
        if count == 0:
            return
        self._ensure_capacity(tag, n + count)
        self._sizes[tag] = n + count
        self._move_tag_block(tag, index, index + count, n - index)
        self._zero_tag_block(tag, index, count)
        if tag == MAIN_TAG:
            for p in self._prefix_leaves():
                self._move_leaf(p, index + 1, index + 1 + count, n - index)
                self._zero_leaf(p, index + 1, count)

    def erase(self, tag: str, index: int, count: int) -> None:
        """Remove count elements starting at index, closing the gap."""
        self._check_tag(tag)
        self._check_resizable()
        n = self._sizes[tag]
        if count < 0:
            raise BoundsError(f"negative erase count {count}")
        if index < 0 or index + count > n:
            raise BoundsError(f"erase range [{index}, {index + count}) outside [0, {n})")
        if count == 0:
            return
        self._move_tag_block(tag, index + count, index, n - index - count)
        if tag == MAIN_TAG:
            for p in self._prefix_leaves():
                self._move_leaf(p, index + 1 + count, index + 1, n - index - count)
        self._sizes[tag] = n - count

    # -- element access -------------------------------------------------------

    def _locate(self, leaf: LeafField | str, flat: int) -> tuple[LeafField, int, int]:
        leaf = self._leaf(leaf)
        total = self.leaf_len(leaf)
        if not 0 <= flat < total:
            raise BoundsError(f"flat index {flat} outside [0, {total}) for leaf {leaf.dotted!r}")
        n = self.plane_len(leaf)
        return leaf, flat // n, flat % n

    def read_element(self, leaf: LeafField | str, flat: int):
        self.check_readable()
        leaf, k, i = self._locate(leaf, flat)
        return self._plane_view(leaf, k)[i]

    def write_element(self, leaf: LeafField | str, flat: int, value) -> None:
        self.check_writable()
        leaf, k, i = self._locate(leaf, flat)
        self._plane_view(leaf, k)[i] = value

    def element_ref(self, leaf: LeafField | str, flat: int) -> ElementRef:
        leaf = self._leaf(leaf)
        total = self.leaf_len(leaf)
        if not 0 <= flat < total:
            raise BoundsError(f"flat index {flat} outside [0, {total}) for leaf {leaf.dotted!r}")
        return ElementRef(self, leaf, flat)

    def column_np(self, leaf: LeafField | str, writable: bool = True) -> np.ndarray:
        """Guarded numpy view of a leaf, valid until the next size change."""
        if writable:
            self.check_writable()
        else:
            self.check_readable()
        return self._column_view(self._leaf(leaf))

    # -- lifecycle --------------------------------------------------------------

    def free(self) -> None:
        if self._freed:
            return
        for buf in self.buffers():
            if buf.live:
                memctx.deallocate(buf)
        self._freed = True

    def migrate(self, new_info: memctx.ContextInfo) -> None:
        """Move all storage to new_info, preserving logical contents."""
        old = self.buffers()
        fresh = memctx.update_memory_context_info(old, new_info)
        self._rebind_buffers(fresh)
        self.info = new_info
        self.capabilities = self._build_capabilities()

    def _rebind_buffers(self, fresh: list[memctx.Buffer]) -> None:
        raise NotImplementedError

    # -- engine support -----------------------------------------------------------

    def _set_sizes_for_engine(self, sizes: Mapping[str, int]) -> None:
        for tag, n in sizes.items():
            self._check_tag(tag)
            self._sizes[tag] = n

    def _refit_for_engine(self, other: "LayoutInstance") -> None:
        """Match buffer geometry of a same-kind source without copying data."""
        raise NotImplementedError


class PerFieldLayout(LayoutInstance):
    """One growable buffer per leaf. Planes are packed at capacity pitch."""

    kind = PER_FIELD

    def __init__(self, plan: StoragePlan, info: memctx.ContextInfo) -> None:
        super().__init__(plan, info)
        self._bufs: dict[str, memctx.Buffer] = {}
        for leaf in plan.leaves:
            self._bufs[leaf.dotted] = memctx.allocate(info, self._leaf_bytes(leaf, self._cap_len(leaf)))
        for leaf in plan.leaves:
            if leaf.role == ROLE_GLOBAL:
                self._zero_leaf(leaf, 0, 1)
            elif leaf.role == ROLE_PREFIX_SUM:
                self._zero_leaf(leaf, 0, 1)

    def _leaf_bytes(self, leaf: LeafField, cap_len: int) -> int:
        return self.plane_count(leaf) * cap_len * leaf.value_type.size_bytes

    def buffers(self) -> list[memctx.Buffer]:
        return [self._bufs[leaf.dotted] for leaf in self.plan.leaves]

    def _plane_region(self, leaf: LeafField, k: int) -> tuple[memctx.Buffer, int]:
        return self._bufs[leaf.dotted], k * self._cap_len(leaf) * leaf.value_type.size_bytes

    def _tag_leaves_with_storage(self, tag: str) -> tuple[LeafField, ...]:
        out = [lf for lf in self.plan.leaves if lf.size_tag == tag and lf.role == ROLE_ELEMENT]
        if tag == MAIN_TAG:
            out.extend(self._prefix_leaves())
        return tuple(out)

    def _realloc_leaf(self, leaf: LeafField, old_cap_len: int, new_cap_len: int, preserve: bool) -> None:
        old = self._bufs[leaf.dotted]
        new = memctx.allocate(self.info, self._leaf_bytes(leaf, new_cap_len))
        if preserve:
            isz = leaf.value_type.size_bytes
            used = min(self.plane_len(leaf), new_cap_len)
            for k in range(self.plane_count(leaf)):
                if used:
                    memctx.memcopy_with_context(
                        new, k * new_cap_len * isz, old, k * old_cap_len * isz, used * isz
                    )
        self._bufs[leaf.dotted] = new
        memctx.deallocate(old)

    def _retarget_tag(self, tag: str, new_cap: int, preserve: bool = True) -> None:
        old_cap = self._caps[tag]
        if new_cap == old_cap:
            return
        for leaf in self._tag_leaves_with_storage(tag):
            extra = 1 if leaf.role == ROLE_PREFIX_SUM else 0
            self._realloc_leaf(leaf, old_cap + extra, new_cap + extra, preserve)
        self._caps[tag] = new_cap

    def _ensure_capacity(self, tag: str, need: int) -> None:
        if need <= self._caps[tag]:
            return
        self._retarget_tag(tag, max(_MIN_GROW_CAPACITY, 2 * self._caps[tag], need))

    def _shrink_capacity(self, tag: str) -> None:
        if self._caps[tag] > self._sizes[tag]:
            self._retarget_tag(tag, self._sizes[tag])

    def _rebind_buffers(self, fresh: list[memctx.Buffer]) -> None:
        for leaf, buf in zip(self.plan.leaves, fresh):
            self._bufs[leaf.dotted] = buf

    def _refit_for_engine(self, other: "LayoutInstance") -> None:
        for tag in self.tags():
            if self._caps[tag] != other._caps[tag]:
                self._retarget_tag(tag, other._caps[tag], preserve=False)
            self._sizes[tag] = other._sizes[tag]


class ArenaLayout(LayoutInstance):
    """Single allocation, fixed per-tag capacities, aligned leaf sub-arrays."""

    kind = ARENA

    def __init__(self, plan: StoragePlan, info: memctx.ContextInfo, spec: ArenaSpec) -> None:
        missing = [t.id for t in plan.size_tags if t.id not in spec.capacities]
        if missing:
            raise PlanError(f"arena spec lacks capacities for size tags {missing}")
        unknown = [tag for tag in spec.capacities if not any(t.id == tag for t in plan.size_tags)]
        if unknown:
            raise PlanError(f"arena spec names unknown size tags {unknown}")
        super().__init__(plan, info)
        self.arena_spec = spec
        self._caps = {t.id: spec.capacities[t.id] for t in plan.size_tags}
        self._offsets: dict[str, int] = {}
        cursor = 0
        for leaf in plan.leaves:
            self._offsets[leaf.dotted] = cursor
            nbytes = self.plane_count(leaf) * self._cap_len(leaf) * leaf.value_type.size_bytes
            cursor += _align_up(nbytes, spec.alignment)
        self._buf = memctx.allocate(info, cursor)
        memctx.memset(self._buf, 0)

    @property
    def total_bytes(self) -> int:
        return self._buf.length_bytes

    def leaf_offset(self, leaf: LeafField | str) -> int:
        return self._offsets[self._leaf(leaf).dotted]

    def buffers(self) -> list[memctx.Buffer]:
        return [self._buf]

    def _plane_region(self, leaf: LeafField, k: int) -> tuple[memctx.Buffer, int]:
        return self._buf, self._offsets[leaf.dotted] + k * self._cap_len(leaf) * leaf.value_type.size_bytes

    def _ensure_capacity(self, tag: str, need: int) -> None:
        if need > self._caps[tag]:
            raise CapacityError(
                f"arena capacity exceeded for size tag {tag!r}: need {need}, capacity {self._caps[tag]}"
            )

    def _shrink_capacity(self, tag: str) -> None:
        pass  # fixed block, nothing to give back

    def _rebind_buffers(self, fresh: list[memctx.Buffer]) -> None:
        (self._buf,) = fresh

    def _refit_for_engine(self, other: "LayoutInstance") -> None:
        if not isinstance(other, ArenaLayout) or other.arena_spec != self.arena_spec:
            raise LayoutError("arena refit requires an identical arena spec")
        for tag in self.tags():
            self._sizes[tag] = other._sizes[tag]


class AosLayout(LayoutInstance):
    """Interleaved record struct for main-tag leaves, per-field side storage
    for jagged pools, prefix sums, and globals."""

    kind = AOS

    def __init__(self, plan: StoragePlan, info: memctx.ContextInfo) -> None:
        super().__init__(plan, info)
        self._struct_leaves = tuple(
            lf for lf in plan.leaves if lf.size_tag == MAIN_TAG and lf.role == ROLE_ELEMENT
        )
        self._struct_set = {lf.dotted for lf in self._struct_leaves}
        fields = []
        for lf in self._struct_leaves:
            if lf.extent_multiplier == 1:
                fields.append((lf.dotted, lf.value_type.np_dtype))
            else:
                fields.append((lf.dotted, lf.value_type.np_dtype, (lf.extent_multiplier,)))
        self._struct_dtype = np.dtype(fields) if fields else None
        self._side_leaves = tuple(lf for lf in plan.leaves if lf.dotted not in self._struct_set)
        self._struct_buf = memctx.allocate(info, 0) if self._struct_dtype is not None else None
        self._side_bufs: dict[str, memctx.Buffer] = {}
        for leaf in self._side_leaves:
            nbytes = self.plane_count(leaf) * self._side_cap_len(leaf) * leaf.value_type.size_bytes
            self._side_bufs[leaf.dotted] = memctx.allocate(info, nbytes)
        for leaf in self._side_leaves:
            if leaf.role in (ROLE_GLOBAL, ROLE_PREFIX_SUM):
                self._zero_leaf(leaf, 0, 1)

    @property
    def record_stride(self) -> int:
        return self._struct_dtype.itemsize if self._struct_dtype is not None else 0

    def _side_cap_len(self, leaf: LeafField) -> int:
        return self._cap_len(leaf)

    def _struct_view(self) -> np.ndarray:
        cap = self._caps[MAIN_TAG]
        return self._struct_buf._data[: cap * self.record_stride].view(self._struct_dtype)

    def buffers(self) -> list[memctx.Buffer]:
        out = [self._struct_buf] if self._struct_buf is not None else []
        out.extend(self._side_bufs[leaf.dotted] for leaf in self._side_leaves)
        return out

    # struct leaves have no contiguous planes; sides behave like per_field
    def _plane_region(self, leaf: LeafField, k: int) -> tuple[memctx.Buffer, int]:
        if leaf.dotted in self._struct_set:
            raise LayoutError(f"leaf {leaf.dotted!r} is interleaved and has no contiguous plane")
        return self._side_bufs[leaf.dotted], k * self._cap_len(leaf) * leaf.value_type.size_bytes

    def _plane_view(self, leaf: LeafField, k: int) -> np.ndarray:
        if leaf.dotted not in self._struct_set:
            return super()._plane_view(leaf, k)
        n = self.plane_len(leaf)
        col = self._struct_view()[leaf.dotted]
        if leaf.extent_multiplier == 1:
            return col[:n]
        return col[:n, k]

    def _column_view(self, leaf: LeafField) -> np.ndarray:
        if leaf.dotted not in self._struct_set:
            return super()._column_view(leaf)
        n = self.plane_len(leaf)
        col = self._struct_view()[leaf.dotted]
        if leaf.extent_multiplier == 1:
            return col[:n]
        return col[:n].T

    def _move_leaf(self, leaf: LeafField, src: int, dst: int, count: int) -> None:
        if leaf.dotted in self._struct_set:
            raise LayoutError("struct leaves move as one block")  # pragma: no cover
        super()._move_leaf(leaf, src, dst, count)

    def _move_tag_block(self, tag: str, src: int, dst: int, count: int) -> None:
        if tag == MAIN_TAG and self._struct_buf is not None and count > 0 and src != dst:
            stride = self.record_stride
            memctx.memcopy_with_context(self._struct_buf, dst * stride, self._struct_buf, src * stride, count * stride)
        for leaf in self._tag_element_leaves(tag):
            if leaf.dotted not in self._struct_set:
                super()._move_leaf(leaf, src, dst, count)

    def _zero_tag_block(self, tag: str, start: int, count: int) -> None:
        if tag == MAIN_TAG and self._struct_buf is not None and count > 0:
            stride = self.record_stride
            memctx.memset(self._struct_buf, 0, start * stride, count * stride)
        for leaf in self._tag_element_leaves(tag):
            if leaf.dotted not in self._struct_set:
                self._zero_leaf(leaf, start, count)

    def _realloc_side_leaf(self, leaf: LeafField, old_cap_len: int, new_cap_len: int, preserve: bool) -> None:
        old = self._side_bufs[leaf.dotted]
        isz = leaf.value_type.size_bytes
        new = memctx.allocate(self.info, self.plane_count(leaf) * new_cap_len * isz)
        if preserve:
            used = min(self.plane_len(leaf), new_cap_len)
            for k in range(self.plane_count(leaf)):
                if used:
                    memctx.memcopy_with_context(new, k * new_cap_len * isz, old, k * old_cap_len * isz, used * isz)
        self._side_bufs[leaf.dotted] = new
        memctx.deallocate(old)

    def _retarget_tag(self, tag: str, new_cap: int, preserve: bool = True) -> None:
        old_cap = self._caps[tag]
        if new_cap == old_cap:
            return
        if tag == MAIN_TAG and self._struct_buf is not None:
            stride = self.record_stride
            new = memctx.allocate(self.info, new_cap * stride)
            if preserve:
                used = min(self._sizes[MAIN_TAG], new_cap)
                if used:
                    memctx.memcopy_with_context(new, 0, self._struct_buf, 0, used * stride)
            memctx.deallocate(self._struct_buf)
            self._struct_buf = new
        for leaf in self._side_leaves:
            if leaf.role == ROLE_GLOBAL:
                continue
            owns = (leaf.size_tag == tag and leaf.role == ROLE_ELEMENT) or (
                tag == MAIN_TAG and leaf.role == ROLE_PREFIX_SUM
            )
            if owns:
                extra = 1 if leaf.role == ROLE_PREFIX_SUM else 0
                self._realloc_side_leaf(leaf, old_cap + extra, new_cap + extra, preserve)
        self._caps[tag] = new_cap

    def _ensure_capacity(self, tag: str, need: int) -> None:
        if need <= self._caps[tag]:
            return
        self._retarget_tag(tag, max(_MIN_GROW_CAPACITY, 2 * self._caps[tag], need))

    def _shrink_capacity(self, tag: str) -> None:
        if self._caps[tag] > self._sizes[tag]:
            self._retarget_tag(tag, self._sizes[tag])

    def _rebind_buffers(self, fresh: list[memctx.Buffer]) -> None:
        rest = fresh
        if self._struct_buf is not None:
            self._struct_buf = fresh[0]
            rest = fresh[1:]
        for leaf, buf in zip(self._side_leaves, rest):
            self._side_bufs[leaf.dotted] = buf

    def _refit_for_engine(self, other: "LayoutInstance") -> None:
        for tag in self.tags():
            if self._caps[tag] != other._caps[tag]:
                self._retarget_tag(tag, other._caps[tag], preserve=False)
            self._sizes[tag] = other._sizes[tag]


def build_layout(
    kind: str,
    plan: StoragePlan,
    info: memctx.ContextInfo | None = None,
    arena: ArenaSpec | None = None,
) -> LayoutInstance:
    """Construct a layout instance of the given kind over a storage plan.

    Arena layouts require an ArenaSpec naming a capacity for every size tag.
    Plans where a jagged vector sits inside a fixed-extent array flatten fine
    but cannot be instantiated: there is no per-slot addressing at runtime.
    """
    info = info or memctx.ContextInfo.host()
    memctx.get_context(info.context).validate_params(info.params)
    for t in plan.size_tags:
        if t.origin == "jagged" and t.multiplier != 1:
            raise PlanError(
                f"size tag {t.id!r} has multiplier {t.multiplier}; jagged vectors nested inside "
                "fixed arrays are not instantiable"
            )
    if kind == PER_FIELD:
        if arena is not None:
            raise PlanError("per_field layout does not take an arena spec")
        return PerFieldLayout(plan, info)
    if kind == ARENA:
        if arena is None:
            raise PlanError("arena layout requires an ArenaSpec")
        return ArenaLayout(plan, info, arena)
    if kind == AOS:
        if arena is not None:
            raise PlanError("aos layout does not take an arena spec")
        return AosLayout(plan, info)
    raise PlanError(f"unknown layout kind {kind!r}; expected one of {LAYOUT_KINDS}")
