"""Record-oriented access on top of a flattened layout.

A Collection owns one layout instance and keeps the jagged bookkeeping
honest: every size-changing operation leaves each prefix-sum column an
exclusive running total over the record lengths, starting at zero. Views
(records, columns, jagged segments) are cheap handles that go stale on the
next size-changing or reallocating operation and then refuse access instead
of reading through dangling storage.
"""

from __future__ import annotations

from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from . import behaviors as bh
from . import layouts as ly
from . import memctx
from .errors import (
    BoundsError,
    KindError,
    SchemaError,
    StaleViewError,
)
from .schema import (
    MAIN_TAG,
    ROLE_ELEMENT,
    ROLE_GLOBAL,
    LeafField,
    PropertyDescriptor,
    PropertyKind,
    Schema,
    StoragePlan,
    flatten,
)


def _is_simple_wrapper(desc: PropertyDescriptor) -> bool:
    # declare_array/declare_jagged simple form: a lone per-item child "value"
    return (
        len(desc.children) == 1
        and desc.children[0].kind is PropertyKind.PER_ITEM
        and desc.children[0].name == "value"
    )


def _format_value(value, value_type) -> str:
    if value_type.is_float:
        return repr(float(value))
    if value_type.code == "bool":
        return str(bool(value))
    return str(int(value))


class _Stale:
    """Mixin: captured epoch vs the collection's current one."""

    __slots__ = ()

    def _check(self) -> None:
        if self._epoch != self._coll._epoch:  # type: ignore[attr-defined]
            raise StaleViewError(
                "view is stale: the collection changed size or storage since this view was taken"
            )


class ObjectView(_Stale):
    """One record (or one jagged element) exposed through schema names.

    Per-item properties read and write as attributes. Sub-groups return
    nested views, fixed arrays FixedArrayView, jagged vectors JaggedView,
    behavior bundles a callable proxy. Globals are collection-level and not
    reachable from here.

    Array indices chosen on the way in are carried as a tuple; each leaf
    recomputes its own slot from them, since sibling leaves under an array
    of groups sit at different extents.
    """

    __slots__ = ("_coll", "_prefix", "_elem", "_choices", "_epoch")

    def __init__(self, coll: "Collection", prefix: str, elem: int, choices: tuple[int, ...]) -> None:
        object.__setattr__(self, "_coll", coll)
        object.__setattr__(self, "_prefix", prefix)
        object.__setattr__(self, "_elem", elem)
        object.__setattr__(self, "_choices", choices)
        object.__setattr__(self, "_epoch", coll._epoch)

    @property
    def index(self) -> int:
        return self._elem

    def _resolve(self, name: str) -> PropertyDescriptor:
        return self._coll.schema.find(self._prefix + name)

    def __getattr__(self, name: str):
        self._check()
        try:
            desc = self._resolve(name)
        except SchemaError as e:
            raise AttributeError(str(e)) from None
        path = self._prefix + name
        kind = desc.kind
        if kind is PropertyKind.PER_ITEM:
            leaf = self._coll.plan.leaf(path)
            slot = self._coll._slot_for(path, self._choices)
            return self._coll._read_slot(leaf, slot, self._elem)
        if kind is PropertyKind.SUB_GROUP:
            return ObjectView(self._coll, path + ".", self._elem, self._choices)
        if kind is PropertyKind.FIXED_ARRAY:
            return FixedArrayView(self._coll, path, desc, self._elem, self._choices)
        if kind is PropertyKind.JAGGED_VECTOR:
            if self._prefix:
                raise KindError(f"jagged vector {path!r} is only reachable from record views")
            return JaggedView(self._coll, path, desc, self._elem)
        if kind is PropertyKind.NO_STORAGE:
            return _BehaviorProxy(desc.behavior, bh.TARGET_OBJECT, self)
        raise KindError(f"property {path!r} of kind {kind.value} has no view")

    def __setattr__(self, name: str, value) -> None:
        self._check()
        try:
            desc = self._resolve(name)
        except SchemaError as e:
            raise AttributeError(str(e)) from None
        if desc.kind is not PropertyKind.PER_ITEM:
            raise KindError(f"cannot assign to {desc.kind.value} property {name!r}; assign through its view")
        path = self._prefix + name
        leaf = self._coll.plan.leaf(path)
        slot = self._coll._slot_for(path, self._choices)
        self._coll._write_slot(leaf, slot, self._elem, value)

    def call_behavior(self, prop_name: str, fn_name: str, *args, **kwargs):
        proxy = getattr(self, prop_name)
        if not isinstance(proxy, _BehaviorProxy):
            raise KindError(f"property {prop_name!r} is not a behavior bundle")
        return getattr(proxy, fn_name)(*args, **kwargs)


class FixedArrayView(_Stale):
    """Fixed-extent slots of one record. Simple arrays index to scalars,
    arrays of groups index to nested views."""

    __slots__ = ("_coll", "_path", "_desc", "_elem", "_choices", "_epoch", "_simple")

    def __init__(
        self, coll: "Collection", path: str, desc: PropertyDescriptor, elem: int, choices: tuple[int, ...]
    ) -> None:
        object.__setattr__(self, "_coll", coll)
        object.__setattr__(self, "_path", path)
        object.__setattr__(self, "_desc", desc)
        object.__setattr__(self, "_elem", elem)
        object.__setattr__(self, "_choices", choices)
        object.__setattr__(self, "_epoch", coll._epoch)
        object.__setattr__(self, "_simple", _is_simple_wrapper(desc))

    def __setattr__(self, name, value):
        raise AttributeError("FixedArrayView fields are read-only; assign via indexing")

    def __len__(self) -> int:
        return self._desc.extent

    def _choose(self, k: int) -> tuple[int, ...]:
        if not 0 <= k < self._desc.extent:
            raise BoundsError(f"array index {k} outside [0, {self._desc.extent}) for {self._path!r}")
        return self._choices + (k,)

    def __getitem__(self, k: int):
        self._check()
        if self._simple:
            leaf = self._coll.plan.leaf(self._path + ".value")
            slot = self._coll._slot_for(leaf.dotted, self._choose(k))
            return self._coll._read_slot(leaf, slot, self._elem)
        return ObjectView(self._coll, self._path + ".", self._elem, self._choose(k))

    def __setitem__(self, k: int, value) -> None:
        self._check()
        if not self._simple:
            raise KindError(f"array {self._path!r} holds groups; assign through their fields")
        leaf = self._coll.plan.leaf(self._path + ".value")
        slot = self._coll._slot_for(leaf.dotted, self._choose(k))
        self._coll._write_slot(leaf, slot, self._elem, value)

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def to_list(self) -> list:
        self._check()
        if not self._simple:
            return [self[k] for k in range(len(self))]
        return self._scalar_view(writable=False).tolist()

    def _scalar_view(self, writable: bool) -> np.ndarray:
        # the innermost array strides by one plane, so this record's slots
        # are the contiguous plane range starting at index (..., 0)
        col = self._coll._layout.column_np(self._path + ".value", writable=writable)
        if col.ndim == 1:  # extent-1 array stored like a plain per-item leaf
            return col[self._elem : self._elem + 1]
        base = self._coll._slot_for(self._path + ".value", self._choices + (0,))
        return col[base : base + self._desc.extent, self._elem]

    @property
    def np(self) -> np.ndarray:
        """All slots of this record as a strided 1D view (simple arrays)."""
        self._check()
        if not self._simple:
            raise KindError(f"array {self._path!r} holds groups and has no scalar view")
        return self._scalar_view(writable=True)


class JaggedView(_Stale):
    """The variable-length segment of one record."""

    __slots__ = ("_coll", "_path", "_desc", "_rec", "_epoch", "_simple")

    def __init__(self, coll: "Collection", path: str, desc: PropertyDescriptor, rec: int) -> None:
        object.__setattr__(self, "_coll", coll)
        object.__setattr__(self, "_path", path)
        object.__setattr__(self, "_desc", desc)
        object.__setattr__(self, "_rec", rec)
        object.__setattr__(self, "_epoch", coll._epoch)
        object.__setattr__(self, "_simple", _is_simple_wrapper(desc))

    def __setattr__(self, name, value):
        raise AttributeError("JaggedView fields are read-only; assign via indexing")

    def _bounds(self) -> tuple[int, int]:
        pv = self._coll._prefix_view(self._path)
        return int(pv[self._rec]), int(pv[self._rec + 1])

    def __len__(self) -> int:
        self._check()
        lo, hi = self._bounds()
        return hi - lo

    def _elem_at(self, k: int) -> int:
        lo, hi = self._bounds()
        if not 0 <= k < hi - lo:
            raise BoundsError(f"jagged index {k} outside [0, {hi - lo}) for record {self._rec} of {self._path!r}")
        return lo + k

    def __getitem__(self, k: int):
        self._check()
        if self._simple:
            leaf = self._coll.plan.leaf(self._path + ".value")
            return self._coll._read_slot(leaf, 0, self._elem_at(k))
        # extents restart inside a jagged scope, so choices restart too
        return ObjectView(self._coll, self._path + ".", self._elem_at(k), ())

    def __setitem__(self, k: int, value) -> None:
        self._check()
        if not self._simple:
            raise KindError(f"jagged vector {self._path!r} holds groups; assign through their fields")
        leaf = self._coll.plan.leaf(self._path + ".value")
        self._coll._write_slot(leaf, 0, self._elem_at(k), value)

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def resize(self, n: int) -> None:
        """Resize this record's segment. The view itself stays usable."""
        self._check()
        self._coll.jagged_resize(self._path, self._rec, n)
        object.__setattr__(self, "_epoch", self._coll._epoch)

    def fill(self, values: Sequence) -> None:
        if not self._simple:
            raise KindError(f"jagged vector {self._path!r} holds groups")
        values = list(values)
        self.resize(len(values))
        if len(values):
            lo, _ = self._bounds()
            leaf = self._coll.plan.leaf(self._path + ".value")
            col = self._coll._layout.column_np(leaf)
            col[lo : lo + len(values)] = np.asarray(values, dtype=leaf.value_type.np_dtype)

    def to_list(self) -> list:
        self._check()
        if not self._simple:
            raise KindError(f"jagged vector {self._path!r} holds groups")
        lo, hi = self._bounds()
        leaf = self._coll.plan.leaf(self._path + ".value")
        col = self._coll._layout.column_np(leaf, writable=False)
        return col[lo:hi].tolist()

    @property
    def np(self) -> np.ndarray:
        self._check()
        if not self._simple:
            raise KindError(f"jagged vector {self._path!r} holds groups and has no scalar view")
        lo, hi = self._bounds()
        leaf = self._coll.plan.leaf(self._path + ".value")
        return self._coll._layout.column_np(leaf)[lo:hi]


class ColumnView(_Stale):
    """Whole-column handle over one leaf."""

    __slots__ = ("_coll", "_leaf", "_epoch")

    def __init__(self, coll: "Collection", leaf: LeafField) -> None:
        self._coll = coll
        self._leaf = leaf
        self._epoch = coll._epoch

    @property
    def leaf(self) -> LeafField:
        return self._leaf

    @property
    def np(self) -> np.ndarray:
        """Writable numpy view: 1D, or (slots, n) for multi-slot leaves."""
        self._check()
        return self._coll._layout.column_np(self._leaf)

    def read(self) -> np.ndarray:
        self._check()
        return self._coll._layout.column_np(self._leaf, writable=False)

    def __len__(self) -> int:
        self._check()
        return self._coll._layout.plane_len(self._leaf)

    def __getitem__(self, idx):
        return self.read()[idx]

    def __setitem__(self, idx, value) -> None:
        self.np[idx] = value

    def fill(self, value) -> None:
        self.np[...] = value


class _BehaviorProxy:
    __slots__ = ("_bundle", "_target", "_subject")

    def __init__(self, bundle: str, target: str, subject) -> None:
        self._bundle = bundle
        self._target = target
        self._subject = subject

    def __getattr__(self, fn_name: str):
        fn = bh.lookup(self._bundle, fn_name, self._target)
        subject = self._subject

        def bound(*args, **kwargs):
            return fn.fn(subject, *args, **kwargs)

        bound.__name__ = fn_name
        return bound


class Collection:
    """Records stored through a flattened schema on a chosen layout.

    kind selects the physical layout ("per_field", "arena", "aos"); arena
    layouts need an ArenaSpec. info places the storage in a memory context,
    host by default.
    """

    def __init__(
        self,
        schema: Schema,
        kind: str = ly.PER_FIELD,
        info: memctx.ContextInfo | None = None,
        arena: ly.ArenaSpec | None = None,
    ) -> None:
        self.schema = schema
        self.plan: StoragePlan = flatten(schema)
        self._layout = ly.build_layout(kind, self.plan, info, arena)
        self._epoch = 0

    # -- introspection -------------------------------------------------------

    @property
    def kind(self) -> str:
        return self._layout.kind

    @property
    def info(self) -> memctx.ContextInfo:
        return self._layout.info

    @property
    def layout(self) -> ly.LayoutInstance:
        return self._layout

    @property
    def capabilities(self) -> ly.LayoutCapabilities:
        return self._layout.capabilities

    def size(self) -> int:
        return self._layout.size(MAIN_TAG)

    def __len__(self) -> int:
        return self.size()

    def capacity(self, tag: str = MAIN_TAG) -> int:
        return self._layout.capacity(tag)

    def jagged_size(self, path: str) -> int:
        self._jagged_desc(path)
        return self._layout.size(path)

    # -- internal plumbing -----------------------------------------------------

    def _bump(self) -> None:
        self._epoch += 1

    def _slot_for(self, path: str, choices: tuple[int, ...]) -> int:
        """Row-major plane index of a leaf given the array indices chosen
        along its path. Crossing a jagged vector restarts the count."""
        slot = 0
        ci = 0
        props: Sequence[PropertyDescriptor] = self.schema.properties
        for part in path.split("."):
            desc = next((p for p in props if p.name == part), None)
            if desc is None:
                break  # synthetic tail like ".value" on simple wrappers
            if desc.kind is PropertyKind.FIXED_ARRAY:
                slot = slot * desc.extent + choices[ci]
                ci += 1
            elif desc.kind is PropertyKind.JAGGED_VECTOR:
                slot, ci = 0, 0
            props = desc.children
        return slot

    def _read_slot(self, leaf: LeafField, slot: int, elem: int):
        n = self._layout.plane_len(leaf)
        return self._layout.read_element(leaf, slot * n + elem)

    def _write_slot(self, leaf: LeafField, slot: int, elem: int, value) -> None:
        n = self._layout.plane_len(leaf)
        self._layout.write_element(leaf, slot * n + elem, value)

    def _jagged_desc(self, path: str) -> PropertyDescriptor:
        desc = self.schema.find(path)
        if desc.kind is not PropertyKind.JAGGED_VECTOR:
            raise KindError(f"property {path!r} is not a jagged vector")
        return desc

    def _prefix_view(self, path: str) -> np.ndarray:
        # internal, unguarded: collection code maintains the prefix invariant
        return self._layout._plane_view(self.plan.leaf(path + ".prefix_sum"), 0)

    def _jagged_paths(self) -> list[str]:
        return [t.id for t in self.plan.jagged_tags()]

    # -- size-changing operations ------------------------------------------------

    def resize(self, n: int) -> None:
        """Grow with zeroed records and empty jagged segments, or shrink."""
        old = self.size()
        self._bump()
        if n > old:
            self._layout.resize(MAIN_TAG, n)
            for path in self._jagged_paths():
                pv = self._prefix_view(path)
                pv[old + 1 : n + 1] = pv[old]
        elif n < old:
            for path in self._jagged_paths():
                end = int(self._prefix_view(path)[n])
                self._layout.resize(path, end)
            self._layout.resize(MAIN_TAG, n)

    def reserve(self, n: int, path: str | None = None) -> None:
        self._bump()
        if path is None:
            self._layout.reserve(MAIN_TAG, n)
        else:
            self._jagged_desc(path)
            self._layout.reserve(path, n)

    def clear(self) -> None:
        self._bump()
        for path in self._jagged_paths():
            self._layout.clear(path)
        self._layout.clear(MAIN_TAG)

    def shrink_to_fit(self) -> None:
        self._bump()
        for tag in self._layout.tags():
            self._layout.shrink_to_fit(tag)

    def insert_records(self, index: int, count: int) -> None:
        """Insert zeroed records with empty jagged segments before index."""
        self._bump()
        self._layout.insert(MAIN_TAG, index, count)
        if count:
            for path in self._jagged_paths():
                pv = self._prefix_view(path)
                pv[index + 1 : index + 1 + count] = pv[index]

    def erase_records(self, index: int, count: int) -> None:
        """Erase records along with their jagged segments."""
        n = self.size()
        if count < 0 or index < 0 or index + count > n:
            raise BoundsError(f"erase range [{index}, {index + count}) outside [0, {n})")
        self._bump()
        deltas: dict[str, int] = {}
        for path in self._jagged_paths():
            pv = self._prefix_view(path)
            lo, hi = int(pv[index]), int(pv[index + count])
            self._layout.erase(path, lo, hi - lo)
            deltas[path] = hi - lo
        self._layout.erase(MAIN_TAG, index, count)
        for path, delta in deltas.items():
            if delta:
                pv = self._prefix_view(path)
                pv[index + 1 :] -= pv.dtype.type(delta)

    def jagged_resize(self, path: str, record: int, length: int) -> None:
        """Set the segment length of one record, keeping later segments."""
        self._jagged_desc(path)
        n = self.size()
        if not 0 <= record < n:
            raise BoundsError(f"record {record} outside [0, {n})")
        if length < 0:
            raise BoundsError(f"negative segment length {length}")
        pv = self._prefix_view(path)
        lo, hi = int(pv[record]), int(pv[record + 1])
        delta = length - (hi - lo)
        if delta == 0:
            return
        self._bump()
        if delta > 0:
            self._layout.insert(path, hi, delta)
        else:
            self._layout.erase(path, lo + length, -delta)
        pv = self._prefix_view(path)
        tail = pv[record + 1 :]
        # via int64 so shrinking works on unsigned prefix columns too
        tail[...] = (tail.astype(np.int64) + delta).astype(pv.dtype)

    def jagged_fill(self, path: str, segments: Sequence[Sequence]) -> None:
        """Replace every segment at once; lengths follow the given lists."""
        desc = self._jagged_desc(path)
        if not _is_simple_wrapper(desc):
            raise KindError(f"jagged vector {path!r} holds groups; fill segments individually")
        n = self.size()
        if len(segments) != n:
            raise BoundsError(f"expected {n} segments, got {len(segments)}")
        leaf = self.plan.leaf(path + ".value")
        arrays = [np.asarray(seg, dtype=leaf.value_type.np_dtype) for seg in segments]
        lengths = [a.size for a in arrays]
        total = sum(lengths)
        self._bump()
        self._layout.resize(path, total)
        pv = self._prefix_view(path)
        pv[0] = 0
        if n:
            pv[1:] = np.cumsum(np.array(lengths, dtype=np.int64)).astype(pv.dtype)
        if total:
            self._layout.column_np(leaf)[:] = np.concatenate(arrays)

    def push_record(self, values: Mapping[str, Any] | None = None, **kw) -> ObjectView:
        """Append one record. Validation and capacity checks run before any
        change, so a failed push leaves the collection as it was."""
        data = dict(values or {})
        data.update(kw)
        n = self.size()
        scalar_writes: list[tuple[LeafField, list]] = []
        jagged_writes: list[tuple[str, LeafField, np.ndarray]] = []
        for path, value in data.items():
            desc = self.schema.find(path)
            if desc.kind is PropertyKind.PER_ITEM:
                leaf = self.plan.leaf(path)
                vals = list(value) if leaf.extent_multiplier > 1 else [value]
                if len(vals) != leaf.extent_multiplier:
                    raise BoundsError(
                        f"property {path!r} spans {leaf.extent_multiplier} slots, got {len(vals)} values"
                    )
                scalar_writes.append((leaf, [leaf.value_type.np_dtype.type(v) for v in vals]))
            elif desc.kind is PropertyKind.FIXED_ARRAY and _is_simple_wrapper(desc):
                leaf = self.plan.leaf(path + ".value")
                vals = list(value)
                if len(vals) != leaf.extent_multiplier:
                    raise BoundsError(
                        f"array {path!r} spans {leaf.extent_multiplier} slots, got {len(vals)} values"
                    )
                scalar_writes.append((leaf, [leaf.value_type.np_dtype.type(v) for v in vals]))
            elif desc.kind is PropertyKind.JAGGED_VECTOR and _is_simple_wrapper(desc):
                leaf = self.plan.leaf(path + ".value")
                jagged_writes.append((path, leaf, np.asarray(list(value), dtype=leaf.value_type.np_dtype)))
            else:
                raise KindError(f"cannot push into {desc.kind.value} property {path!r}")
        # capacity first: these may fail, but they never touch logical state
        self._bump()
        self._layout.reserve(MAIN_TAG, n + 1)
        for path, _, arr in jagged_writes:
            self._layout.reserve(path, self._layout.size(path) + arr.size)
        self.resize(n + 1)
        for leaf, vals in scalar_writes:
            for slot, v in enumerate(vals):
                self._write_slot(leaf, slot, n, v)
        for path, leaf, arr in jagged_writes:
            self.jagged_resize(path, n, int(arr.size))
            if arr.size:
                lo = int(self._prefix_view(path)[n])
                self._layout.column_np(leaf)[lo : lo + arr.size] = arr
        return self.record(n)

    # -- element-level access ---------------------------------------------------

    def record(self, index: int) -> ObjectView:
        n = self.size()
        if not 0 <= index < n:
            raise BoundsError(f"record index {index} outside [0, {n})")
        return ObjectView(self, "", index, ())

    def __getitem__(self, index: int) -> ObjectView:
        return self.record(index)

    def __iter__(self) -> Iterator[ObjectView]:
        for i in range(self.size()):
            yield self.record(i)

    def column(self, path: str) -> ColumnView:
        """Column handle by leaf path; simple arrays and jagged vectors also
        resolve by their property path."""
        if self.plan.has_leaf(path):
            leaf = self.plan.leaf(path)
        else:
            desc = self.schema.find(path)
            if desc.kind in (PropertyKind.FIXED_ARRAY, PropertyKind.JAGGED_VECTOR) and _is_simple_wrapper(desc):
                leaf = self.plan.leaf(path + ".value")
            else:
                raise KindError(f"property {path!r} has no single storage column")
        if leaf.role == ROLE_GLOBAL:
            raise KindError(f"leaf {path!r} is a global; use get_global/set_global")
        return ColumnView(self, leaf)

    def prefix_sums(self, path: str) -> np.ndarray:
        """Copy of the exclusive prefix-sum column of a jagged vector."""
        self._jagged_desc(path)
        self._layout.check_readable()
        return self._prefix_view(path).copy()

    def get_global(self, path: str):
        leaf = self.plan.leaf(path)
        if leaf.role != ROLE_GLOBAL:
            raise KindError(f"leaf {path!r} is not a global")
        return self._layout.read_element(leaf, 0)

    def set_global(self, path: str, value) -> None:
        leaf = self.plan.leaf(path)
        if leaf.role != ROLE_GLOBAL:
            raise KindError(f"leaf {path!r} is not a global")
        self._layout.write_element(leaf, 0, value)

    # -- behaviors ------------------------------------------------------------------

    def __getattr__(self, name: str):
        if name.startswith("_") or name in ("schema", "plan"):
            raise AttributeError(name)
        try:
            desc = self.schema.find(name)
        except SchemaError:
            raise AttributeError(f"{type(self).__name__!r} object has no attribute {name!r}") from None
        if desc.kind is PropertyKind.NO_STORAGE:
            return _BehaviorProxy(desc.behavior, bh.TARGET_COLLECTION, self)
        if desc.kind is PropertyKind.GLOBAL:
            raise AttributeError(f"global {name!r} is reached through get_global/set_global")
        raise AttributeError(
            f"property {name!r} is record-level; access it through a record view"
        )

    def call_behavior(self, prop_path: str, fn_name: str, *args, **kwargs):
        desc = self.schema.find(prop_path)
        if desc.kind is not PropertyKind.NO_STORAGE:
            raise KindError(f"property {prop_path!r} is not a behavior bundle")
        fn = bh.lookup(desc.behavior, fn_name, bh.TARGET_COLLECTION)
        return fn.fn(self, *args, **kwargs)

    # -- residency --------------------------------------------------------------------

    def update_memory_context_info(self, new_info: memctx.ContextInfo) -> None:
        """Move the collection's storage to another memory context."""
        self._bump()
        self._layout.migrate(new_info)

    def free(self) -> None:
        self._bump()
        self._layout.free()

    # -- dump ---------------------------------------------------------------------------

    def dump(self) -> str:
        """Canonical text form, identical across layouts for equal content.

        One header line, one line per global, then one line per record with
        every element leaf in plan order. Multi-slot values and jagged
        segments print as comma-separated lists without spaces.
        """
        n = self.size()
        lines = [f"collection {self.schema.name} records={n}"]
        for leaf in self.plan.leaves:
            if leaf.role == ROLE_GLOBAL:
                vals = [
                    _format_value(self._read_slot(leaf, k, 0), leaf.value_type)
                    for k in range(leaf.extent_multiplier)
                ]
                s = vals[0] if leaf.extent_multiplier == 1 else "[" + ",".join(vals) + "]"
                lines.append(f"global {leaf.dotted}={s}")
        cols: dict[str, np.ndarray] = {}
        prefixes: dict[str, np.ndarray] = {}
        for leaf in self.plan.leaves:
            if leaf.role == ROLE_ELEMENT:
                cols[leaf.dotted] = self._layout.column_np(leaf, writable=False)
        for path in self._jagged_paths():
            self._layout.check_readable()
            prefixes[path] = self._prefix_view(path)
        for i in range(n):
            parts = []
            for leaf in self.plan.leaves:
                if leaf.role != ROLE_ELEMENT:
                    continue
                vt = leaf.value_type
                col = cols[leaf.dotted]
                if leaf.size_tag == MAIN_TAG:
                    if leaf.extent_multiplier == 1:
                        s = _format_value(col[i], vt)
                    else:
                        s = "[" + ",".join(_format_value(col[k, i], vt) for k in range(leaf.extent_multiplier)) + "]"
                else:
                    pv = prefixes[leaf.size_tag]
                    lo, hi = int(pv[i]), int(pv[i + 1])
                    if leaf.extent_multiplier == 1:
                        s = "[" + ",".join(_format_value(col[p], vt) for p in range(lo, hi)) + "]"
                    else:
                        s = (
                            "["
                            + ",".join(
                                "[" + ",".join(_format_value(col[k, p], vt) for k in range(leaf.extent_multiplier)) + "]"
                                for p in range(lo, hi)
                            )
                            + "]"
                        )
                parts.append(f"{leaf.dotted}={s}")
            lines.append(f"record {i}: " + " ".join(parts))
        return "\n".join(lines) + "\n"
