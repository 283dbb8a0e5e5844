"""Collection-to-collection copies and structured import/export.

Transfers are looked up in a small registry ordered by priority, then by
registration order. A transfer spec names an applicability predicate and an
execute function; the first applicable spec wins. Two built-ins cover the
common ground: a bulk buffer-level copy between collections of the same
layout kind, and a per-leaf fallback that stages through the host where the
destination interleaves records.

The engine runs with the layouts' internal guard bypass: size changes on a
device-resident destination are context-level operations here, exactly like
the copies themselves, not element access from the current execution scope.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import memctx
from .collection import Collection
from .errors import (
    KindError,
    RegistryError,
    SchemaMismatchError,
    TransferError,
    UnboundLeafError,
    UnsupportedTransferError,
)
from .layouts import AOS, AosLayout, LayoutInstance
from .schema import MAIN_TAG, ROLE_ELEMENT, LeafField


class TransferPriority(IntEnum):
    EXACT_PAIR = 0
    SAME_LAYOUT_KIND = 1
    PER_LEAF_DEFAULT = 2


@dataclass(frozen=True)
class TransferSpec:
    name: str
    priority: TransferPriority
    applies: Callable[[Collection, Collection], bool]
    execute: Callable[[Collection, Collection, Mapping[str, Any] | None], None]
    seq: int = field(default=0, compare=False)


_specs: dict[str, TransferSpec] = {}
_seq = itertools.count()
_chosen_counts: dict[str, int] = {}


def chosen_transfer_counts() -> dict[str, int]:
    """How often each spec has executed since the last reset; for reporting."""
    return dict(_chosen_counts)


def reset_transfer_counts() -> None:
    _chosen_counts.clear()


def register_transfer(
    name: str,
    priority: TransferPriority,
    applies: Callable[[Collection, Collection], bool],
    execute: Callable[[Collection, Collection], None],
) -> None:
    if name in _specs:
        raise RegistryError(f"transfer spec {name!r} is already registered")
    if any(s.priority == priority and s.name == name for s in _specs.values()):
        raise RegistryError(f"transfer spec {name!r} at priority {priority} is already registered")
    _specs[name] = TransferSpec(name, TransferPriority(priority), applies, execute, next(_seq))


def unregister_transfer(name: str) -> None:
    if name not in _specs:
        raise RegistryError(f"no transfer spec named {name!r}")
    del _specs[name]


def registered_transfers() -> tuple[str, ...]:
    return tuple(s.name for s in _ordered())


def _ordered() -> list[TransferSpec]:
    return sorted(_specs.values(), key=lambda s: (int(s.priority), s.seq))


def copy_collection(dst: Collection, src: Collection, opts: Mapping[str, Any] | None = None) -> str:
    """Copy src's full logical content into dst; returns the strategy name used.

    Both collections must share one flattened plan; the destination keeps its
    own layout kind and residency. opts are forwarded to the underlying
    buffer copies, same keys as memcopy_with_context accepts.
    """
    if dst is src or dst.layout is src.layout:
        raise TransferError("source and destination alias the same storage")
    if dst.plan != src.plan:
        raise SchemaMismatchError(
            f"collections flatten differently: {src.schema.name!r} vs {dst.schema.name!r}"
        )
    for spec in _ordered():
        if spec.applies(dst, src):
            spec.execute(dst, src, opts)
            dst._bump()
            _chosen_counts[spec.name] = _chosen_counts.get(spec.name, 0) + 1
            return spec.name
    raise UnsupportedTransferError(
        f"no transfer applies for ({src.kind}, {src.info.context}) -> "
        f"({dst.kind}, {dst.info.context}); tried {[s.name for s in _ordered()]}"
    )


def move_collection(dst: Collection, src: Collection, opts: Mapping[str, Any] | None = None) -> str:
    """Copy src into dst, then clear src; no storage changes hands."""
    name = copy_collection(dst, src, opts)
    with src.layout.engine_ops():
        src.clear()
    return name


# -- built-in: bulk same-kind -------------------------------------------------


def _bulk_applies(dst: Collection, src: Collection) -> bool:
    if src.kind != dst.kind:
        return False
    if not memctx.has_copier(src.info.context, dst.info.context):
        return False
    if src.kind == "arena" and src.layout.arena_spec != dst.layout.arena_spec:
        return False
    return True


def _bulk_execute(dst: Collection, src: Collection, opts: Mapping[str, Any] | None = None) -> None:
    sl, dl = src.layout, dst.layout
    with dl.engine_ops():
        dl._refit_for_engine(sl)
    for sb, db in zip(sl.buffers(), dl.buffers()):
        if sb.length_bytes:
            memctx.memcopy_with_context(db, 0, sb, 0, sb.length_bytes, opts)


# -- built-in: per-leaf default -------------------------------------------------


def _struct_leaves(layout: LayoutInstance) -> frozenset[str]:
    if isinstance(layout, AosLayout):
        return frozenset(layout._struct_set)
    return frozenset()


def _per_leaf_applies(dst: Collection, src: Collection) -> bool:
    s_ctx, d_ctx = src.info.context, dst.info.context
    if not memctx.has_copier(s_ctx, d_ctx):
        return False
    if _struct_leaves(src.layout):
        if not (memctx.has_copier(s_ctx, memctx.HOST) and memctx.has_copier(memctx.HOST, d_ctx)):
            return False
    if _struct_leaves(dst.layout) and d_ctx != memctx.HOST:
        # no way to scatter into interleaved records off-host
        return False
    return True


def _per_leaf_execute(dst: Collection, src: Collection, opts: Mapping[str, Any] | None = None) -> None:
    sl, dl = src.layout, dst.layout
    src_struct = _struct_leaves(sl)
    dst_struct = _struct_leaves(dl)
    staging: list[memctx.Buffer] = []
    try:
        with dl.engine_ops():
            for tag in sl.tags():
                dl.reserve(tag, sl.size(tag))
            dl._set_sizes_for_engine({tag: sl.size(tag) for tag in sl.tags()})

        src_struct_view: np.ndarray | None = None
        if src_struct:
            sbuf = sl._struct_buf
            if src.info.context == memctx.HOST:
                src_struct_view = sl._struct_view()
            else:
                stage = memctx.allocate(memctx.ContextInfo.host(), sbuf.length_bytes)
                staging.append(stage)
                if sbuf.length_bytes:
                    memctx.memcopy_with_context(stage, 0, sbuf, 0, sbuf.length_bytes, opts)
                src_struct_view = stage._data[: sl.capacity(MAIN_TAG) * sl.record_stride].view(
                    sl._struct_dtype
                )

        for leaf in sl.plan.leaves:
            isz = leaf.value_type.size_bytes
            n = sl.plane_len(leaf)
            if n == 0:
                continue
            for k in range(sl.plane_count(leaf)):
                src_np: np.ndarray | None = None
                if leaf.dotted in src_struct:
                    col = src_struct_view[leaf.dotted]
                    src_np = col[:n] if leaf.extent_multiplier == 1 else col[:n, k]
                if leaf.dotted in dst_struct:
                    # destination is host-resident interleaved storage
                    dcol = dl._plane_view(leaf, k)
                    if src_np is not None:
                        dcol[...] = src_np
                    else:
                        s_buf, s_base = sl._plane_region(leaf, k)
                        if src.info.context == memctx.HOST:
                            dcol[...] = s_buf._data[s_base : s_base + n * isz].view(leaf.value_type.np_dtype)
                        else:
                            stage = memctx.allocate(memctx.ContextInfo.host(), n * isz)
                            staging.append(stage)
                            memctx.memcopy_with_context(stage, 0, s_buf, s_base, n * isz, opts)
                            dcol[...] = stage._data.view(leaf.value_type.np_dtype)
                    continue
                d_buf, d_base = dl._plane_region(leaf, k)
                if src_np is None:
                    s_buf, s_base = sl._plane_region(leaf, k)
                    memctx.memcopy_with_context(d_buf, d_base, s_buf, s_base, n * isz, opts)
                else:
                    packed = np.ascontiguousarray(src_np)
                    if dst.info.context == memctx.HOST:
                        d_buf._data[d_base : d_base + n * isz] = packed.view(np.uint8).reshape(-1)
                    else:
                        stage = memctx.allocate(memctx.ContextInfo.host(), n * isz)
                        staging.append(stage)
                        stage._data[:] = packed.view(np.uint8).reshape(-1)
                        memctx.memcopy_with_context(d_buf, d_base, stage, 0, n * isz, opts)
    finally:
        for buf in staging:
            memctx.deallocate(buf)


register_transfer("bulk-same-kind", TransferPriority.SAME_LAYOUT_KIND, _bulk_applies, _bulk_execute)
register_transfer("per-leaf-default", TransferPriority.PER_LEAF_DEFAULT, _per_leaf_applies, _per_leaf_execute)


# -- external record import/export ------------------------------------------------


@dataclass(frozen=True)
class ExternalBinding:
    """How a collection's element leaves map onto an external record type.

    extractors: full dotted element-leaf path -> fn(record) -> value.
    Per-item main leaves extract a scalar (or a slot list for multi-slot
    leaves); jagged leaves extract the record's whole segment as a sequence.
    factory: fn(dict of the same keys) -> new external record, used on export.
    """

    extractors: Mapping[str, Callable[[Any], Any]]
    factory: Callable[[Mapping[str, Any]], Any] | None = None


def _check_binding(coll: Collection, binding: ExternalBinding) -> list[LeafField]:
    element = [lf for lf in coll.plan.leaves if lf.role == ROLE_ELEMENT]
    needed = {lf.dotted for lf in element}
    got = set(binding.extractors)
    for lf in element:  # report in plan order, first hole first
        if lf.dotted not in got:
            raise UnboundLeafError(f"binding has no extractor for leaf {lf.dotted!r}")
    extra = sorted(got - needed)
    if extra:
        raise TransferError(f"binding names leaves outside the plan: {extra}")
    return element


def import_external(coll: Collection, binding: ExternalBinding, records: Sequence[Any]) -> None:
    """Replace coll's content with the given external records, column-wise."""
    element = _check_binding(coll, binding)
    records = list(records)
    n = len(records)
    coll.clear()
    coll.resize(n)
    if n == 0:
        return
    for leaf in element:
        if leaf.size_tag != MAIN_TAG:
            continue
        ex = binding.extractors[leaf.dotted]
        col = coll._layout.column_np(leaf)
        if leaf.extent_multiplier == 1:
            col[:] = np.asarray([ex(r) for r in records], dtype=leaf.value_type.np_dtype)
        else:
            block = np.asarray([list(ex(r)) for r in records], dtype=leaf.value_type.np_dtype)
            if block.shape != (n, leaf.extent_multiplier):
                raise TransferError(
                    f"extractor for {leaf.dotted!r} produced shape {block.shape}, "
                    f"expected ({n}, {leaf.extent_multiplier})"
                )
            col[:] = block.T
    for tag in coll.plan.jagged_tags():
        jleaves = [lf for lf in element if lf.size_tag == tag.id]
        if any(lf.extent_multiplier != 1 for lf in jleaves):
            raise KindError(f"import into multi-slot jagged leaves of {tag.id!r} is not supported")
        per_leaf = {
            lf.dotted: [np.asarray(list(binding.extractors[lf.dotted](r)), dtype=lf.value_type.np_dtype) for r in records]
            for lf in jleaves
        }
        first = jleaves[0].dotted
        lengths = [a.size for a in per_leaf[first]]
        for lf in jleaves[1:]:
            if [a.size for a in per_leaf[lf.dotted]] != lengths:
                raise TransferError(
                    f"jagged leaves {first!r} and {lf.dotted!r} disagree on segment lengths"
                )
        total = int(sum(lengths))
        coll._bump()
        coll._layout.resize(tag.id, total)
        pv = coll._prefix_view(tag.id)
        pv[0] = 0
        pv[1:] = np.cumsum(np.array(lengths, dtype=np.int64)).astype(pv.dtype)
        for lf in jleaves:
            if total:
                coll._layout.column_np(lf)[:] = np.concatenate(per_leaf[lf.dotted])


def export_external(coll: Collection, binding: ExternalBinding) -> list[Any]:
    """Build one external record per collection record via binding.factory."""
    element = _check_binding(coll, binding)
    if binding.factory is None:
        raise TransferError("binding has no factory; cannot export")
    n = len(coll)
    cols = {lf.dotted: coll._layout.column_np(lf, writable=False) for lf in element}
    prefixes = {t.id: coll.prefix_sums(t.id) for t in coll.plan.jagged_tags()}
    out = []
    for i in range(n):
        row: dict[str, Any] = {}
        for lf in element:
            col = cols[lf.dotted]
            if lf.size_tag == MAIN_TAG:
                if lf.extent_multiplier == 1:
                    row[lf.dotted] = col[i].item()
                else:
                    row[lf.dotted] = col[:, i].tolist()
            else:
                pv = prefixes[lf.size_tag]
                lo, hi = int(pv[i]), int(pv[i + 1])
                row[lf.dotted] = col[lo:hi].tolist()
        out.append(binding.factory(row))
    return out
