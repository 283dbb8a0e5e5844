"""Layout-agnostic record collections with explicit memory placement.

A schema describes what a record holds; a layout decides where the bytes
live (one buffer per field, a single arena slab, or interleaved
array-of-structs) and in which memory context (host or the instrumented
mock device). Collections give record-, column-, and segment-level access
on top of any of those placements, and the transfer engine moves whole
collections between placements through registered, priority-ranked
strategies.
"""

from . import behaviors, bench, layouts, memctx, schema, transfer
from .collection import Collection
from .errors import (
    AccessError,
    AllocationError,
    BenchConfigError,
    BoundsError,
    BufferStateError,
    CapacityError,
    CollectionError,
    CopyError,
    KindError,
    LayoutError,
    MemoryContextError,
    NotResizableError,
    PlanError,
    RegistryError,
    SchemaError,
    SchemaMismatchError,
    SoakitError,
    StaleViewError,
    UnboundLeafError,
    UnknownBehaviorError,
    UnsupportedTransferError,
)
from .layouts import AOS, ARENA, PER_FIELD, ArenaSpec
from .memctx import HOST, MOCKDEV, ContextInfo, execution_scope
from .schema import (
    BOOL,
    F32,
    F64,
    I32,
    I64,
    MAIN_TAG,
    U8,
    U16,
    U32,
    U64,
    Schema,
    declare_array,
    declare_behavior,
    declare_global,
    declare_jagged,
    declare_per_item,
    declare_subgroup,
    enum_type,
)
from .transfer import (
    ExternalBinding,
    copy_collection,
    export_external,
    import_external,
    move_collection,
)

__version__ = "0.1.0"

__all__ = [
    "AOS",
    "ARENA",
    "BOOL",
    "F32",
    "F64",
    "HOST",
    "I32",
    "I64",
    "MAIN_TAG",
    "MOCKDEV",
    "PER_FIELD",
    "U8",
    "U16",
    "U32",
    "U64",
    "AccessError",
    "AllocationError",
    "ArenaSpec",
    "BenchConfigError",
    "BoundsError",
    "BufferStateError",
    "CapacityError",
    "Collection",
    "CollectionError",
    "ContextInfo",
    "CopyError",
    "ExternalBinding",
    "KindError",
    "LayoutError",
    "MemoryContextError",
    "NotResizableError",
    "PlanError",
    "RegistryError",
    "Schema",
    "SchemaError",
    "SchemaMismatchError",
    "SoakitError",
    "StaleViewError",
    "UnboundLeafError",
    "UnknownBehaviorError",
    "UnsupportedTransferError",
    "behaviors",
    "bench",
    "copy_collection",
    "declare_array",
    "declare_behavior",
    "declare_global",
    "declare_jagged",
    "declare_per_item",
    "declare_subgroup",
    "enum_type",
    "execution_scope",
    "export_external",
    "import_external",
    "layouts",
    "memctx",
    "move_collection",
    "schema",
    "transfer",
]
