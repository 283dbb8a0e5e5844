"""Logical description of record collections and its flattening into a
storage plan.

A schema is a tree of property descriptors: plain per-item scalars, groups,
fixed-extent arrays, jagged vectors, per-collection globals, and storage-free
behavior bundles. Flattening walks that tree and emits the flat list of leaf
fields a layout has to materialize, each leaf pinned to a size tag. The main
tag tracks the record count; every jagged vector adds one tag of its own that
tracks the total element count of that vector across all records.

The flattened plan, not the schema tree, is what layouts and the transfer
engine consume. Two schemas that flatten to the same plan are
interchangeable for storage and transfer purposes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence

import numpy as np

from . import behaviors
from .errors import SchemaError

MAIN_TAG = "@main"
SCHEMA_FORMAT_VERSION = 1

ROLE_ELEMENT = "element"
ROLE_PREFIX_SUM = "prefix_sum"
ROLE_GLOBAL = "global"

_PREFIX_LEAF_NAME = "prefix_sum"

_SCALAR_CODES = ("bool", "u8", "u16", "u32", "u64", "i32", "i64", "f32", "f64")
_INTEGER_CODES = frozenset({"u8", "u16", "u32", "u64", "i32", "i64"})
_NP_DTYPES = {
    "bool": np.dtype(np.bool_),
    "u8": np.dtype(np.uint8),
    "u16": np.dtype(np.uint16),
    "u32": np.dtype(np.uint32),
    "u64": np.dtype(np.uint64),
    "i32": np.dtype(np.int32),
    "i64": np.dtype(np.int64),
    "f32": np.dtype(np.float32),
    "f64": np.dtype(np.float64),
}


@dataclass(frozen=True)
class ScalarType:
    """Scalar value type of a leaf field.

    code is one of the fixed-width names above, or "enum" together with an
    enum name and cardinality. Enums are stored as the smallest unsigned
    integer wide enough for the cardinality.
    """

    code: str
    enum_name: str | None = None
    enum_cardinality: int | None = None

    def __post_init__(self) -> None:
        if self.code == "enum":
            if not self.enum_name or not str(self.enum_name).isidentifier():
                raise SchemaError(f"enum name {self.enum_name!r} is not an identifier")
            if not isinstance(self.enum_cardinality, int) or self.enum_cardinality < 1:
                raise SchemaError(f"enum cardinality must be a positive integer, got {self.enum_cardinality!r}")
        elif self.code in _SCALAR_CODES:
            if self.enum_name is not None or self.enum_cardinality is not None:
                raise SchemaError(f"scalar type {self.code!r} does not take enum parameters")
        else:
            raise SchemaError(f"unknown scalar type code {self.code!r}")

    @property
    def np_dtype(self) -> np.dtype:
        if self.code == "enum":
            if self.enum_cardinality <= 1 << 8:
                return _NP_DTYPES["u8"]
            if self.enum_cardinality <= 1 << 16:
                return _NP_DTYPES["u16"]
            return _NP_DTYPES["u32"]
        return _NP_DTYPES[self.code]

    @property
    def size_bytes(self) -> int:
        return self.np_dtype.itemsize

    @property
    def is_integer(self) -> bool:
        return self.code in _INTEGER_CODES

    @property
    def is_float(self) -> bool:
        return self.code in ("f32", "f64")

    def to_json(self) -> Any:
        if self.code == "enum":
            return {"enum": self.enum_name, "cardinality": self.enum_cardinality}
        return self.code

    @staticmethod
    def from_json(obj: Any) -> "ScalarType":
        if isinstance(obj, str):
            return ScalarType(obj)
        if isinstance(obj, dict) and "enum" in obj:
            return ScalarType("enum", obj["enum"], obj.get("cardinality"))
        raise SchemaError(f"cannot decode scalar type from {obj!r}")


BOOL = ScalarType("bool")
U8 = ScalarType("u8")
U16 = ScalarType("u16")
U32 = ScalarType("u32")
U64 = ScalarType("u64")
I32 = ScalarType("i32")
I64 = ScalarType("i64")
F32 = ScalarType("f32")
F64 = ScalarType("f64")


def enum_type(name: str, cardinality: int) -> ScalarType:
    return ScalarType("enum", name, cardinality)


class PropertyKind(str, Enum):
    PER_ITEM = "per_item"
    NO_STORAGE = "no_storage"
    SUB_GROUP = "sub_group"
    FIXED_ARRAY = "fixed_array"
    JAGGED_VECTOR = "jagged_vector"
    GLOBAL = "global"


@dataclass(frozen=True)
class PropertyDescriptor:
    name: str
    kind: PropertyKind
    value_type: ScalarType | None = None
    extent: int | None = None
    index_type: ScalarType | None = None
    children: tuple["PropertyDescriptor", ...] = ()
    behavior: str | None = None


def _check_name(name: str) -> None:
    if not isinstance(name, str) or not name.isidentifier():
        raise SchemaError(f"property name {name!r} is not a valid identifier")


def _check_children(owner: str, children: Sequence[PropertyDescriptor]) -> tuple[PropertyDescriptor, ...]:
    kids = tuple(children)
    if not kids:
        raise SchemaError(f"{owner!r} must have at least one child property")
    seen: set[str] = set()
    for c in kids:
        if not isinstance(c, PropertyDescriptor):
            raise SchemaError(f"child of {owner!r} is not a PropertyDescriptor: {c!r}")
        if c.name in seen:
            raise SchemaError(f"duplicate child name {c.name!r} under {owner!r}")
        seen.add(c.name)
    return kids


def _contains_jagged(props: Iterable[PropertyDescriptor]) -> bool:
    for p in props:
        if p.kind is PropertyKind.JAGGED_VECTOR:
            return True
        if p.children and _contains_jagged(p.children):
            return True
    return False


def declare_per_item(name: str, value_type: ScalarType) -> PropertyDescriptor:
    """One scalar stored for every record."""
    _check_name(name)
    if not isinstance(value_type, ScalarType):
        raise SchemaError(f"per-item property {name!r} needs a ScalarType, got {value_type!r}")
    return PropertyDescriptor(name, PropertyKind.PER_ITEM, value_type=value_type)


def declare_behavior(name: str, bundle_id: str) -> PropertyDescriptor:
    """Storage-free property that attaches a registered behavior bundle."""
    _check_name(name)
    if not behaviors.is_registered(bundle_id):
        raise SchemaError(f"behavior bundle {bundle_id!r} is not registered")
    return PropertyDescriptor(name, PropertyKind.NO_STORAGE, behavior=bundle_id)


def declare_subgroup(name: str, children: Sequence[PropertyDescriptor]) -> PropertyDescriptor:
    """Named group whose children are stored as if declared inline."""
    _check_name(name)
    return PropertyDescriptor(name, PropertyKind.SUB_GROUP, children=_check_children(name, children))


def declare_array(name: str, extent: int, children: Sequence[PropertyDescriptor] | ScalarType) -> PropertyDescriptor:
    """Fixed-extent array property.

    Passing a ScalarType builds the simple form: the array wraps a single
    per-item child named "value". Every leaf below gets its extent multiplier
    scaled by `extent`, with one separate storage slot per array index.
    """
    _check_name(name)
    if not isinstance(extent, int) or extent < 1:
        raise SchemaError(f"array {name!r} extent must be a positive integer, got {extent!r}")
    if isinstance(children, ScalarType):
        kids: tuple[PropertyDescriptor, ...] = (declare_per_item("value", children),)
    else:
        kids = _check_children(name, children)
    return PropertyDescriptor(name, PropertyKind.FIXED_ARRAY, extent=extent, children=kids)


def declare_jagged(
    name: str, index_type: ScalarType, children: Sequence[PropertyDescriptor] | ScalarType
) -> PropertyDescriptor:
    """Per-record variable-length vector.

    Storage is a single concatenated pool per leaf plus an exclusive prefix
    sum over record lengths, typed by index_type. Passing a ScalarType builds
    the simple form with one per-item child named "value". Jagged vectors may
    not nest inside other jagged vectors.
    """
    _check_name(name)
    if not isinstance(index_type, ScalarType) or not index_type.is_integer:
        raise SchemaError(f"jagged {name!r} index type must be an integer ScalarType, got {index_type!r}")
    if isinstance(children, ScalarType):
        kids: tuple[PropertyDescriptor, ...] = (declare_per_item("value", children),)
    else:
        kids = _check_children(name, children)
    if _contains_jagged(kids):
        raise SchemaError(f"jagged vector {name!r} may not contain another jagged vector")
    for c in kids:
        if c.name == _PREFIX_LEAF_NAME:
            raise SchemaError(f"jagged child name {_PREFIX_LEAF_NAME!r} is reserved")
        if c.kind is PropertyKind.GLOBAL:
            raise SchemaError(f"global property {c.name!r} cannot live inside a jagged vector")
    return PropertyDescriptor(name, PropertyKind.JAGGED_VECTOR, index_type=index_type, children=kids)


def declare_global(name: str, value_type: ScalarType) -> PropertyDescriptor:
    """One scalar stored per collection rather than per record."""
    _check_name(name)
    if not isinstance(value_type, ScalarType):
        raise SchemaError(f"global property {name!r} needs a ScalarType, got {value_type!r}")
    return PropertyDescriptor(name, PropertyKind.GLOBAL, value_type=value_type)


@dataclass(frozen=True)
class Schema:
    name: str
    properties: tuple[PropertyDescriptor, ...]

    def __post_init__(self) -> None:
        _check_name(self.name)
        object.__setattr__(self, "properties", tuple(self.properties))
        seen: set[str] = set()
        for p in self.properties:
            if not isinstance(p, PropertyDescriptor):
                raise SchemaError(f"schema {self.name!r} contains a non-descriptor entry: {p!r}")
            if p.name in seen:
                raise SchemaError(f"duplicate top-level property {p.name!r} in schema {self.name!r}")
            seen.add(p.name)
        leaves, _ = _flatten_properties(self.properties)
        if not leaves:
            raise SchemaError(f"schema {self.name!r} has no storage-bearing property")

    def find(self, path: str) -> PropertyDescriptor:
        """Resolve a dotted property path to its descriptor."""
        parts = path.split(".")
        props: Sequence[PropertyDescriptor] = self.properties
        desc: PropertyDescriptor | None = None
        for part in parts:
            desc = next((p for p in props if p.name == part), None)
            if desc is None:
                raise SchemaError(f"schema {self.name!r} has no property {path!r}")
            props = desc.children
        return desc

    def behavior_bundles(self) -> tuple[str, ...]:
        """Bundle ids of every NoStorage property, in declaration order."""
        out: list[str] = []

        def walk(props: Sequence[PropertyDescriptor]) -> None:
            for p in props:
                if p.kind is PropertyKind.NO_STORAGE:
                    out.append(p.behavior)
                elif p.children:
                    walk(p.children)

        walk(self.properties)
        return tuple(out)


@dataclass(frozen=True)
class SizeTag:
    """One independently sized family of leaf arrays.

    The main tag tracks the record count. Each jagged vector contributes a
    tag whose size is the total element count of that vector. multiplier is
    the product of fixed-array extents enclosing the jagged declaration.
    """

    id: str
    origin: str  # "main" or "jagged"
    path: tuple[str, ...] | None = None
    multiplier: int = 1
    index_type: ScalarType | None = None


@dataclass(frozen=True)
class LeafField:
    """One physical array a layout must provide.

    extent_multiplier counts the fixed-array extents between the leaf and the
    owner of its size tag; a layout stores that many independent slots per
    tagged element. role is "element" for plain data, "prefix_sum" for the
    per-jagged offset array (one extra entry past the record count), and
    "global" for per-collection scalars.
    """

    path: tuple[str, ...]
    value_type: ScalarType
    size_tag: str
    extent_multiplier: int = 1
    role: str = ROLE_ELEMENT

    @property
    def dotted(self) -> str:
        return ".".join(self.path)


def _flatten_properties(
    properties: Sequence[PropertyDescriptor],
) -> tuple[list[LeafField], list[SizeTag]]:
    leaves: list[LeafField] = []
    tags: list[SizeTag] = [SizeTag(MAIN_TAG, "main")]

    def walk(props: Sequence[PropertyDescriptor], prefix: tuple[str, ...], em: int, tag: str) -> None:
        for p in props:
            path = prefix + (p.name,)
            if p.kind is PropertyKind.PER_ITEM:
                leaves.append(LeafField(path, p.value_type, tag, em, ROLE_ELEMENT))
            elif p.kind is PropertyKind.NO_STORAGE:
                continue
            elif p.kind is PropertyKind.SUB_GROUP:
                walk(p.children, path, em, tag)
            elif p.kind is PropertyKind.FIXED_ARRAY:
                walk(p.children, path, em * p.extent, tag)
            elif p.kind is PropertyKind.GLOBAL:
                leaves.append(LeafField(path, p.value_type, MAIN_TAG, em, ROLE_GLOBAL))
            elif p.kind is PropertyKind.JAGGED_VECTOR:
                tag_id = ".".join(path)
                tags.append(SizeTag(tag_id, "jagged", path, em, p.index_type))
                leaves.append(LeafField(path + (_PREFIX_LEAF_NAME,), p.index_type, MAIN_TAG, em, ROLE_PREFIX_SUM))
                # leaf multipliers restart inside the new tag scope; the
                # enclosing extents are carried by the tag multiplier
                walk(p.children, path, 1, tag_id)
            else:  # pragma: no cover - enum is closed
                raise SchemaError(f"unhandled property kind {p.kind!r}")

    walk(properties, (), 1, MAIN_TAG)
    return leaves, tags


@dataclass(frozen=True)
class StoragePlan:
    """Flattened schema: every leaf array plus the size tags they hang off."""

    leaves: tuple[LeafField, ...]
    size_tags: tuple[SizeTag, ...]
    _leaf_index: dict = field(init=False, compare=False, repr=False, default=None)
    _tag_index: dict = field(init=False, compare=False, repr=False, default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_leaf_index", {lf.dotted: lf for lf in self.leaves})
        object.__setattr__(self, "_tag_index", {t.id: t for t in self.size_tags})

    def leaf(self, dotted: str) -> LeafField:
        lf = self._leaf_index.get(dotted)
        if lf is None:
            raise SchemaError(f"storage plan has no leaf {dotted!r}")
        return lf

    def has_leaf(self, dotted: str) -> bool:
        return dotted in self._leaf_index

    def tag(self, tag_id: str) -> SizeTag:
        t = self._tag_index.get(tag_id)
        if t is None:
            raise SchemaError(f"storage plan has no size tag {tag_id!r}")
        return t

    def jagged_tags(self) -> tuple[SizeTag, ...]:
        return tuple(t for t in self.size_tags if t.origin == "jagged")

    def element_leaves(self) -> tuple[LeafField, ...]:
        return tuple(lf for lf in self.leaves if lf.role == ROLE_ELEMENT)

    def leaves_under(self, tag_id: str) -> tuple[LeafField, ...]:
        return tuple(lf for lf in self.leaves if lf.size_tag == tag_id)


def flatten(schema: Schema) -> StoragePlan:
    """Flatten a schema into its storage plan.

    Deterministic: leaves appear in declaration order, depth first, with the
    prefix-sum leaf of each jagged vector emitted at the vector's position
    just before the vector's own element leaves.
    """
    leaves, tags = _flatten_properties(schema.properties)
    return StoragePlan(tuple(leaves), tuple(tags))


# -- serialization ----------------------------------------------------------

_KIND_FROM_JSON = {k.value: k for k in PropertyKind}


def _prop_to_json(p: PropertyDescriptor) -> dict:
    out: dict[str, Any] = {"name": p.name, "kind": p.kind.value}
    if p.value_type is not None:
        out["type"] = p.value_type.to_json()
    if p.extent is not None:
        out["extent"] = p.extent
    if p.index_type is not None:
        out["index_type"] = p.index_type.to_json()
    if p.behavior is not None:
        out["behavior"] = p.behavior
    if p.children:
        out["children"] = [_prop_to_json(c) for c in p.children]
    return out


def _prop_from_json(obj: dict) -> PropertyDescriptor:
    if not isinstance(obj, dict) or "name" not in obj or "kind" not in obj:
        raise SchemaError(f"malformed property entry: {obj!r}")
    kind = _KIND_FROM_JSON.get(obj["kind"])
    name = obj["name"]
    children = [_prop_from_json(c) for c in obj.get("children", [])]
    if kind is PropertyKind.PER_ITEM:
        return declare_per_item(name, ScalarType.from_json(obj["type"]))
    if kind is PropertyKind.NO_STORAGE:
        return declare_behavior(name, obj["behavior"])
    if kind is PropertyKind.SUB_GROUP:
        return declare_subgroup(name, children)
    if kind is PropertyKind.FIXED_ARRAY:
        return declare_array(name, obj["extent"], children)
    if kind is PropertyKind.JAGGED_VECTOR:
        return declare_jagged(name, ScalarType.from_json(obj["index_type"]), children)
    if kind is PropertyKind.GLOBAL:
        return declare_global(name, ScalarType.from_json(obj["type"]))
    raise SchemaError(f"unknown property kind {obj['kind']!r}")


def schema_to_json(schema: Schema, indent: int | None = 2) -> str:
    doc = {
        "version": SCHEMA_FORMAT_VERSION,
        "name": schema.name,
        "properties": [_prop_to_json(p) for p in schema.properties],
    }
    return json.dumps(doc, indent=indent)


def schema_from_json(text: str) -> Schema:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("schema file must hold a JSON object")
    version = doc.get("version")
    if version != SCHEMA_FORMAT_VERSION:
        raise SchemaError(f"unsupported schema format version {version!r}")
    return Schema(doc.get("name", ""), tuple(_prop_from_json(p) for p in doc.get("properties", [])))
