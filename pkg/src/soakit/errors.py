"""Exception hierarchy shared by all soakit modules."""


class SoakitError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(SoakitError):
    """Invalid property declaration or schema composition."""


class RegistryError(SoakitError):
    """Duplicate or missing registration in one of the global registries."""


class MemoryContextError(SoakitError):
    """Base class for memory context failures."""


class AllocationError(MemoryContextError):
    """Allocation rejected (capacity exhausted or invalid request)."""


class AccessError(MemoryContextError):
    """Buffer contents touched from an execution context that may not see them."""


class CopyError(MemoryContextError):
    """memcopy rejected: no copier for the context pair or bad ranges."""


class BufferStateError(MemoryContextError):
    """Operation on a dead or foreign buffer (double free, wrong context)."""


class LayoutError(SoakitError):
    """Base class for layout failures."""


class PlanError(LayoutError):
    """Storage plan and layout kind are incompatible."""


class CapacityError(LayoutError):
    """Fixed-capacity layout cannot honor the requested size."""


class NotResizableError(LayoutError):
    """Size-changing operation attempted where the layout forbids it."""


class BoundsError(SoakitError, IndexError):
    """Index outside the valid range of a leaf, record, or slot."""


class CollectionError(SoakitError):
    """Base class for collection-level failures."""


class StaleViewError(CollectionError):
    """View used after a size-changing operation on its collection."""


class KindError(CollectionError):
    """Property accessed through an accessor of the wrong kind."""


class UnknownBehaviorError(CollectionError):
    """Behavior bundle or function name could not be resolved."""


class TransferError(SoakitError):
    """Base class for collection transfer failures."""


class SchemaMismatchError(TransferError):
    """Source and destination flatten to different storage plans."""


class UnsupportedTransferError(TransferError):
    """No registered transfer strategy can serve the endpoint pair."""


class UnboundLeafError(TransferError):
    """External binding does not cover every storage-bearing leaf."""


class BenchConfigError(SoakitError):
    """Invalid benchmark configuration."""
