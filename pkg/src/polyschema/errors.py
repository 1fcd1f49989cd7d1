"""Exception taxonomy shared across the package."""


class PolyschemaError(Exception):
    """Base class for all package errors."""


class MeshError(PolyschemaError):
    """Mesh violates a structural invariant (manifoldness, orientation,
    closedness, connectivity, degenerate elements). Messages carry the
    offending element index."""


class MeshFormatError(MeshError):
    """A mesh file could not be parsed."""


class LoopError(PolyschemaError):
    """A loop system is structurally invalid for the host mesh."""


class DetachError(PolyschemaError):
    """Loop detachment failed (operator precondition or geometric failure)."""


class LayoutError(PolyschemaError):
    """Cut or planar layout failed (bad cut graph, point outside polygon...)."""


class CapExceededError(PolyschemaError):
    """A configured resource cap (memory) was exceeded; partial state discarded."""
