"""Exception taxonomy shared across the toolkit."""


class RodworksError(Exception):
    """Base class for all toolkit errors."""


class InvalidSides(RodworksError):
    """Polygonal profile needs at least 3 sides."""


class DegenerateEdge(RodworksError):
    """Edge endpoints coincide; no frame can be built."""


class DegenerateAngle(RodworksError):
    """Two incident edges are (near) parallel; the safe offset diverges."""


class DegenerateHull(RodworksError):
    """Hull input is coplanar/collinear; no 3D hull exists."""


class BooleanFailure(RodworksError):
    """A boolean produced a non-solid mesh (post-hoc check failed)."""


class SwallowedEdge(RodworksError):
    """Sockets of the two joints on this edge overlap; no rod remains."""


class NotSolid(RodworksError):
    """Operation requires a closed, manifold, positively oriented mesh."""


class MalformedStl(RodworksError):
    """STL file is truncated or structurally invalid."""


class OversizeRod(RodworksError):
    """A rod is longer than the usable stock capacity."""

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class EngraveFailure(RodworksError):
    """Engraving boolean failed after retries."""


class StaleReference(RodworksError):
    """Edit command targets a node or edge that does not exist."""


class StaleRevision(RodworksError):
    """Session request pinned a revision that has been superseded."""


class NoGroundContact(RodworksError):
    """Fewer than 3 non-collinear ground contact points."""
