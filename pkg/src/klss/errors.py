"""Exception types shared across the package."""


class KlssError(Exception):
    """Base class for all library errors."""


class InvalidTree(KlssError):
    """The node description is not a well-formed tree (cycle, orphan, aliasing)."""


class ImperfectRecall(KlssError):
    """Nodes in one infoset disagree on the owner's own sequence."""


class ObservationMoverMismatch(KlssError):
    """An observation label is used both at nodes the player owns and nodes she does not."""


class BadDistribution(KlssError):
    """A nature distribution has negative mass or does not sum to one."""


class DimensionMismatch(KlssError):
    """Strategy vector does not match the game's sequence space."""


class NonDistribution(KlssError):
    """A behavior row is not a probability distribution."""


class BadParameter(KlssError):
    """Game constructor parameter out of range."""


class EmptySet(KlssError):
    """Knowledge set requested for an empty generating set."""


class UnknownGame(KlssError):
    """Catalog lookup failed."""


class DidNotConverge(KlssError):
    """Solver stopped without certifying the requested tolerance."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class UnreachableInfoset(KlssError):
    """Subgame requested at an infoset the blueprint never reaches."""


class BadOrder(KlssError):
    """Knowledge order k must be an odd positive integer or infinity."""


class WrongKind(KlssError):
    """Gadget conversion applied to the wrong gadget kind."""


class TranspositionCollision(KlssError):
    """Two nodes hash equal but are not transpositions."""
