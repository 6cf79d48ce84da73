"""Exception hierarchy shared by all simobs modules."""


class SimobsError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SimobsError, ValueError):
    """An argument violates a precondition (bad step, empty input, ...)."""


class AlignmentError(SimobsError):
    """Two series share no overlapping wall-clock window."""


class FormatError(SimobsError):
    """Input bytes are not the expected file format."""


class TruncationError(SimobsError):
    """File ends mid-structure.

    ``offset`` is the byte offset at which the structure began.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class UnsupportedLinkTypeError(SimobsError):
    """pcap link type this package does not parse."""

    def __init__(self, link_type: int):
        super().__init__(f"unsupported pcap link type {link_type} (supported: 1 ethernet, 127 radiotap)")
        self.link_type = link_type


class MalformedFrameError(SimobsError):
    """A frame is too short for the header fields it should carry."""


class StructureError(SimobsError):
    """An MP4 box tree is missing or misusing a required box."""


class NoVideoTrackError(SimobsError):
    """No track with a 'vide' handler was found."""


class UndefinedCorrelationError(SimobsError):
    """Pearson correlation is undefined (zero variance input)."""


class UndefinedDistributionError(SimobsError):
    """A series with zero sum cannot be turned into a distribution."""


class ClassImbalanceError(SimobsError):
    """An operation needs both classes (or enough of each) present."""


class PartitionError(SimobsError):
    """Samples cannot be split into the requested partitions."""


class TrainingDivergedError(SimobsError):
    """Model training produced a non-finite loss."""
