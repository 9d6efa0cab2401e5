"""Exception hierarchy shared across the package."""


class CabfareError(Exception):
    """Base class for all cabfare errors."""


class OutOfBounds(CabfareError):
    """A coordinate falls outside the configured bounding box."""


class NoTripsFound(CabfareError):
    """No historical trips within the searched neighborhood."""


class ProviderUnavailable(CabfareError):
    """External price provider did not answer (network, timeout, 5xx)."""


class MalformedResponse(CabfareError):
    """External provider answered with an unparseable body."""


class InvalidRange(CabfareError):
    """A price range violates 0 < min <= max."""


class VersionMismatch(CabfareError):
    """On-disk file was written by an incompatible format version."""


class CorruptFile(CabfareError):
    """On-disk file failed structural or checksum validation."""


class EmptyInput(CabfareError):
    """An analytics operation received no data."""


class GeocoderUnavailable(CabfareError):
    """Geocoding backend did not answer."""
