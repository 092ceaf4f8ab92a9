"""Exception types shared across the package."""


class PoicastError(Exception):
    """Base class for all package errors."""


class EmptyMeshError(PoicastError):
    """Mesh has no triangles."""


class BehindCameraError(PoicastError):
    """Point projects behind the camera plane (z <= 0)."""


class NonPositiveDepthError(PoicastError):
    """Back-projection requires a strictly positive depth."""


class DimensionMismatchError(PoicastError):
    """Raster dimensions do not match the owning frame."""


class EmptyCloudError(PoicastError):
    """No mask pixel produced a valid 3D point."""


class NoContactError(PoicastError):
    """Scale search exhausted without reaching the contact threshold."""

    def __init__(self, msg, last_scale=None, best_fraction=None):
        super().__init__(msg)
        self.last_scale = last_scale
        self.best_fraction = best_fraction


class NoResultsError(PoicastError):
    """No cast results available for aggregation."""


class EmptyInputError(PoicastError):
    """Operation received an empty point set."""


class NoPositivePromptError(PoicastError):
    """Interactive segmentation needs at least one positive prompt."""


class ProviderUnavailableError(PoicastError):
    """Remote segmentation provider failed or returned an invalid payload."""


class ParseError(PoicastError):
    """A text input failed to parse; carries the offending line number."""

    def __init__(self, msg, path=None, line=None):
        loc = f"{path}:{line}: " if path is not None and line is not None else ""
        super().__init__(f"{loc}{msg}")
        self.path = path
        self.line = line


class UnsupportedCameraModelError(PoicastError):
    """Camera model requires undistortion, which is out of scope."""


class UnsupportedFormatError(PoicastError):
    """File format not recognized by a loader."""


class SchemaVersionMismatchError(PoicastError):
    """Project manifest written by an incompatible schema version."""
