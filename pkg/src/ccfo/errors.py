"""Exception types raised across the package.

Every error the CLI maps to exit status 2 derives from :class:`CCFOError`.
"""


class CCFOError(Exception):
    pass


# image I/O

class ImageFormatError(CCFOError, ValueError):
    pass


class UnsupportedMagicError(ImageFormatError):
    pass


class UnsupportedMaxvalError(ImageFormatError):
    pass


class TruncatedImageError(ImageFormatError):
    pass


class InvalidImageError(CCFOError, ValueError):
    """Array does not satisfy the grayscale image invariants."""


# configuration / shape problems

class ConfigError(CCFOError, ValueError):
    pass


class ShapeMismatchError(CCFOError, ValueError):
    pass


# gallery

class GalleryError(CCFOError):
    pass


class DuplicateIdError(GalleryError):
    pass


class UnknownIdError(GalleryError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class GridMismatchError(GalleryError, ShapeMismatchError):
    pass


class ParameterMismatchError(GalleryError):
    """Templates built with a different estimator mode or block size."""


class EmptyGalleryError(GalleryError):
    pass


class ManifestError(GalleryError):
    pass


class CorruptTemplateError(GalleryError):
    pass


class TemplateVersionError(CorruptTemplateError):
    pass
