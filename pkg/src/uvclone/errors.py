"""Exception types shared across the toolkit."""


class UvCloneError(Exception):
    """Base class for all toolkit errors."""


# --- file ingestion ---------------------------------------------------------

class FileUnreadable(UvCloneError):
    pass


class SchemaViolation(UvCloneError):
    def __init__(self, line: int, field: str, reason: str = ""):
        self.line = line
        self.field = field
        self.reason = reason
        msg = f"line {line}: bad field '{field}'"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class BadMagic(UvCloneError):
    pass


class DimMismatch(UvCloneError):
    pass


class NonFiniteValue(UvCloneError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"non-finite value at flat index {index}")


class AsymmetryTooLarge(UvCloneError):
    pass


class NegativeDistance(UvCloneError):
    pass


class IndexMismatch(UvCloneError):
    pass


# --- geometry ---------------------------------------------------------------

class InsufficientPoints(UvCloneError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"need at least 4 correspondences, got {n}")


class DegenerateConfiguration(UvCloneError):
    pass


class PointAtInfinity(UvCloneError):
    pass


# --- templates --------------------------------------------------------------

class DescriptorInvalid(UvCloneError):
    def __init__(self, template_id: str, reason: str):
        self.template_id = template_id
        self.reason = reason
        super().__init__(f"template '{template_id}': {reason}")


class CanvasSizeMismatch(UvCloneError):
    pass


class NoTemplateForCategory(UvCloneError):
    pass


class OracleFailure(UvCloneError):
    def __init__(self, position, cause):
        self.position = position
        self.cause = cause
        super().__init__(f"render oracle failed at placement {position}: {cause}")


# --- cell search ------------------------------------------------------------

class BlockOutOfBounds(UvCloneError):
    pass


class SideTooSmall(UvCloneError):
    pass


class GridTooSmall(UvCloneError):
    pass


class EmptyFillRegion(UvCloneError):
    pass


# --- cloning ----------------------------------------------------------------

class DegeneratePolygon(UvCloneError):
    pass


class CategoryMismatch(UvCloneError):
    pass


class MissingBackParts(UvCloneError):
    pass


class ConflictingGarments(UvCloneError):
    pass


class NoGarments(UvCloneError):
    pass


# --- curation / cropping ----------------------------------------------------

class NTooLarge(UvCloneError):
    pass


class ImageTooSmall(UvCloneError):
    pass
