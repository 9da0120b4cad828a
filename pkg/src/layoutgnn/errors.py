"""Exception types shared across the engine."""


class LayoutGnnError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(LayoutGnnError):
    """Input file is not parseable at all (e.g. malformed JSON)."""


class SchemaError(LayoutGnnError):
    """Parsed input is missing a field or has a field of the wrong shape."""


class InvariantError(LayoutGnnError):
    """A structurally valid record violates a data-model invariant."""


class FormatError(LayoutGnnError):
    """Binary file violates its format (bad magic, truncation, ordering)."""


class ModalityMismatch(LayoutGnnError):
    """Embedding file's modality tag differs from the expected one."""


class NonFiniteValue(LayoutGnnError):
    """A NaN or infinity was found where only finite values are allowed."""


class ShapeError(LayoutGnnError):
    """Operand shapes do not agree for a numerical operation."""


class DegenerateBatch(LayoutGnnError):
    """Batch statistics are undefined (fewer than 2 rows in train mode)."""


class EmptyMask(LayoutGnnError):
    """A loss was requested over a mask that selects no rows."""


class SpecError(LayoutGnnError):
    """A model or layer specification is internally inconsistent."""


class CoverageError(LayoutGnnError):
    """A graph node has no feature vector in a required modality."""


class FoldError(LayoutGnnError):
    """Cross-validation split cannot be built (too few documents)."""


class EmptyInput(LayoutGnnError):
    """Metric computation received no data."""


class EmptyResults(LayoutGnnError):
    """Report generation found no result files."""
