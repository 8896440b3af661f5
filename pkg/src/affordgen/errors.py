"""Exception types shared across the pipeline."""


class AffordGenError(Exception):
    """Base class for all pipeline errors."""


class GeometryError(AffordGenError):
    """Degenerate or invalid geometry."""


class GenerationError(AffordGenError):
    """Procedural generation could not satisfy its contract."""


class LabelError(AffordGenError):
    """A ground-truth label could not be produced for a sample."""


class TemplateError(AffordGenError):
    """No instruction template registered for a (relation, kind) key."""


class PredictionParseError(AffordGenError):
    """Prediction text contained no valid point coordinates."""


class DataError(AffordGenError):
    """Malformed input files or inconsistent dataset state."""
