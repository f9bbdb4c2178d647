"""Exception types shared across the pipeline.

Every error the package raises deliberately derives from
:class:`HarPioneerError`, so the CLI can map "expected" failures to exit
code 1 and leave genuine bugs to traceback.
"""


class HarPioneerError(Exception):
    """Base class for all expected pipeline failures."""


class ConfigurationError(HarPioneerError):
    """Invalid configuration: unknown ids, bad parameters, missing inputs."""


class ParseError(HarPioneerError):
    """A data file could not be parsed (carries file and line context)."""


class UnresolvedNameError(HarPioneerError):
    """A sensor location or feature name did not match the catalog."""

    def __init__(self, name: str, message: str | None = None):
        self.name = name
        super().__init__(message or f"could not resolve name: {name!r}")


class AmbiguousNameError(HarPioneerError):
    """A name matched several catalog entries equally well."""

    def __init__(self, name: str, candidates: list[str]):
        self.name = name
        self.candidates = list(candidates)
        super().__init__(
            f"ambiguous name {name!r}: matches {', '.join(self.candidates)}"
        )


class WindowTooShortError(HarPioneerError):
    """A feature extractor received fewer samples than it needs."""


class FeatureComputationError(HarPioneerError):
    """A feature came out non-finite (bad input data upstream)."""


class EmptySegmentationError(HarPioneerError):
    """A recording is shorter than a single window."""


class SchemaMismatchError(HarPioneerError):
    """Feature columns at predict time differ from those seen at training."""

    def __init__(self, missing: list[str], extra: list[str]):
        self.missing = list(missing)
        self.extra = list(extra)
        parts = []
        if self.missing:
            parts.append(f"missing columns: {self.missing}")
        if self.extra:
            parts.append(f"unexpected columns: {self.extra}")
        super().__init__("feature schema mismatch; " + "; ".join(parts))


class TrainingError(HarPioneerError):
    """Degenerate training inputs (too few rows, one class, non-finite)."""


class EvaluationError(HarPioneerError):
    """Prediction and truth columns cannot be compared."""


class DatasetError(HarPioneerError):
    """The dataset root holds no usable recordings."""


class CassetteMissError(HarPioneerError):
    """Replay mode found no recorded reply for a request fingerprint."""

    def __init__(self, fingerprint: str):
        self.fingerprint = fingerprint
        super().__init__(
            f"no recorded reply for request fingerprint {fingerprint}; "
            "record the exchange first or switch mode"
        )


class TransportError(HarPioneerError):
    """The chat endpoint returned a non-2xx status."""

    def __init__(self, status_code: int, body_excerpt: str):
        self.status_code = status_code
        self.body_excerpt = body_excerpt
        super().__init__(f"chat endpoint returned HTTP {status_code}: {body_excerpt}")


class LLMTimeoutError(HarPioneerError):
    """The chat endpoint did not answer within the configured timeout."""
