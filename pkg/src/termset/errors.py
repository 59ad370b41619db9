"""Exception hierarchy shared across the package."""


class TermsetError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(TermsetError):
    """Raw corpus input could not be decoded or parsed."""


class FormatError(TermsetError):
    """A persisted artifact (model file, CoNLL-U, JSONL, CSV) is malformed."""


class ModeError(TermsetError):
    """An operation was invoked in a mode its input cannot support."""


class InputError(TermsetError):
    """Caller-supplied data violates an operation precondition."""


class TrainingError(TermsetError):
    """Training could not start or aborted (empty vocabulary, NaN params)."""


class ZeroVectorError(TermsetError):
    """Cosine similarity was requested against a zero vector."""


class NotFoundError(TermsetError):
    """A referenced project, group, job, or session does not exist."""


class ConflictError(TermsetError):
    """The operation is valid but the project is not in the required state."""


class RestoreError(TermsetError):
    """A project directory is partial or corrupt; names the bad artifact."""
