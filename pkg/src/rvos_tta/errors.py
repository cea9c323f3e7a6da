"""Exception hierarchy. The CLI maps these onto exit codes."""


class PipelineError(Exception):
    exit_code = 1


class ValidationError(PipelineError, ValueError):
    exit_code = 2


class BackendError(PipelineError, RuntimeError):
    exit_code = 3


class ProtocolError(BackendError):
    """A malformed record on the backend stream."""


class MaskIOError(PipelineError, OSError):
    exit_code = 4
