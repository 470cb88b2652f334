"""Exception hierarchy shared by every perfest module."""


class PerfestError(Exception):
    """Base class for all errors raised by perfest."""


class CSVParseError(PerfestError, ValueError):
    """Malformed CSV input (ragged rows, empty file)."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class FormulaSyntaxError(PerfestError, ValueError):
    """A formula string that does not match the supported grammar."""

    def __init__(self, message, text, pos):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


class WorkflowError(PerfestError):
    """A workflow failed while learning or predicting."""


class ContractViolation(WorkflowError):
    """A user workflow or evaluator returned something off-contract."""


class ConfigError(PerfestError, ValueError):
    """Invalid experiment configuration or incompatible arguments."""


class IncompatibleResultsError(PerfestError):
    """Results objects (or files) that cannot be combined or loaded."""


class ResultsParseError(PerfestError, ValueError):
    """A results file that is truncated or not valid JSON."""
