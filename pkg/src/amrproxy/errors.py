"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (bad files, paths or
arguments) and :class:`ModelError` (a fit or model evaluation that cannot
proceed). The CLI maps them to exit codes 2 and 1.
"""


class AmrProxyError(Exception):
    pass


class InputError(AmrProxyError):
    pass


class ModelError(AmrProxyError):
    pass


class MissingParameter(InputError, KeyError):
    def __init__(self, key):
        super().__init__(key)
        self.key = key

    def __str__(self):
        return f"missing required parameter: {self.key}"


class MalformedValue(InputError, ValueError):
    def __init__(self, key, raw, reason=""):
        super().__init__(key, raw)
        self.key = key
        self.raw = raw
        self.reason = reason

    def __str__(self):
        msg = f"malformed value for {self.key}: {self.raw!r}"
        return f"{msg} ({self.reason})" if self.reason else msg


class PathNotFound(InputError, FileNotFoundError):
    def __init__(self, path):
        super().__init__(str(path))
        self.path = path

    def __str__(self):
        return f"path not found: {self.path}"


class MalformedPlotfile(InputError):
    def __init__(self, path, reason="no Level_0 directory"):
        super().__init__(str(path))
        self.path = path
        self.reason = reason

    def __str__(self):
        return f"malformed plotfile {self.path}: {self.reason}"


class NonContiguousSteps(InputError):
    def __init__(self, first_gap):
        super().__init__(first_gap)
        self.first_gap = first_gap

    def __str__(self):
        return f"step indices are not contiguous; first missing index is {self.first_gap}"


class SeriesLengthMismatch(InputError):
    def __init__(self, observed, modeled):
        super().__init__(observed, modeled)
        self.observed = observed
        self.modeled = modeled

    def __str__(self):
        return f"series length mismatch: observed {self.observed} dumps, model has {self.modeled}"


class InsufficientData(ModelError):
    def __str__(self):
        return "need at least 2 observations to fit"


class NonPositiveObservation(ModelError):
    def __init__(self, index, value):
        super().__init__(index, value)
        self.index = index
        self.value = value

    def __str__(self):
        return f"observation {self.index} is not positive ({self.value})"


class IndexOutOfRange(ModelError, IndexError):
    def __init__(self, index, size):
        super().__init__(index, size)
        self.index = index
        self.size = size

    def __str__(self):
        return f"dump index {self.index} outside [0, {self.size})"


class DirectoryNotEmpty(InputError):
    def __init__(self, path):
        super().__init__(str(path))
        self.path = path

    def __str__(self):
        return f"output directory is not empty: {self.path} (use force to overwrite)"


class PartialGeneration(AmrProxyError):
    """Raised when writing stops part-way; ``report`` lists the completed files."""

    def __init__(self, report, cause):
        super().__init__(str(cause))
        self.report = report
        self.cause = cause

    def __str__(self):
        return (f"generation stopped after {self.report.files_written} files "
                f"({self.report.bytes_written} bytes): {self.cause}")
