"""Exception hierarchy shared by every stage of the pipeline."""

from typing import Optional


class EplidarError(Exception):
    """Base class for all errors raised by eplidar."""


class FrameFormatError(EplidarError, ValueError):
    pass


class MagicMismatch(FrameFormatError):
    pass


class VersionMismatch(FrameFormatError):
    pass


class TruncatedFrame(FrameFormatError):
    pass


class _LineError(EplidarError, ValueError):
    def __init__(self, message: str, line_number: Optional[int] = None, path: Optional[str] = None):
        self.line_number = line_number
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line_number is not None:
            where += f":{line_number}" if where else f"line {line_number}"
        super().__init__(f"{where}: {message}" if where else message)


class AnnotationError(_LineError):
    pass


class ScenarioSpecError(_LineError):
    pass


class ConfigError(_LineError):
    pass


class ManifestError(EplidarError, ValueError):
    pass


class SplitError(EplidarError, ValueError):
    pass


class PlacementError(EplidarError, RuntimeError):
    pass


class ShapeMismatch(EplidarError, ValueError):
    pass


class SamplingError(EplidarError, ValueError):
    pass


class EmptyInstance(EplidarError, ValueError):
    pass


class TimeOutOfRange(EplidarError, ValueError):
    pass


class StepOutOfRange(EplidarError, ValueError):
    pass


class EmptySplitError(EplidarError, ValueError):
    pass


class SingleClassError(EplidarError, ValueError):
    pass


class DivergenceError(EplidarError, RuntimeError):
    pass


class MissingArtifactError(EplidarError, FileNotFoundError):
    def __init__(self, artifact: str, producer: str):
        self.artifact = artifact
        self.producer = producer
        super().__init__(f"Missing {artifact}; run `eplidar {producer}` first")


class CheckpointError(EplidarError, ValueError):
    pass
