class IfsExperimentError(ValueError):
    pass


class InvalidSystem(IfsExperimentError):
    pass


class NotContractive(IfsExperimentError):
    pass


class Degenerate(IfsExperimentError):
    pass


class LetterOutOfRange(IfsExperimentError):
    pass


class NoBranch(IfsExperimentError):
    pass


class InvalidWeights(IfsExperimentError):
    pass


class EmptyMeasure(IfsExperimentError):
    pass


class LevelOverflow(IfsExperimentError):
    pass


class LevelUnderflow(IfsExperimentError):
    pass


class InsufficientLevel(IfsExperimentError):
    pass


class GeneratorOutOfRange(IfsExperimentError):
    pass


class MissingContinuityData(IfsExperimentError):
    pass


class WordSyntaxError(IfsExperimentError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class FunctionSyntaxError(IfsExperimentError):
    pass


class ConfigParseError(IfsExperimentError):
    pass


class ConfigValidationError(IfsExperimentError):
    def __init__(self, message, key_path=None):
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)
        self.key_path = key_path


class TaskError(IfsExperimentError):
    def __init__(self, task_name, cause):
        super().__init__(f"Task '{task_name}' failed: {cause}")
        self.task_name = task_name
        self.cause = cause
