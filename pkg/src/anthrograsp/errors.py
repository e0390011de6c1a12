"""Exception hierarchy shared by all pipeline stages."""


class AnthroGraspError(Exception):
    """Base class. ``stage`` is filled in by the pipeline when re-raising."""

    stage = None


class DegenerateScale(AnthroGraspError):
    pass


class EmptyMesh(AnthroGraspError):
    pass


class InvalidParams(AnthroGraspError):
    pass


class EmptyForeground(AnthroGraspError):
    pass


class EmptyCloud(AnthroGraspError):
    pass


class UnknownStrategy(AnthroGraspError):
    pass


class OutOfBounds(AnthroGraspError):
    pass


class EmptySurface(AnthroGraspError):
    pass


class DegenerateVertex(AnthroGraspError):
    pass


class FrameMismatch(AnthroGraspError):
    pass


class ParseError(AnthroGraspError):
    pass


class MissingLabels(AnthroGraspError):
    pass


class NoGraspableVertex(AnthroGraspError):
    pass


class DegenerateNormal(AnthroGraspError):
    pass


class DegenerateAxis(AnthroGraspError):
    pass


class ConfigError(AnthroGraspError):
    pass


class StageError(AnthroGraspError):
    """Wraps a stage failure with the name of the stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
