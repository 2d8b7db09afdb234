"""Exception hierarchy shared by every gemmlab module."""


class GemmlabError(Exception):
    """Base class for all domain errors."""


class ParseError(GemmlabError):
    pass


class SchemaError(GemmlabError):
    def __init__(self, key, message=None):
        self.key = key
        super().__init__(message or f"invalid or missing field {key!r}")


class ConfigError(GemmlabError):
    pass


class UnknownVariant(GemmlabError):
    pass


class DimensionMismatch(GemmlabError):
    pass


class EmptyInput(GemmlabError):
    pass


class SensorError(GemmlabError):
    pass


class ChannelMismatch(SensorError):
    pass


class UnsupportedChannel(SensorError):
    pass


class ProbeReadError(SensorError):
    pass


class NotFound(GemmlabError):
    pass


class DuplicateWithoutReplayFlag(GemmlabError):
    pass


class EmptyExperiment(GemmlabError):
    pass
