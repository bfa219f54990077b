"""Exception hierarchy shared across the package."""


class RobovdiError(Exception):
    """Base class for all errors raised by robovdi."""


class ParseError(RobovdiError, ValueError):
    """Input file or text could not be parsed."""


class UnsupportedFeatureError(ParseError):
    """Input uses a feature outside the supported subset."""


class KinematicTreeError(ParseError):
    """Joints do not form a tree over the declared links."""


class ConfigError(RobovdiError, ValueError):
    """A configuration value is missing or violates its constraints."""


class DataConsistencyError(RobovdiError):
    """Paired inputs disagree (frame counts, image sizes)."""
