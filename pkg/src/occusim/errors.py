"""Exception hierarchy.

Config problems derive from ``ConfigError`` so the CLI can map them to exit
code 1; everything raised while running a simulation derives from
``SimulationError`` (exit code 2).
"""

from __future__ import annotations


class OccusimError(Exception):
    """Base class for all package errors."""


class ConfigError(OccusimError):
    pass


class MissingRequiredKey(ConfigError):
    def __init__(self, key: str):
        super().__init__(f"missing required key: {key!r}")
        self.key = key


class MalformedTimestamp(ConfigError):
    def __init__(self, text: str):
        super().__init__(f"malformed timestamp {text!r} (expected yyyymmddThhmm)")
        self.text = text


class OutOfRangeValue(ConfigError):
    def __init__(self, key: str, bound: str):
        super().__init__(f"value of {key!r} out of range: must satisfy {bound}")
        self.key = key
        self.bound = bound


class ConfigSyntaxError(ConfigError):
    pass


class DataError(ConfigError):
    """Problems with input data files (unreadable, unparsable, inconsistent)."""


class FileUnreadable(DataError):
    def __init__(self, path, reason: str = ""):
        msg = f"cannot read file: {path}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.path = path


class UnparsableRow(DataError):
    def __init__(self, row: int, detail: str = ""):
        msg = f"unparsable row {row}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.row = row


class DuplicateTimestamp(DataError):
    def __init__(self, timestamp):
        super().__init__(f"duplicate timestamp {timestamp}")
        self.timestamp = timestamp


class WindowOutsideData(DataError):
    pass


class AllValuesMissing(DataError):
    pass


class PartialDay(DataError):
    pass


class SimulationError(OccusimError):
    pass


class WriteFailed(SimulationError):
    pass


class LengthMismatch(SimulationError):
    pass


class TooFewStrings(SimulationError):
    pass


class EmptyDatabase(SimulationError):
    pass


class NoCandidateAtAnyTolerance(SimulationError):
    pass


class IntegrationUnstable(SimulationError):
    pass


class InfeasibleForecast(SimulationError):
    pass


class NeverOccupied(SimulationError):
    pass
