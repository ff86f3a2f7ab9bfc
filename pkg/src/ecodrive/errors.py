"""Exception types raised across the package."""


class EcodriveError(Exception):
    """Base class for every error raised by ecodrive."""


# -- frame decoding -----------------------------------------------------------

class FrameError(EcodriveError, ValueError):
    pass


class TruncatedFrame(FrameError):
    pass


class WrongMode(FrameError):
    pass


class UnknownPid(FrameError):
    pass


class LengthMismatch(FrameError):
    pass


# -- traces -------------------------------------------------------------------

class TraceError(EcodriveError, ValueError):
    pass


class MissingColumn(TraceError):
    pass


class NonMonotoneTime(TraceError):
    pass


class EmptyTrace(TraceError):
    pass


class BadRow(TraceError):
    """One or more CSV rows could not be parsed.

    ``rows`` holds ``(row_number, message)`` pairs, row numbers counted from
    1 at the header line.
    """

    def __init__(self, rows):
        self.rows = list(rows)
        shown = "; ".join(f"row {n}: {msg}" for n, msg in self.rows[:5])
        more = f" (+{len(self.rows) - 5} more)" if len(self.rows) > 5 else ""
        super().__init__(shown + more)


class WindowTooShort(TraceError):
    pass


# -- fuel ---------------------------------------------------------------------

class NoUsableChannels(EcodriveError, ValueError):
    pass


class InvalidTemperature(EcodriveError, ValueError):
    pass


# -- features / classifier ----------------------------------------------------

class WindowTooSmall(EcodriveError, ValueError):
    pass


class BadTopology(EcodriveError, ValueError):
    pass


class DimensionMismatch(EcodriveError, ValueError):
    pass


class EmptySet(EcodriveError, ValueError):
    pass


class Diverged(EcodriveError, ArithmeticError):
    pass


class CorruptFile(EcodriveError, ValueError):
    pass


class VersionMismatch(EcodriveError, ValueError):
    pass


# -- synthetic data / pipeline ------------------------------------------------

class BadSpec(EcodriveError, ValueError):
    pass


class LabelMismatch(EcodriveError, ValueError):
    pass


class BadWeights(EcodriveError, ValueError):
    pass


class EmptyInput(EcodriveError, ValueError):
    pass
