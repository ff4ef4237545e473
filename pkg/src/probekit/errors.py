"""Exception types shared across the toolkit."""


class ProbekitError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ProbekitError):
    """Malformed annotated-corpus input."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class FormatError(ProbekitError):
    """Malformed dataset or embedding file."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class SizeShortfallError(ProbekitError):
    """Fewer usable instances than requested."""

    def __init__(self, requested: int, available: int, detail: str = ""):
        self.requested = requested
        self.available = available
        msg = f"requested {requested} instances but only {available} are available"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class BinFitError(ProbekitError):
    """Length-bin fitting failed on a degenerate distribution."""


class ConfigError(ProbekitError):
    """Invalid experiment configuration; collects every problem found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


class CoverageError(ProbekitError):
    """A score grid is missing cells required by an analysis."""

    def __init__(self, missing: list[tuple]):
        self.missing = list(missing)
        shown = ", ".join(repr(k) for k in self.missing[:8])
        more = "" if len(self.missing) <= 8 else f" (+{len(self.missing) - 8} more)"
        super().__init__(f"score grid is missing {len(self.missing)} cells: {shown}{more}")


class StratificationError(ProbekitError):
    """Split or fold assignment cannot satisfy stratification constraints."""


class AlignmentError(ProbekitError):
    """Embedding rows do not line up with dataset instances."""


class DegenerateTaskError(ProbekitError):
    """Training data does not contain at least two classes."""
