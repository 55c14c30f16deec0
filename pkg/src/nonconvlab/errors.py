"""Exception types shared across modules (the CLI maps them to exit codes)."""


class ResourceCapError(RuntimeError):
    """A computation would exceed a configured size cap."""


class StreamExhaustedError(IndexError):
    """A finite stream is shorter than the run requires."""


class ScheduleError(ValueError):
    """A schedule fails its gap/growth condition on the requested range."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report.violation))
