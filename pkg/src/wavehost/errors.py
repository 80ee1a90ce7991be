"""Shared exception base for the package.

Concrete error types live next to the code that raises them; everything
user-facing derives from :class:`WavehostError` so callers can catch one
class at API boundaries (CLI exit codes, HTTP error mapping).
"""


class WavehostError(Exception):
    """Base class for all errors raised by wavehost."""
