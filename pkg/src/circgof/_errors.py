"""Exception type shared by every module.

Each raised error carries a short machine-readable ``code`` so that callers
(and the command line front end) can branch on the failure kind without
parsing messages.
"""

from __future__ import annotations


class GofError(ValueError):
    """A domain error with a stable, lowercase ``code``."""

    def __init__(self, code: str, message: str | None = None, **details):
        self.code = code
        self.details = details
        super().__init__(f"{code}: {message}" if message else code)
