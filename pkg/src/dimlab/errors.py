"""Exception hierarchy.

Every error carries a module-qualified ``code`` (``"core.CandidateExplosion"``)
so the CLI can report where a failure originated.
"""

from __future__ import annotations


class DimlabError(Exception):
    module = "dimlab"

    @property
    def code(self) -> str:
        return f"{self.module}.{type(self).__name__}"


class CandidateExplosion(DimlabError):
    module = "core"


class MalformedCode(DimlabError):
    module = "codes"


class InvalidSpec(DimlabError):
    module = "generators"


class InsufficientSamples(DimlabError):
    module = "dimension"


class DegenerateRange(DimlabError):
    module = "geometry"


class NoSuchCandidate(DimlabError):
    module = "kakeya"


class InternalInvariantViolation(DimlabError):
    """A property the construction guarantees did not hold. Never caught."""

    module = "kakeya"


class ConfigError(DimlabError):
    module = "cli"
