"""Base exception for everything raised by this package.

Concrete errors live next to the code that raises them; catching
MixeditError at a boundary (e.g. the CLI, or per-record synthesis)
is the supported way to separate domain failures from bugs.
"""


class MixeditError(Exception):
    pass
