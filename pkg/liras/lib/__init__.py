"""Error roots shared by every liras module."""


class LirasError(Exception):
    """Base class for failures caused by the data being processed.

    Malformed domains, inconsistent stimuli, exhausted caps and the like all
    derive from this. The command line maps it to exit status 1.

    """


class InvariantViolation(Exception):
    """Raised when an internal guarantee does not hold.

    Not a :py:exc:`LirasError`: it means the code is wrong, not the input.
    The command line maps it to exit status 2.

    """
