"""Exception hierarchy shared by all texpipe modules.

Two families matter to callers: ``UsageError`` (bad invocation or config,
CLI exit code 1) and ``DataError`` (malformed or inconsistent inputs,
CLI exit code 2). Every condition raised by library code is a subclass
of exactly one of the two.
"""


class TexpipeError(Exception):
    """Base class for everything raised by this package."""


class UsageError(TexpipeError):
    """The invocation itself is wrong: flags, subcommands, config files."""


class BadConfigSyntax(UsageError):
    pass


class UnknownKey(UsageError):
    pass


class DataError(TexpipeError):
    """Input data violates a documented contract."""


# -- raster / binary container errors ---------------------------------------

class BadMagic(DataError):
    pass


class TruncatedPayload(DataError):
    """Payload length disagrees with the header (short or long)."""


class PartIdOutOfRange(DataError):
    pass


class DimensionZero(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ArithmeticOverflow(DataError):
    pass


# -- information-theoretic table errors -------------------------------------

class InvalidDistribution(DataError):
    pass


class EmptyJoint(DataError):
    pass


class SupportMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


# -- metric errors -----------------------------------------------------------

class VertexOutOfRange(DataError):
    pass


class Unreachable(DataError):
    """No path exists between the queried vertices."""


class EmptyErrorSet(DataError):
    pass


class EmptyList(DataError):
    pass


# -- augmentation / job errors ------------------------------------------------

class NotEnoughSources(DataError):
    pass


class NotEnoughPairs(DataError):
    pass


class MissingInput(DataError):
    pass


class WriteFailure(DataError):
    pass


# -- probe errors --------------------------------------------------------------

class LabelOutOfRange(DataError):
    pass
