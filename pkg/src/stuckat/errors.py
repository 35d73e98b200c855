"""Exception types shared by the codecs and the harness."""


class StuckAtError(Exception):
    """Base class for every contract violation raised by this package."""


class RankDeficient(StuckAtError):
    """A constrained GF(2) system has no solution (or a block matrix lost rank)."""


class InsufficientUnfrozen(StuckAtError):
    """Too few unfrozen cells to realise a modular-weight encoding."""


class MessageTooLong(StuckAtError):
    """The message exceeds the capacity of the memory image."""


class MalformedChain(StuckAtError):
    """The decoder walked into an impossible block chain."""


class SearchExhausted(StuckAtError):
    """Deterministic seed search ran out of budget."""


class NoValidInterval(StuckAtError):
    """No metadata interval satisfies the partition conditions."""


class NoValidSubblock(StuckAtError):
    """No aligned window inside the metadata interval is usable."""


class InvalidPositionCode(StuckAtError):
    """The weight-encoded position code decodes outside the valid range."""


class NotEncodable(StuckAtError):
    """The bin for the requested message has no vector matching the frozen cells."""


class ProfileError(StuckAtError):
    """Inconsistent or infeasible scheme parameters."""
