"""Exception hierarchy shared by the library and the command line."""


class DataError(ValueError):
    """Malformed input data (bad CSV cell, ragged row, invalid labels...)."""


class ContractError(ValueError):
    """An operation's precondition does not hold for otherwise valid data."""


class NotASubsetError(ContractError):
    pass


class MissingClassError(ContractError):
    """A class of the original dataset has no representative."""
