"""Exception hierarchy.

Every error carries the CLI exit code for its family so the command line
front end can map failures without a lookup table.
"""


class MumError(Exception):
    exit_code = 1


class ConfigError(MumError):
    exit_code = 2


class DataError(MumError):
    exit_code = 3


class NumericError(MumError):
    exit_code = 4


# corpus / embedding input

class MalformedHeader(DataError):
    pass


class DimensionMismatch(DataError):
    def __init__(self, line, expected, got):
        super().__init__(f"line {line}: expected {expected} values, got {got}")
        self.line = line


class DuplicateWord(DataError):
    def __init__(self, word):
        super().__init__(f"duplicate word in embedding table: {word!r}")
        self.word = word


class EmptyCorpus(DataError):
    pass


# clustering

class ZeroVector(DataError):
    pass


class TooFewPoints(DataError):
    pass


class TooFewUsers(DataError):
    pass


class UnknownUser(DataError):
    def __init__(self, user_id):
        super().__init__(f"user {user_id!r} is not among the clustered users")
        self.user_id = user_id


# mixture model / profiles

class NonFiniteLikelihood(NumericError):
    pass


class NormalizationError(NumericError):
    pass


class NoTweets(DataError):
    pass


# baseline

class SingleClass(DataError):
    pass


class LengthMismatch(DataError):
    pass


class StageError(MumError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
