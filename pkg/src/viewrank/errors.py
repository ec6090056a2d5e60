"""Exception hierarchy shared by all viewrank modules."""


class ViewrankError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ViewrankError, ValueError):
    """Input data violates a format or value contract."""


class MalformedLine(DataError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class DuplicatePost(DataError):
    def __init__(self, user_id, post_id, first_line, second_line):
        self.first_line = first_line
        self.second_line = second_line
        super().__init__(
            f"duplicate post ({user_id!r}, {post_id!r}) on lines {first_line} and {second_line}"
        )


class DegenerateUser(DataError):
    pass


class EmptyPosts(DataError):
    pass


class NegativeInput(DataError):
    pass


class TooFewRows(DataError):
    pass


class SingularSystem(ViewrankError, ArithmeticError):
    pass


class DimensionMismatch(DataError):
    pass


class TooFewSamples(DataError):
    pass


class UnfittedModel(ViewrankError):
    pass


class TooFewDistinctValues(DataError):
    pass


class ClusterTooSmall(DataError):
    def __init__(self, cluster, size, required):
        self.cluster = cluster
        self.size = size
        self.required = required
        super().__init__(f"cluster {cluster} has {size} training rows, needs at least {required}")


class LengthMismatch(DataError):
    pass


class ConstantTarget(DataError):
    pass


class DegenerateRanking(DataError):
    pass


class TooFewUsers(DataError):
    pass


class InvalidFold(DataError):
    pass


class NoEdges(DataError):
    pass


class InvalidConfig(ViewrankError, ValueError):
    pass
