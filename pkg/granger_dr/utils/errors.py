"""Exception hierarchy shared by the library and the command line.

``exit_code`` follows the CLI contract: 2 configuration, 3 I/O, 4 degenerate data.
"""


class GrangerDRError(Exception):
    exit_code = 2


# configuration and validation
class InvalidConfig(GrangerDRError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"invalid value for '{field}': {message}")


class InvalidPanel(GrangerDRError):
    pass


class ShapeMismatch(GrangerDRError):
    pass


class IndexOutOfRange(GrangerDRError):
    pass


class LagTooLarge(GrangerDRError):
    pass


class TooFewTrajectories(GrangerDRError):
    pass


class DomainError(GrangerDRError):
    pass


# degenerate data
class EmptyPanel(GrangerDRError):
    exit_code = 4


class SingularSystem(GrangerDRError):
    exit_code = 4


class DegenerateCandidate(GrangerDRError):
    exit_code = 4


class TooFewSamples(GrangerDRError):
    exit_code = 4


class NonFiniteScores(GrangerDRError):
    exit_code = 4


class DegenerateLabels(GrangerDRError):
    exit_code = 4


# input / output
class ParseError(GrangerDRError):
    exit_code = 3

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class InconsistentSchema(ParseError):
    pass


class UnevenTrajectories(ParseError):
    pass


class UnknownGene(ParseError):
    pass


class SchemaVersionMismatch(ParseError):
    pass
