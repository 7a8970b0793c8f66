class DslError(Exception):
    """Base for every error raised while reading a text file."""


class ParseError(DslError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class SemanticError(DslError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class CycleError(SemanticError):
    """A combinational loop in a netlist."""
