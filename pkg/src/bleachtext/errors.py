"""Exception hierarchy shared by every module."""


class BleachError(Exception):
    """Base class for all errors raised by bleachtext."""


class ValidationError(BleachError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class ConfigurationError(ValidationError):
    """Incompatible combination of options (e.g. Frequency without a table)."""


class HygieneError(BleachError):
    """A test user leaked into training data, frequency table or vocabulary."""


class ModelFileError(ValidationError):
    """Model file could not be read back."""


class ChecksumError(ModelFileError):
    pass


class VersionError(ModelFileError):
    pass


class TruncatedModelError(ModelFileError):
    pass
