"""Exception hierarchy. Each family maps to one CLI exit code."""


class MDRError(Exception):
    exit_code = 1


class ConfigError(MDRError):
    exit_code = 2


class DataError(MDRError):
    exit_code = 3


class SchemaError(DataError):
    pass


class CSVParseError(DataError):
    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class EmptyDatasetError(DataError):
    pass


class StratificationError(DataError):
    pass


class NumericError(MDRError):
    exit_code = 4


class NotFittedError(MDRError):
    pass


class ModelFileError(DataError):
    pass


class ReportError(DataError):
    pass
