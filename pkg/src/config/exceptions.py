"""Exceptions for experiment configuration."""

from src.infrastructure.errors import ExitCode, LabError


class ConfigError(LabError):
    """Exception raised when an experiment file cannot be read or validated."""

    def __init__(self, message: str):
        super().__init__(exit_code=ExitCode.CONFIG_ERROR, detail=message)


class MissingSectionError(ConfigError):
    """Exception raised when a subcommand needs a section the file does not have."""

    def __init__(self, section: str):
        self.section = section
        super().__init__(f"Missing section [{section}] in the experiment file")
