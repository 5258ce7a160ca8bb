# app/errors.py
"""
Exception types shared by the engines, the CLI and the HTTP routes.
Each carries the process exit code the CLI reports for it.
"""


class ConfigError(ValueError):
    exit_code = 2

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NonConvergenceError(RuntimeError):
    exit_code = 3


class OutputError(OSError):
    exit_code = 4
