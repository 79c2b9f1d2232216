"""Exception hierarchy shared across the package.

Each class carries the process exit code the CLI maps it to.
"""


class AgentGraphError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParameterError(AgentGraphError):
    """A numeric or structural argument is outside its documented range."""

    exit_code = 2


class InputError(AgentGraphError):
    """A file or path could not be read or written."""

    exit_code = 3


class FormatError(AgentGraphError):
    """File contents or record schema do not match the documented format."""

    exit_code = 4


class ConfigurationError(AgentGraphError):
    """A run was requested against incompatible data or topology."""

    exit_code = 5


class RoutingFault(AgentGraphError):
    """A message addressed a global vertex id unknown to the receiving partition."""

    exit_code = 1
