class ConfigError(ValueError):
    """Raised when a configuration value is out of its legal range."""


class PolicyDivergence(RuntimeError):
    """Raised when the policy network produces non-finite outputs."""
