class UrlParseError(ValueError):
    """Raised when a raw URL cannot be parsed into host and path."""

    def __init__(self, raw):
        super().__init__(f"malformed URL: {raw!r}")
        self.raw = raw


class UnknownGroupError(ValueError):
    def __init__(self, label, permitted):
        super().__init__(
            f"unknown group label {label!r}; permitted labels: {', '.join(permitted)}"
        )
        self.label = label
        self.permitted = tuple(permitted)


class SupercriticalError(ValueError):
    """Raised when an operation needs spectral radius < 1 and did not get it."""

    def __init__(self, radius, context="operation"):
        super().__init__(
            f"{context} requires a subcritical weight matrix; spectral radius = {radius:.6g}"
        )
        self.radius = radius


class ConfigError(ValueError):
    pass
