"""Exception hierarchy shared by the library and the command line tool."""


class OmniSurfError(Exception):
    """Base class; ``code`` is the machine-readable tag printed by the CLI."""

    code = "E_INTERNAL"
    exit_status = 1


class ConfigError(OmniSurfError, ValueError):
    """Malformed or semantically invalid configuration (scenario, table, flags)."""

    code = "E_CONFIG"
    exit_status = 2

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None and line is not None:
            where = f"{source}:{line}: "
        elif line is not None:
            where = f"line {line}: "
        elif source is not None:
            where = f"{source}: "
        super().__init__(where + message)


class DomainError(OmniSurfError, ValueError):
    """A physically meaningless request (bad angle, side/mode mismatch, ...)."""

    code = "E_DOMAIN"
    exit_status = 3


class DegenerateGeometryError(DomainError):
    """Antenna on the surface plane or coincident with an element."""

    code = "E_GEOMETRY"
