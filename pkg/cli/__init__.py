"""CLI parser modules; command implementations live in ``cli.commands``."""
