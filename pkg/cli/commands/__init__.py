"""CLI command functions, imported lazily by the parsers."""
