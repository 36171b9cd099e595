"""Bridge error taxonomy, mapped onto exit codes by the CLI."""


class BridgeError(Exception):
    """Processing failure (missing checkpoint, unreadable files): exit 1."""


class SchemaError(BridgeError):
    """Prompt bundle violates the JSON contract: exit 2."""
