"""Allow `python3 -m groupauth` as an alias for the `groupauth` command."""

from .cli import entrypoint

entrypoint()
