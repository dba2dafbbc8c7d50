"""``python -m zodd`` dispatches to the command-line interface."""

from .harness.cli import entry

entry()
