"""Single-shot guest worker for candidate solver programs."""

__version__ = "0.1.0"
