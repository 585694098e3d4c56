"""cmclab: almost-CMC surface rigidity laboratory."""

__version__ = "0.1.0"
