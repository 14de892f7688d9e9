"""Task-based generative-AI exposure index: rating, aggregation, and validation pipeline."""

__version__ = "0.1.0"
