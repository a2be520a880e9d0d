"""Lead-bias corpus construction and extractive summarization evaluation."""

__version__ = "0.1.0"
