"""AMR gene drug-class classification with LLM backends and local alignment."""

__version__ = "0.1.0"
