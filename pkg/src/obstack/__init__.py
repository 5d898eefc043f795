"""obstack: a self-contained, sustainability-oriented observability stack."""

__version__ = "0.1.0"
