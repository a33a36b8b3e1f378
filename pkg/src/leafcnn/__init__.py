"""Training and one-vs-rest evaluation toolkit for small-image multiclass classification."""

__version__ = "0.1.0"
