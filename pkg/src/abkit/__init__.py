"""abkit: annotation-byproduct collection, quality control, analytics, and training."""

__version__ = "0.1.0"
