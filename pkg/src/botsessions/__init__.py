"""Session-level behavioral analysis and bot detection on timestamped post streams."""

__version__ = "0.1.0"
