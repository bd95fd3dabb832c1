"""vidsleuth: fact-check a video's caption track and draft grounded comments."""

__version__ = "0.1.0"
